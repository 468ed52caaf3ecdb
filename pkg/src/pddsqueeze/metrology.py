"""Quantum Fisher information matrix over (Jx, Jy, Jz) and derived figures of merit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke import spin_matrices
from .errors import InvariantError

RANK_EPS = 1e-12


@dataclass(frozen=True)
class QfimResult:
    """QFIM with its spectrum sorted descending.

    ``generators[:, i]`` is the unit vector for ``eigenvalues[i]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    generators: np.ndarray

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])

    @property
    def optimal_generator(self):
        return self.generators[:, 0]

    @property
    def degeneracy_gap(self):
        """lambda_max - lambda_2; near zero means the optimal generator is ambiguous."""
        return float(self.eigenvalues[0] - self.eigenvalues[1])


def _fix_sign(v):
    for x in v:
        if abs(x) > 1e-12:
            return v if x > 0 else -v
    return v


def qfim(state, rank_eps=RANK_EPS):
    """QFIM from the spectral decomposition of rho.

    F_mn = sum_{i,j} 2 (p_i - p_j)^2 / (p_i + p_j) Re[<i|J_m|j><j|J_n|i>],
    skipping pairs with p_i + p_j <= rank_eps (relative to the trace).
    """
    if state.is_pure:
        psi = state.data
        # rank-1 spectrum: only pairs with the occupied vector contribute,
        # which reduces to 4 Cov(J_m, J_n)
        ops = spin_matrices(state.n_atoms)
        vs = [op @ psi for op in ops]
        means = [np.vdot(psi, v) for v in vs]
        F = np.empty((3, 3))
        for a in range(3):
            for b in range(a, 3):
                F[a, b] = F[b, a] = 4 * (np.vdot(vs[a], vs[b]) - means[a] * means[b]).real
        return _finish(F, state.n_atoms)
    rho = state.data
    try:
        p, V = np.linalg.eigh((rho + rho.conj().T) / 2)
    except np.linalg.LinAlgError as exc:
        raise InvariantError(f"eigendecomposition failed: {exc}") from exc
    p = np.clip(p, 0.0, None)
    tr = p.sum()
    s = p[:, None] + p[None, :]
    keep = s > rank_eps * tr
    W = np.zeros_like(s)
    W[keep] = 2 * (p[:, None] - p[None, :])[keep] ** 2 / s[keep]
    A = [V.conj().T @ op @ V for op in spin_matrices(state.n_atoms)]
    F = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            F[a, b] = F[b, a] = np.sum(W * (A[a] * A[b].T).real)
    return _finish(F, state.n_atoms)


def _finish(F, N):
    F = (F + F.T) / 2
    lam, vec = np.linalg.eigh(F)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = np.column_stack([_fix_sign(vec[:, i] / np.linalg.norm(vec[:, i])) for i in order])
    if lam[-1] < -1e-8 * max(1.0, N) or lam[0] > N * N * (1 + 1e-6):
        raise InvariantError(f"QFIM spectrum {lam} outside [0, N^2]")
    return QfimResult(F, lam, vec)


def qfim_curve(states, as_array=True):
    """qfim for each state; with as_array, an (n, 3) array of sorted eigenvalues."""
    results = [qfim(s) for s in states]
    if as_array:
        return np.array([r.eigenvalues for r in results])
    return results


def qcrb_sigma(lambda_max, M=1):
    """Quantum Cramer-Rao bound 1 / sqrt(M lambda_max)."""
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    if M < 1:
        raise ValueError("M must be >= 1")
    return 1.0 / math.sqrt(M * lambda_max)


def db_gain(lambda_max, N):
    """Gain over the standard quantum limit, 10 log10(sqrt(lambda_max / N))."""
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    return 10 * math.log10(math.sqrt(lambda_max / N))


def circular_moment(state):
    """<e^{i phi}> = sum_m c*_{m+1} c_m for a pure state."""
    if not state.is_pure:
        raise ValueError("the circular phase moment is defined here for pure states only")
    c = state.data
    return complex(np.sum(c[1:].conj() * c[:-1]))


def holevo_variance(state):
    """Holevo phase variance |<e^{i phi}>|^-2 - 1; infinite for phase-symmetric states."""
    mag = abs(circular_moment(state))
    if mag < 1e-12:
        return math.inf
    return 1.0 / mag ** 2 - 1.0
