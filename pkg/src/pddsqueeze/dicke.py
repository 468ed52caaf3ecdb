"""Collective spin operators and states in the permutation-symmetric Dicke basis.

Basis ordering is |j=N/2, m> with m ascending, so index k = m + j.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import DimensionError, InvariantError

PURE_TOL = 1e-9
HERM_TOL = 1e-9
TRACE_TOL = 1e-9
POS_TOL = 1e-8

OPERATOR_KINDS = ("jplus", "jminus", "jx", "jy", "jz", "jx2", "jz2", "j2", "tact")
_HERMITIAN_KINDS = {"jx", "jy", "jz", "jx2", "jz2", "j2", "tact"}


def m_values(N):
    """Magnetic quantum numbers -N/2 ... N/2 in basis order."""
    return np.arange(N + 1) - N / 2


def _check_n(N):
    if int(N) != N or N < 1:
        raise ValueError(f"number of atoms must be a positive integer, got {N!r}")
    return int(N)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollectiveOperator:
    n_atoms: int
    matrix: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dim = self.n_atoms + 1
        if mat.shape != (dim, dim):
            raise DimensionError(f"operator shape {mat.shape} does not match N={self.n_atoms}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        if self.kind in _HERMITIAN_KINDS and not self.is_hermitian():
            raise InvariantError(f"operator kind {self.kind!r} built non-Hermitian")

    @property
    def dim(self):
        return self.n_atoms + 1

    def is_hermitian(self, tol=1e-12):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)) <= tol

    def scaled(self, factor, kind="custom"):
        return CollectiveOperator(self.n_atoms, factor * self.matrix, kind)

    def __add__(self, other):
        if not isinstance(other, CollectiveOperator):
            return NotImplemented
        if other.n_atoms != self.n_atoms:
            raise DimensionError("operators act on different N")
        return CollectiveOperator(self.n_atoms, self.matrix + other.matrix)


@lru_cache(maxsize=64)
def _ladder(N):
    m = m_values(N)
    j = N / 2
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); J+ lives on the first subdiagonal
    coeff = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(coeff, -1).astype(complex)
    jp.flags.writeable = False
    return jp


def spin_matrices(N):
    """Dense (Jx, Jy, Jz) for N atoms."""
    jp = _ladder(N)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = 1j * (jm - jp) / 2
    jz = np.diag(m_values(N)).astype(complex)
    return jx, jy, jz


def build_operator(kind, N):
    """Collective operator of the given kind for N atoms.

    ``tact`` is (J+^2 + J-^2)/8, the dimensionless two-axis countertwisting
    generator; scale by chi to get the Hamiltonian.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    N = _check_n(N)
    jp = _ladder(N)
    jm = jp.conj().T
    jx, jy, jz = spin_matrices(N)
    if kind == "jplus":
        mat = jp
    elif kind == "jminus":
        mat = jm
    elif kind == "jx":
        mat = jx
    elif kind == "jy":
        mat = jy
    elif kind == "jz":
        mat = jz
    elif kind == "jx2":
        mat = jx @ jx
    elif kind == "jz2":
        mat = jz @ jz
    elif kind == "j2":
        mat = jx @ jx + jy @ jy + jz @ jz
    else:
        mat = (jp @ jp + jm @ jm) / 8
    return CollectiveOperator(N, mat.copy(), kind)


def axis_operator(N, axis):
    """a.J for a unit-normalised copy of ``axis``."""
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if a.shape != (3,) or norm == 0:
        raise ValueError("rotation axis must be a nonzero 3-vector")
    a = a / norm
    jx, jy, jz = spin_matrices(N)
    return a[0] * jx + a[1] * jy + a[2] * jz


@lru_cache(maxsize=64)
def _jy_eig(N):
    _, jy, _ = spin_matrices(N)
    w, v = np.linalg.eigh(jy)
    return w, v


def rotation_matrix(N, axis, angle):
    """exp(-i angle a.J) via Hermitian eigendecomposition."""
    gen = axis_operator(N, axis)
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def _ry(N, theta):
    w, v = _jy_eig(N)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DickeState:
    """N-atom collective state: amplitude vector (pure) or density matrix.

    Invariants are checked on construction unless ``validate=False``.
    """

    n_atoms: int
    data: np.ndarray
    validate: bool = True

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        dim = self.n_atoms + 1
        if arr.shape not in ((dim,), (dim, dim)):
            raise DimensionError(f"state shape {arr.shape} does not match N={self.n_atoms}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        if self.validate:
            self.check()

    @classmethod
    def pure(cls, amplitudes, validate=True):
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps.shape[0] - 1, amps, validate)

    @classmethod
    def mixed(cls, rho, validate=True):
        rho = np.asarray(rho, dtype=complex)
        return cls(rho.shape[0] - 1, rho, validate)

    @property
    def dim(self):
        return self.n_atoms + 1

    @property
    def is_pure(self):
        return self.data.ndim == 1

    def density_matrix(self):
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def purity(self):
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real ** 2)
        rho = self.data
        return float(np.einsum("ij,ji->", rho, rho).real)

    def check(self, pos_tol=POS_TOL):
        if self.is_pure:
            norm2 = float(np.vdot(self.data, self.data).real)
            if abs(norm2 - 1) > PURE_TOL:
                raise InvariantError(f"pure state norm^2 = {norm2!r} deviates from 1")
            return
        rho = self.data
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERM_TOL:
            raise InvariantError(f"density matrix non-Hermitian by {herm:.3e}")
        tr = complex(np.trace(rho))
        if abs(tr - 1) > TRACE_TOL:
            raise InvariantError(f"density matrix trace {tr} deviates from 1")
        lmin = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
        if lmin < -pos_tol:
            raise InvariantError(f"density matrix eigenvalue {lmin:.3e} below -{pos_tol:g}")


def basis_state(N, m):
    """|j=N/2, m>."""
    N = _check_n(N)
    k = m + N / 2
    if int(k) != k or not 0 <= k <= N:
        raise ValueError(f"m={m} is not a valid magnetic number for N={N}")
    v = np.zeros(N + 1, dtype=complex)
    v[int(k)] = 1.0
    return DickeState.pure(v)


def ground_state(N):
    """All atoms down, m = -N/2."""
    return basis_state(N, -N / 2)


def maximally_mixed(N):
    N = _check_n(N)
    return DickeState.mixed(np.eye(N + 1) / (N + 1))


def coherent_state(N, theta, phi):
    """|theta, phi> = exp(-i phi Jz) exp(-i theta Jy) |down>^N."""
    N = _check_n(N)
    vec = _ry(N, theta)[:, 0]
    vec = np.exp(-1j * phi * m_values(N)) * vec
    return DickeState.pure(vec / np.linalg.norm(vec))


def bw_state(N):
    """Berry-Wiseman phase state, amplitudes sin[pi (N/2 + m + 1)/(N + 2)]."""
    N = _check_n(N)
    m = m_values(N)
    amps = np.sin(np.pi * (N / 2 + m + 1) / (N + 2)) / np.sqrt(N / 2 + 1)
    return DickeState.pure(amps.astype(complex))


def rotate(state, axis, angle):
    """Apply exp(-i angle a.J); the axis is normalised first."""
    U = rotation_matrix(state.n_atoms, axis, angle)
    if state.is_pure:
        out = U @ state.data
        return DickeState.pure(out / np.linalg.norm(out))
    rho = U @ state.data @ U.conj().T
    return DickeState.mixed((rho + rho.conj().T) / 2)


def _as_matrix(op, dim):
    mat = op.matrix if isinstance(op, CollectiveOperator) else np.asarray(op)
    if mat.shape != (dim, dim):
        raise DimensionError(f"operator shape {mat.shape} does not match state dimension {dim}")
    return mat


def expectation(state, op):
    mat = _as_matrix(op, state.dim)
    if state.is_pure:
        return complex(np.vdot(state.data, mat @ state.data))
    return complex(np.einsum("ij,ji->", state.data, mat))


def fidelity_with_pure(state, target):
    """<target|rho|target>, or |<target|psi>|^2 for a pure state."""
    if not target.is_pure:
        raise ValueError("target must be a pure state")
    if target.n_atoms != state.n_atoms:
        raise DimensionError("state and target have different N")
    t = target.data
    if state.is_pure:
        f = abs(np.vdot(t, state.data)) ** 2
    else:
        f = np.vdot(t, state.data @ t).real
    return float(min(max(f, 0.0), 1.0))


def husimi_q(state, theta_grid, phi_grid):
    """Q(theta, phi) = <theta,phi|rho|theta,phi>, shape (len(theta), len(phi))."""
    thetas = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    phis = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    if thetas.size == 0 or phis.size == 0:
        raise ValueError("theta and phi grids must be nonempty")
    N = state.n_atoms
    m = m_values(N)
    w, v = _jy_eig(N)
    # column 0 of exp(-i theta Jy) for every theta
    base = np.einsum("km,tm,m->tk", v, np.exp(-1j * np.outer(thetas, w)), v[0].conj())
    phase = np.exp(-1j * np.outer(phis, m))
    coh = base[:, None, :] * phase[None, :, :]
    flat = coh.reshape(-1, N + 1)
    if state.is_pure:
        q = np.abs(flat.conj() @ state.data) ** 2
    else:
        q = np.einsum("ak,ak->a", flat.conj(), flat @ state.data.T).real
    return np.clip(q.reshape(thetas.size, phis.size), 0.0, 1.0)


# ---------------------------------------------------------------------------
# rotation-aligned fidelity
# ---------------------------------------------------------------------------

def euler_rotation(N, alpha, beta, gamma):
    """exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz)."""
    m = m_values(N)
    return (np.exp(-1j * alpha * m)[:, None] * _ry(N, beta)) * np.exp(-1j * gamma * m)[None, :]


@dataclass(frozen=True)
class AlignedFidelity:
    fidelity: float
    angles: tuple  # zyz Euler angles (alpha, beta, gamma)
    rotated: DickeState


def aligned_fidelity(state, target, n_fft=None, n_beta=None):
    """Maximise the fidelity with ``target`` over all SU(2) rotations of ``state``.

    Coarse search: for each beta on a grid, the two z-angles are scanned at
    once with a 2-D FFT of conj(target)_k d(beta)_kl psi_l. The best
    candidates are then refined with Nelder-Mead on the exact fidelity.
    """
    if not target.is_pure:
        raise ValueError("target must be a pure state")
    if target.n_atoms != state.n_atoms:
        raise DimensionError("state and target have different N")
    N = state.n_atoms
    dim = N + 1
    if n_fft is None:
        n_fft = int(2 ** np.ceil(np.log2(4 * dim)))
    if n_beta is None:
        n_beta = max(64, 2 * dim)
    if state.is_pure:
        psi = state.data
    else:
        w, v = np.linalg.eigh(state.data)
        psi = v[:, -1]
    tconj = target.data.conj()

    betas = np.linspace(0, np.pi, n_beta)
    cands = []
    for b in betas:
        M = tconj[:, None] * _ry(N, b) * psi[None, :]
        amp = np.abs(np.fft.fft2(M, s=(n_fft, n_fft))) ** 2
        p, q = np.unravel_index(np.argmax(amp), amp.shape)
        cands.append((amp[p, q], 2 * np.pi * p / n_fft, b, 2 * np.pi * q / n_fft))
    cands.sort(key=lambda c: -c[0])

    rho = None if state.is_pure else state.data

    def neg_fid(x):
        U = euler_rotation(N, *x)
        if rho is None:
            return -abs(np.vdot(target.data, U @ psi)) ** 2
        u_t = U.conj().T @ target.data
        return -np.vdot(u_t, rho @ u_t).real

    best = None
    for _, a, b, g in cands[:4]:
        res = optimize.minimize(neg_fid, x0=[a, b, g], method="Nelder-Mead",
                                options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    angles = tuple(float(x) for x in best.x)
    U = euler_rotation(N, *angles)
    if state.is_pure:
        rotated = DickeState.pure(U @ state.data)
    else:
        r = U @ state.data @ U.conj().T
        rotated = DickeState.mixed((r + r.conj().T) / 2)
    return AlignedFidelity(min(1.0, float(-best.fun)), angles, rotated)
