"""Fixed-step RK4 integration of the collective master equation.

    drho/dt = -i[H(t), rho] + D[L(t)] rho,   D[O]rho = O rho O^+ - {O^+ O, rho}/2

Pure initial states of closed systems are propagated as amplitude vectors.
For the families with a bare Delta Jz term the integration runs in the frame
rotating with that term, which is removed exactly; recorded states are always
returned in the lab frame.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dicke import DickeState, build_operator, m_values, spin_matrices
from .errors import DimensionError, InvariantError, StepSizeError
from .models import (ModelSpec, decay_rate, hamiltonian_at, jump_at,
                     nonlinear_coefficient, nonlinear_kind)

log = logging.getLogger(__name__)

ABORT_TOL = 1e-6
STEPS_PER_PERIOD = 100
MIN_STEPS_PER_PERIOD = 40


@dataclass(frozen=True)
class StepControl:
    """RK4 step settings. ``dt=None`` selects the default for the model."""

    dt: float | None = None
    record_every: int = 1
    renormalize: bool = True
    interaction_picture: bool = True

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise StepSizeError(f"dt must be positive, got {self.dt}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: list
    model: ModelSpec
    dt: float
    records: list = field(default_factory=list)

    def rotating_frame(self):
        """Recorded states moved into the frame of the bare Jz term."""
        w = self.model.linear_frequency
        return [to_rotating_frame(s, w, t) for s, t in zip(self.states, self.times)]


def lindblad_rhs(state, H, L=None):
    """-i[H, rho] + D[L] rho for a density matrix."""
    rho = state.density_matrix() if isinstance(state, DickeState) else np.asarray(state)
    h = getattr(H, "matrix", H)
    if h.shape != rho.shape:
        raise DimensionError(f"Hamiltonian shape {h.shape} vs state {rho.shape}")
    out = -1j * (h @ rho - rho @ h)
    if L is not None:
        lm = getattr(L, "matrix", L)
        if lm.shape != rho.shape:
            raise DimensionError(f"jump shape {lm.shape} vs state {rho.shape}")
        ldl = lm.conj().T @ lm
        out = out + lm @ rho @ lm.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def _frame_phases(N, w, t):
    return np.exp(-1j * w * t * m_values(N))


def to_rotating_frame(state, delta, t):
    """U^+ rho U with U = exp(-i delta t Jz)."""
    if delta == 0 or t == 0:
        return state
    u = _frame_phases(state.n_atoms, delta, t)
    if state.is_pure:
        return DickeState.pure(u.conj() * state.data, validate=state.validate)
    rho = u.conj()[:, None] * state.data * u[None, :]
    return DickeState.mixed(rho, validate=state.validate)


def _from_rotating_frame(data, N, delta, t):
    if delta == 0:
        return data
    u = _frame_phases(N, delta, t)
    if data.ndim == 1:
        return u * data
    return u[:, None] * data * u.conj()[None, :]


def _bands(mat, offsets):
    """Diagonals of ``mat``: v[i] = mat[i, i + d], zero-padded to full length."""
    n = mat.shape[0]
    out = {}
    for d in offsets:
        v = np.zeros(n, dtype=complex)
        diag = np.diagonal(mat, d)
        if d >= 0:
            v[:n - d] = diag
        else:
            v[-d:] = diag
        out[d] = v
    return out


def _band_dot(bands, y):
    """Banded matrix times a vector or matrix, O(n * bandwidth)."""
    n = y.shape[0]
    out = np.zeros_like(y)
    col = (slice(None),) + (None,) * (y.ndim - 1)
    for d, v in bands.items():
        if d >= 0:
            out[:n - d] += v[:n - d][col] * y[d:]
        else:
            out[-d:] += v[-d:][col] * y[:n + d]
    return out


def _combine(*terms):
    out = {}
    for coef, bands in terms:
        if coef == 0:
            continue
        for d, v in bands.items():
            out[d] = out[d] + coef * v if d in out else coef * v
    return out


class _Generator:
    """Banded H(t), X(t), X(t)^2 and decay rate in the integration frame.

    The jump is sqrt(rate(t)) X(t) with X the frame image of Jx, so D[L]
    needs only X, X^2 and the scalar rate. All collective operators here are
    banded in the Dicke basis (X tridiagonal, X^2 and J+^2 offsets 0 and +-2).
    """

    def __init__(self, spec, interaction):
        self.spec = spec
        N = spec.N
        self.w = spec.linear_frequency if interaction else 0.0
        jx, jy, jz = spin_matrices(N)
        self.jx = _bands(jx, (-1, 1))
        self.jy = _bands(jy, (-1, 1))
        self.jx2 = _bands(jx @ jx, (-2, 0, 2))
        self.jy2 = _bands(jy @ jy, (-2, 0, 2))
        self.jxy = _bands(jx @ jy + jy @ jx, (-2, 0, 2))
        self.kind = nonlinear_kind(spec)
        self.nl = _bands(build_operator(self.kind, N).matrix, (-2, 0, 2))
        self.lab_linear = None
        if not interaction and spec.linear_frequency:
            self.lab_linear = _bands(spec.linear_frequency * jz, (0,))
        self.open = spec.gamma0 > 0

    def x_ops(self, t):
        if self.w == 0:
            return self.jx, self.jx2
        c, s = math.cos(self.w * t), math.sin(self.w * t)
        x = _combine((c, self.jx), (-s, self.jy))
        x2 = _combine((c * c, self.jx2), (s * s, self.jy2), (-c * s, self.jxy))
        return x, x2

    def at(self, t):
        x, x2 = self.x_ops(t)
        coef = nonlinear_coefficient(self.spec, t)
        h = _combine((coef, x2 if self.kind == "jx2" else self.nl))
        if self.lab_linear is not None:
            h = _combine((1.0, h), (1.0, self.lab_linear))
        rate = decay_rate(self.spec, t) if self.open else 0.0
        return h, x, x2, rate

    def norm_bound(self):
        """Cheap upper bound on ||H(t)|| in the integration frame."""
        j = self.spec.N / 2
        scale = {"jx2": 1.0, "jz2": 0.5, "tact": 0.25}[self.kind]
        bound = scale * abs(self.spec.chi) * j * j
        if self.lab_linear is not None:
            bound += abs(self.spec.linear_frequency) * j
        return bound


def default_dt(spec, interaction=True):
    """(2 pi / omega_fast) / 100, tightened so that dt ||H|| <= 0.25."""
    dt = 2 * math.pi / spec.fastest_frequency / STEPS_PER_PERIOD
    bound = _Generator(spec, interaction).norm_bound()
    if bound > 0:
        dt = min(dt, 0.25 / bound)
    return dt


def _align_dt(spec, dt):
    # put the |cos(wt)| kinks at (k + 1/2) pi / w on the step lattice
    if spec.omega == 0:
        return dt
    half = math.pi / abs(spec.omega)
    n = math.ceil(half / (2 * dt))
    return half / (2 * n)


def _time_grid(t0, t1, dt):
    k0 = math.floor(t0 / dt + 1e-9) + 1
    k1 = math.ceil(t1 / dt - 1e-9) - 1
    inner = np.arange(k0, k1 + 1) * dt if k1 >= k0 else np.empty(0)
    inner = inner[(inner > t0 + 1e-12 * dt) & (inner < t1 - 1e-12 * dt)]
    return np.concatenate(([t0], inner, [t1]))


def evolve(initial, spec, t0, t1, ctl=None, observe=None, store_states=True):
    """Propagate ``initial`` from t0 to t1 under ``spec``.

    ``observe(t, state)`` is called at every stored time; its return
    values are collected in ``Trajectory.records``.
    Returns a Trajectory holding lab-frame states at t0, every
    ``record_every``-th step, and t1.
    """
    ctl = ctl or StepControl()
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if initial.n_atoms != spec.N:
        raise DimensionError(f"state has N={initial.n_atoms}, model has N={spec.N}")
    limit = 2 * math.pi / spec.fastest_frequency / MIN_STEPS_PER_PERIOD
    dt = ctl.dt if ctl.dt is not None else default_dt(spec, ctl.interaction_picture)
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(
            f"dt={dt:.3e} exceeds (2pi/omega_fast)/{MIN_STEPS_PER_PERIOD} = {limit:.3e} "
            f"for omega_fast={spec.fastest_frequency:.4g}")
    dt = _align_dt(spec, dt)

    gen = _Generator(spec, ctl.interaction_picture)
    w = gen.w
    N = spec.N
    pure = initial.is_pure and spec.gamma0 == 0
    if pure:
        y = initial.data.copy()
    else:
        y = initial.density_matrix()
    y = y if w == 0 else _to_frame_raw(y, N, w, t0)

    if pure:
        def rhs(t, psi):
            return -1j * _band_dot(gen.at(t)[0], psi)
    else:
        def rhs(t, rho):
            h, x, x2, rate = gen.at(t)
            k = _combine((-1j, h), (-0.5 * rate, x2))
            a = _band_dot(k, rho)
            out = a + a.conj().T
            if rate:
                # X rho X = X (X rho)^+ for Hermitian X and rho
                out += rate * _band_dot(x, _band_dot(x, rho).conj().T)
            return out

    grid = _time_grid(t0, t1, dt)
    log.debug("evolve %s N=%d dt=%.4g steps=%d %s", spec.family, N, dt, len(grid) - 1,
              "pure" if pure else "mixed")
    times, states, records = [], [], []

    def record(t, y):
        data = _from_rotating_frame(y, N, w, t)
        st = DickeState(N, data, validate=False)
        if ctl.renormalize:
            _check_state(st, t)
        times.append(t)
        if store_states:
            states.append(st)
        if observe is not None:
            records.append(observe(t, st))

    record(grid[0], y)
    nsteps = len(grid) - 1
    for i in range(nsteps):
        t, h = grid[i], grid[i + 1] - grid[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + (h / 2) * k1)
        k3 = rhs(t + h / 2, y + (h / 2) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        y = _maintain(y, pure, ctl.renormalize, grid[i + 1])
        if (i + 1) % ctl.record_every == 0 or i + 1 == nsteps:
            record(grid[i + 1], y)
    return Trajectory(np.asarray(times), states, spec, dt, records)


def _to_frame_raw(data, N, w, t):
    u = _frame_phases(N, w, t).conj()
    if data.ndim == 1:
        return u * data
    return u[:, None] * data * u.conj()[None, :]


def _maintain(y, pure, renormalize, t):
    if not np.all(np.isfinite(y)):
        raise InvariantError(f"non-finite state at t={t:.6g}")
    if pure:
        norm = np.linalg.norm(y)
        if abs(norm ** 2 - 1) > ABORT_TOL:
            raise InvariantError(f"norm drift {norm ** 2 - 1:.3e} at t={t:.6g}; reduce dt")
        return y / norm if renormalize else y
    tr = np.trace(y)
    herm = float(np.max(np.abs(y - y.conj().T)))
    if abs(tr - 1) > ABORT_TOL or herm > ABORT_TOL:
        raise InvariantError(
            f"trace drift {abs(tr - 1):.3e}, Hermiticity drift {herm:.3e} at t={t:.6g}; reduce dt")
    if renormalize:
        y = (y + y.conj().T) / 2
        y = y / np.trace(y).real
    return y


def _check_state(st, t):
    try:
        st.check(pos_tol=ABORT_TOL)
    except InvariantError as exc:
        raise InvariantError(f"at t={t:.6g}: {exc}") from exc


def simulate_lab(initial, spec, t0, t1, dt):
    """Plain lab-frame RK4 using hamiltonian_at/jump_at directly.

    Slow reference path kept for cross-checking the rotating-frame integrator.
    """
    rho = initial.density_matrix()
    grid = _time_grid(t0, t1, _align_dt(spec, dt))

    def f(t, r):
        return lindblad_rhs(r, hamiltonian_at(spec, t), jump_at(spec, t))

    for i in range(len(grid) - 1):
        t, h = grid[i], grid[i + 1] - grid[i]
        k1 = f(t, rho)
        k2 = f(t + h / 2, rho + h / 2 * k1)
        k3 = f(t + h / 2, rho + h / 2 * k2)
        k4 = f(t + h, rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return DickeState.mixed((rho + rho.conj().T) / 2 / np.trace(rho).real, validate=False)
