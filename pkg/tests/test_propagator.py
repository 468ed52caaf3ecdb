import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from pddsqueeze.dicke import DickeState, coherent_state, ground_state, spin_matrices
from pddsqueeze.errors import DimensionError, InvariantError, StepSizeError
from pddsqueeze.models import ModelSpec
from pddsqueeze.propagator import (StepControl, default_dt, evolve, lindblad_rhs,
                                   simulate_lab, to_rotating_frame)

from conftest import random_density, random_pure

# ---------------------------------------------------------------------------
# independent references
# ---------------------------------------------------------------------------


def _dense_h(spec, t):
    jx, jy, jz = spin_matrices(spec.N)
    jp = jx + 1j * jy
    c = math.cos(spec.omega * t)
    if spec.family in ("dicke", "pdd"):
        return spec.delta * jz + spec.chi * c * jx @ jx
    if spec.family == "vc":
        return spec.delta * jz - spec.chi * c * jx @ jx
    if spec.family == "oat":
        return -spec.chi / 2 * jz @ jz
    return spec.chi / 8 * (jp @ jp + jp.conj().T @ jp.conj().T)


def _superop(spec, t):
    """Column-stacked Liouvillian: vec(A rho B) = (B^T kron A) vec(rho)."""
    n = spec.N + 1
    I = np.eye(n)
    H = _dense_h(spec, t)
    out = -1j * (np.kron(I, H) - np.kron(H.T, I))
    rate = spec.gamma0 * abs(math.cos(spec.omega * t))
    if rate:
        L = math.sqrt(rate) * spin_matrices(spec.N)[0]
        LdL = L.conj().T @ L
        out += np.kron(L.conj(), L) - 0.5 * (np.kron(I, LdL) + np.kron(LdL.T, I))
    return out


def _reference_mixed(rho0, spec, t1):
    n = rho0.shape[0]
    sol = solve_ivp(lambda t, v: _superop(spec, t) @ v, (0, t1), rho0.reshape(-1, order="F"),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(n, n, order="F")


def _reference_pure(psi0, spec, t1):
    sol = solve_ivp(lambda t, v: -1j * _dense_h(spec, t) @ v, (0, t1), psi0,
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1]


# ---------------------------------------------------------------------------
# accuracy against references
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("family", ["oat", "tact_rwa"])
def test_time_independent_matches_expm(family):
    N, t1 = 12, 0.8
    spec = ModelSpec(family, N, chi=1.3)
    psi0 = coherent_state(N, 1.1, 0.4)
    exact = expm(-1j * _dense_h(spec, 0) * t1) @ psi0.data
    # default step: accurate to ~1e-6; a 4x finer step gains ~4^4
    coarse = evolve(psi0, spec, 0.0, t1)
    np.testing.assert_allclose(coarse.states[-1].data, exact, atol=1e-5)
    fine = evolve(psi0, spec, 0.0, t1, StepControl(dt=coarse.dt / 4))
    np.testing.assert_allclose(fine.states[-1].data, exact, atol=1e-7)


@pytest.mark.parametrize("family,delta", [("dicke", 3.0), ("pdd", 2.0), ("vc", -4.0)])
def test_driven_pure_matches_adaptive_reference(family, delta):
    N, t1 = 8, 1.7
    spec = ModelSpec(family, N, delta=delta, chi=0.4, omega=2 * delta if family != "dicke" else 5.0)
    psi0 = coherent_state(N, 0.6, 0.2)
    tr = evolve(psi0, spec, 0.0, t1)
    np.testing.assert_allclose(tr.states[-1].data, _reference_pure(psi0.data, spec, t1), atol=1e-6)


@pytest.mark.parametrize("omega", [0.0, 4.0])
def test_dissipative_matches_superoperator_reference(omega, rng):
    N, t1 = 5, 1.3
    spec = ModelSpec("vc", N, delta=-2.0, chi=0.3, omega=omega, gamma0=0.2)
    rho0 = random_density(rng, N)
    tr = evolve(DickeState.mixed(rho0), spec, 0.0, t1)
    np.testing.assert_allclose(tr.states[-1].data, _reference_mixed(rho0, spec, t1), atol=1e-7)


def test_lab_and_rotating_frame_paths_agree(rng):
    N = 6
    spec = ModelSpec("vc", N, delta=-3.0, chi=0.2, omega=6.0, gamma0=0.1)
    rho0 = DickeState.mixed(random_density(rng, N))
    dt = default_dt(spec, False) / 4
    a = evolve(rho0, spec, 0.0, 1.0, StepControl(dt=dt)).states[-1].data
    b = evolve(rho0, spec, 0.0, 1.0, StepControl(dt=dt, interaction_picture=False)).states[-1].data
    c = simulate_lab(rho0, spec, 0.0, 1.0, dt).data
    np.testing.assert_allclose(a, b, atol=1e-8)
    np.testing.assert_allclose(a, c, atol=1e-8)


def _order_error(initial, spec, t1, n, ref):
    half = math.pi / spec.omega
    dt = half / (2 * n)
    out = evolve(initial, spec, 0.0, t1, StepControl(dt=dt, renormalize=False,
                                                     interaction_picture=False))
    return np.max(np.abs(out.states[-1].data - ref))


@pytest.mark.parametrize("dissipative", [False, True])
def test_rk4_convergence_order(dissipative, rng):
    N = 4
    spec = ModelSpec("dicke", N, delta=1.0, chi=0.8, omega=2.5, gamma0=0.3 if dissipative else 0.0)
    t1 = 4 * math.pi / spec.omega
    if dissipative:
        rho0 = random_density(rng, N)
        init, ref = DickeState.mixed(rho0), _reference_mixed(rho0, spec, t1)
    else:
        psi0 = random_pure(rng, N)
        init, ref = DickeState.pure(psi0), _reference_pure(psi0, spec, t1)
    e1 = _order_error(init, spec, t1, 32, ref)
    e2 = _order_error(init, spec, t1, 64, ref)
    assert 13 <= e1 / e2 <= 19


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

@given(st.integers(1, 6), st.floats(0.0, 0.5), st.integers(0, 2 ** 31))
def test_trace_hermiticity_positivity_preserved(N, gamma0, seed):
    rng = np.random.default_rng(seed)
    spec = ModelSpec("vc", N, delta=-1.0, chi=0.3, omega=2.0, gamma0=gamma0)
    rho0 = DickeState.mixed(random_density(rng, N, rank=1 + seed % (N + 1)))
    tr = evolve(rho0, spec, 0.0, 2.0, StepControl(record_every=20, renormalize=False))
    for s in tr.states:
        rho = s.data
        assert abs(np.trace(rho) - 1) < 1e-9
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
        # RK4 is not positivity preserving; rank-deficient states dip by O(1e-8)
        assert np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] > -1e-7


def test_pure_norm_preserved():
    spec = ModelSpec("pdd", 30, delta=20.0, chi=0.5)
    tr = evolve(ground_state(30), spec, 0.0, 0.5, StepControl(record_every=50, renormalize=False))
    # without renormalisation the drift stays below the abort tolerance
    for s in tr.states:
        assert abs(np.linalg.norm(s.data) - 1) < 1e-6


def test_lindblad_rhs_is_traceless_and_hermitian(rng):
    N = 5
    rho = random_density(rng, N)
    jx, _, jz = spin_matrices(N)
    d = lindblad_rhs(rho, jz + 0.3 * jx @ jx, 0.4 * jx)
    assert abs(np.trace(d)) < 1e-12
    np.testing.assert_allclose(d, d.conj().T, atol=1e-12)


# ---------------------------------------------------------------------------
# bookkeeping and errors
# ---------------------------------------------------------------------------

def test_recording_stride_and_endpoints():
    spec = ModelSpec("tact_rwa", 6, chi=1.0)
    tr = evolve(ground_state(6), spec, 0.1, 0.5, StepControl(dt=0.01, record_every=7),
                observe=lambda t, s: t)
    assert tr.times[0] == 0.1 and tr.times[-1] == 0.5
    assert tr.records == list(tr.times)
    assert len(tr.states) == len(tr.times)
    assert np.all(np.diff(tr.times) > 0)


def test_store_states_off():
    tr = evolve(ground_state(4), ModelSpec("oat", 4), 0, 0.2, store_states=False,
                observe=lambda t, s: 1)
    assert tr.states == [] and len(tr.records) == len(tr.times)


def test_rotating_frame_roundtrip(rng):
    s = DickeState.mixed(random_density(rng, 5))
    back = to_rotating_frame(to_rotating_frame(s, 2.0, 0.7), -2.0, 0.7)
    np.testing.assert_allclose(back.data, s.data, atol=1e-14)


def test_trajectory_rotating_frame_removes_precession():
    # bare precession only: in the rotating frame the state is frozen
    spec = ModelSpec("dicke", 6, delta=2.0, chi=0.0, omega=0.0)
    psi0 = coherent_state(6, 1.0, 0.0)
    tr = evolve(psi0, spec, 0.0, 1.0, StepControl(record_every=10))
    for s in tr.rotating_frame():
        np.testing.assert_allclose(s.data, psi0.data, atol=1e-10)


def test_step_size_limit():
    spec = ModelSpec("pdd", 10, delta=50.0, chi=1.0)
    with pytest.raises(StepSizeError):
        evolve(ground_state(10), spec, 0, 1, StepControl(dt=0.01))
    with pytest.raises(StepSizeError):
        StepControl(dt=-1)


def test_bad_arguments():
    spec = ModelSpec("oat", 4)
    with pytest.raises(DimensionError):
        evolve(ground_state(5), spec, 0, 1)
    with pytest.raises(ValueError):
        evolve(ground_state(4), spec, 1, 1)
    with pytest.raises(ValueError):
        StepControl(record_every=0)


def test_instability_aborts_with_invariant_error():
    spec = ModelSpec("vc", 8, delta=-1.0, chi=0.1, omega=2.0, gamma0=1e4)
    with pytest.raises(InvariantError):
        evolve(ground_state(8), spec, 0.0, 1.0)
