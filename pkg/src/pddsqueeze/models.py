"""Time-dependent Hamiltonians and jump operators for each model family."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke import CollectiveOperator, build_operator

FAMILIES = ("dicke", "pdd", "oat", "tact_rwa", "vc")


@dataclass(frozen=True)
class ModelSpec:
    """Which Hamiltonian family and drive parameters define H(t) and L(t).

    ``delta`` is the Jz coefficient: Delta for dicke/pdd, omega_g for vc.
    ``chi`` is taken verbatim with the family's sign convention
    (+chi cos(wt) Jx^2 for dicke/pdd, -chi0 cos(wt) Jx^2 for vc).
    All rates in rad/s with hbar = 1.
    """

    family: str
    N: int
    delta: float = 0.0
    chi: float = 1.0
    omega: float = 0.0
    gamma0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.gamma0 < 0:
            raise ValueError(f"gamma0 must be >= 0, got {self.gamma0}")
        if self.family == "pdd":
            # parametric resonance is part of the family definition
            if self.omega and not math.isclose(abs(self.omega), abs(2.0 * self.delta), rel_tol=1e-12):
                raise ValueError(f"pdd requires omega = 2 delta, got omega={self.omega}, delta={self.delta}")
            object.__setattr__(self, "omega", 2.0 * self.delta)
        if self.family in ("oat", "tact_rwa"):
            object.__setattr__(self, "delta", 0.0)
            object.__setattr__(self, "omega", 0.0)

    @property
    def linear_frequency(self):
        """Coefficient of the bare Jz term (0 for oat/tact_rwa)."""
        return self.delta if self.family in ("dicke", "pdd", "vc") else 0.0

    @property
    def fastest_frequency(self):
        return max(abs(self.delta), abs(self.omega), self.N * abs(self.chi))


def nonlinear_coefficient(spec, t):
    """Scalar multiplying the nonlinear operator at time t."""
    if spec.family in ("dicke", "pdd"):
        return spec.chi * math.cos(spec.omega * t)
    if spec.family == "vc":
        return -spec.chi * math.cos(spec.omega * t)
    if spec.family == "oat":
        return -spec.chi / 2
    return spec.chi


def nonlinear_kind(spec):
    return {"dicke": "jx2", "pdd": "jx2", "vc": "jx2", "oat": "jz2", "tact_rwa": "tact"}[spec.family]


def hamiltonian_at(spec, t):
    """H(t) for the model family, hbar = 1.

    dicke/pdd: Delta Jz + chi cos(wt) Jx^2
    vc:        omega_g Jz - chi0 cos(wt) Jx^2
    oat:       -(chi/2) Jz^2
    tact_rwa:  (chi/8)(J+^2 + J-^2)
    """
    op = build_operator(nonlinear_kind(spec), spec.N)
    mat = nonlinear_coefficient(spec, t) * op.matrix
    if spec.linear_frequency:
        mat = mat + spec.linear_frequency * build_operator("jz", spec.N).matrix
    return CollectiveOperator(spec.N, mat, "hamiltonian")


def decay_rate(spec, t):
    """Gamma0 |cos(wt)|; constant Gamma0 when omega = 0."""
    return spec.gamma0 * abs(math.cos(spec.omega * t))


def jump_at(spec, t):
    """sqrt(Gamma0 |cos(wt)|) Jx, or None for a closed system."""
    if spec.gamma0 == 0:
        return None
    jx = build_operator("jx", spec.N)
    return CollectiveOperator(spec.N, math.sqrt(decay_rate(spec, t)) * jx.matrix, "jump")


@dataclass(frozen=True)
class DriveSample:
    beta: complex
    delta_c_prime: float
    eta: complex
    diverges: bool


def drive_profile(beta0, omega, delta_c_prime0, kappa, t):
    """Injected-field profile that turns the cavity model into the PDD model.

    beta(t) = beta0 sqrt(cos wt) (principal root), Delta_c'(t) flips sign with
    cos wt, and eta(t) is the pump that produces this beta exactly under
    d beta/dt = -i(Delta_c' - i kappa/2) beta - i eta. The velocity term
    carries sin(wt)/sqrt(cos wt) and diverges where cos(wt) = 0; there eta is
    reported as complex infinity with ``diverges`` set.
    """
    if omega <= 0:
        raise ValueError("drive frequency must be positive")
    c = math.cos(omega * t)
    s = math.sin(omega * t)
    root = np.sqrt(complex(c))
    beta = beta0 * root
    dcp = delta_c_prime0 * (1.0 if c >= 0 else -1.0)
    # cos(wt) is never exactly zero in floating point; treat near-zeros as the kink
    if abs(c) < 1e-12:
        return DriveSample(complex(beta), dcp, complex(math.inf, math.inf), True)
    eta = -0.5j * omega * beta0 * s / root - beta0 * (dcp - 0.5j * kappa) * root
    return DriveSample(complex(beta), dcp, complex(eta), False)


def t_peak_estimate(N, chi):
    """Time of maximal QFI for the PDD model, [ln(N^2) + 4] / (N |chi|)."""
    if chi == 0:
        raise ValueError("chi must be nonzero")
    return (math.log(N ** 2) + 4) / (N * abs(chi))


def oat_plateau_time(N, chi):
    """OAT reaches its N(N+1)/2 plateau around 4 / (sqrt(N) |chi|)."""
    if chi == 0:
        raise ValueError("chi must be nonzero")
    return 4 / (math.sqrt(N) * abs(chi))
