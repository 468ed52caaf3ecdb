"""Effective spin-model rates for the vertical-cavity setup, from lab-level inputs.

All frequencies are angular (rad/s). Detunings keep their sign; everything
else must be positive. A single wavenumber ``k`` is used for pump, cavity
and recoil.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .models import ModelSpec

TWO_PI = 2 * math.pi
LEDGER_THRESHOLD = 5.0
LEDGER_COMFORTABLE = 10.0


@dataclass(frozen=True)
class LabInputs:
    """Lab parameters. Give either (k, g, tau) or ``kg_tau`` directly."""

    Lambda: float
    gamma: float
    kappa: float
    Delta_a: float
    Delta_c: float
    eta0: float
    omega_r: float
    N: int
    tau: float | None = None
    k: float | None = None
    g: float | None = None
    kg_tau: float | None = None

    def __post_init__(self):
        for name in ("Lambda", "gamma", "kappa", "eta0", "omega_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        given = [x is not None for x in (self.tau, self.k, self.g)]
        if all(given):
            for name in ("tau", "k", "g"):
                if not getattr(self, name) > 0:
                    raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        elif any(given):
            raise ValueError("tau, k and g must be given together")
        elif self.kg_tau is None:
            raise ValueError("need either (k, g, tau) or kg_tau")

    def resolved_kg_tau(self):
        # exact inputs win over a rounded direct value
        if self.k is not None:
            return self.k * self.g * self.tau
        return self.kg_tau


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    inequality: str
    ratio: float

    @property
    def passed(self):
        return self.ratio >= LEDGER_THRESHOLD

    @property
    def marginal(self):
        return self.passed and self.ratio < LEDGER_COMFORTABLE * (1 - 1e-9)

    @property
    def status(self):
        if not self.passed:
            return "fail"
        return "warn" if self.marginal else "ok"


@dataclass(frozen=True)
class Ledger:
    entries: tuple

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def ratios(self):
        return {e.name: e.ratio for e in self.entries}

    def __getitem__(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


@dataclass(frozen=True)
class CavityParams:
    U0: float
    Delta_c_prime: float
    beta0: float
    chi0: float
    Gamma0: float
    omega_g: float
    epsilon: float
    ledger: Ledger | None = field(default=None, compare=False)


def stark_shift(Lambda, Delta_a, gamma):
    """U0 = (1/2) Lambda^2 Delta_a / (Delta_a^2 + gamma^2/4)."""
    den = Delta_a ** 2 + gamma ** 2 / 4
    if den <= 0:
        raise ValueError("Delta_a^2 + gamma^2/4 must be positive")
    return 0.5 * Lambda ** 2 * Delta_a / den


def injected_field(eta, Delta_c_prime, kappa):
    """Steady injected field beta = -eta / (Delta_c' - i kappa/2)."""
    if Delta_c_prime == 0:
        raise ZeroDivisionError("dressed cavity detuning is zero")
    return -eta / complex(Delta_c_prime, -kappa / 2)


def vc_rates(Delta_c_prime, U0, beta0, kappa):
    """(chi0, Gamma0) for injected amplitude |beta0|.

    chi0 = Delta_c' U0^2 |beta0|^2 / (Delta_c'^2 + kappa^2/4)
    Gamma0 = kappa U0^2 |beta0|^2 / (Delta_c'^2 + kappa^2/4)
    """
    den = Delta_c_prime ** 2 + kappa ** 2 / 4
    if den == 0:
        raise ZeroDivisionError("dressed cavity detuning and kappa both zero")
    s = U0 ** 2 * abs(beta0) ** 2 / den
    return Delta_c_prime * s, kappa * s


def momentum_gap(omega_r, kg_tau):
    """omega_g = 4 omega_r - 2 k g tau."""
    return 4 * omega_r - 2 * kg_tau


def derive(inputs):
    """All effective rates plus the approximation ledger."""
    U0 = stark_shift(inputs.Lambda, inputs.Delta_a, inputs.gamma)
    dcp = inputs.Delta_c - inputs.N * U0
    if dcp == 0:
        raise ZeroDivisionError("dressed cavity detuning Delta_c - N U0 is zero")
    beta0 = abs(injected_field(inputs.eta0, dcp, inputs.kappa))
    chi0, gamma0 = vc_rates(dcp, U0, beta0, inputs.kappa)
    params = CavityParams(
        U0=U0,
        Delta_c_prime=dcp,
        beta0=beta0,
        chi0=chi0,
        Gamma0=gamma0,
        omega_g=momentum_gap(inputs.omega_r, inputs.resolved_kg_tau()),
        epsilon=U0 / dcp,
    )
    return replace(params, ledger=approximation_ledger(params, inputs))


def approximation_ledger(params, inputs):
    """Ratios A/B for each A >> B assumed by the effective model.

    N is taken from ``inputs``, so a ledger can be re-evaluated at a
    different atom number with the rates held fixed.
    """
    N = inputs.N
    u_beta2 = abs(params.U0) * params.beta0 ** 2
    kgt = inputs.resolved_kg_tau()
    rows = [
        ("excited-state elimination", "|Delta_a| >> sqrt(N) Lambda",
         abs(inputs.Delta_a) / (math.sqrt(N) * inputs.Lambda)),
        ("cavity elimination 1", "|Delta_c'| >> N |chi0|",
         abs(params.Delta_c_prime) / (N * abs(params.chi0))),
        ("cavity elimination 2", "|Delta_c'| >> |U0| |beta0|^2",
         abs(params.Delta_c_prime) / u_beta2),
        ("perturbation", "1 >> N |epsilon| / 2",
         2 / (N * abs(params.epsilon))),
        ("single momentum flips", "12 k g tau >> |U0| |beta0|^2",
         12 * abs(kgt) / u_beta2),
        ("unwanted pair creation", "16 omega_r >> N |chi0|",
         16 * inputs.omega_r / (N * abs(params.chi0))),
    ]
    return Ledger(tuple(LedgerEntry(*r) for r in rows))


def format_ledger(ledger):
    """Plain-text table of the ledger."""
    w = max(len(e.name) for e in ledger.entries)
    v = max(len(e.inequality) for e in ledger.entries)
    lines = [f"{'approximation':<{w}}  {'inequality (A >> B)':<{v}}  {'A/B':>10}  status"]
    for e in ledger.entries:
        lines.append(f"{e.name:<{w}}  {e.inequality:<{v}}  {e.ratio:>10.4g}  {e.status}")
    lines.append(f"overall: {'pass' if ledger.passed else 'fail'} (threshold {LEDGER_THRESHOLD:g})")
    return "\n".join(lines)


def vertical_cavity_preset():
    """Rb-87 D2 line in the 780 nm vertical cavity, 20 ms drop, N = 100."""
    return LabInputs(
        Lambda=TWO_PI * 0.5e6,
        gamma=TWO_PI * 6.066e6,
        kappa=TWO_PI * 56e3,
        Delta_a=TWO_PI * 50e6,
        Delta_c=TWO_PI * 5.1e6,
        eta0=TWO_PI * 33e6,
        omega_r=TWO_PI * 3.77e3,
        N=100,
        tau=20e-3,
        k=TWO_PI / 780e-9,
        g=9.81,
    )


def vc_model(params, N, modulated=True):
    """ModelSpec for the vc family; modulated drives at omega = 2 |omega_g|."""
    omega = 2 * abs(params.omega_g) if modulated else 0.0
    return ModelSpec("vc", N, delta=params.omega_g, chi=params.chi0,
                     omega=omega, gamma0=params.Gamma0)
