"""Bayesian phase reconstruction from repeated Jz measurements.

The state is rotated by pi/2 about its optimal generator G, the phase is
encoded as exp(-i phi G), and each Jz outcome multiplies a gridded posterior
by the Born-rule likelihood P(m|phi). Randomness comes from numpy's Philox
counter-based generator seeded with the caller's 64-bit seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke import axis_operator, rotate
from .errors import InvariantError
from .metrology import qcrb_sigma, qfim

RNG_NAME = "numpy.random.Philox"
GRID_SIZE = 4096
REFINE_FACTOR = 4
REFINE_BELOW = 10  # grid spacings
# P(m|phi) = P(m|pi - phi) for a Jz readout after a pi/2 pulse, so a full
# 2 pi prior is bimodal; the half-width window removes the mirror image
PRIOR_WINDOW = (-math.pi / 2, math.pi / 2)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class PhasePosterior:
    grid: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.grid.size != self.weights.size:
            raise ValueError("grid and weights differ in length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-9:
            raise InvariantError("posterior weights must be nonnegative and sum to 1")

    @property
    def spacing(self):
        return float(self.grid[1] - self.grid[0])

    def mean(self):
        return float(np.dot(self.grid, self.weights))

    def std(self):
        mu = self.mean()
        return float(math.sqrt(max(np.dot((self.grid - mu) ** 2, self.weights), 0.0)))


def flat_posterior(lo=-math.pi / 2, hi=math.pi / 2, size=GRID_SIZE):
    grid = lo + (hi - lo) * np.arange(size) / size
    return PhasePosterior(grid, np.full(size, 1.0 / size))


@dataclass(frozen=True)
class ProtocolResult:
    sigma_curve: list   # (M, sigma) pairs
    qcrb_curve: list    # (M, 1/sqrt(M lambda_max)) pairs
    seed: int
    lambda_max: float
    generator: np.ndarray
    posterior: PhasePosterior
    rng: str = RNG_NAME

    @property
    def ms(self):
        return np.array([m for m, _ in self.sigma_curve])

    @property
    def sigmas(self):
        return np.array([s for _, s in self.sigma_curve])

    @property
    def bounds(self):
        return np.array([s for _, s in self.qcrb_curve])


class _Likelihood:
    """P(m | phi) = diag(e^{-i phi G} rho e^{i phi G}) evaluated on phase grids."""

    def __init__(self, state, generator):
        g = np.asarray(generator, dtype=float)
        if g.shape != (3,) or abs(np.linalg.norm(g) - 1) > 1e-9:
            raise ValueError("generator must be a unit 3-vector")
        self.w, self.V = np.linalg.eigh(axis_operator(state.n_atoms, g))
        if state.is_pure:
            comps = [(1.0, state.data)]
        else:
            p, vecs = np.linalg.eigh(state.data)
            keep = p > 1e-12 * p.max()
            comps = list(zip(p[keep], vecs[:, keep].T))
        # each component expressed in the generator eigenbasis
        self.comps = [(float(pk), self.V.conj().T @ v) for pk, v in comps]

    def table(self, phis):
        phis = np.atleast_1d(phis)
        out = np.zeros((phis.size, self.V.shape[0]))
        for pk, c in self.comps:
            amps = (np.exp(-1j * np.outer(phis, self.w)) * c[None, :]) @ self.V.T
            out += pk * np.abs(amps) ** 2
        out = np.clip(out, 0.0, None)
        return out / out.sum(axis=1, keepdims=True)


def measurement_distribution(state, generator, phi):
    """Probability of each Jz outcome (ascending m) after encoding phi with G."""
    return _Likelihood(state, generator).table(phi)[0]


def record_points(M_max, per_decade=10):
    """Logarithmically spaced measurement counts 1..M_max."""
    n = max(2, int(per_decade * math.log10(max(M_max, 10))) + 1)
    pts = np.unique(np.round(np.logspace(0, math.log10(M_max), n)).astype(int))
    return [int(p) for p in pts if 1 <= p <= M_max]


def prepare_probe(state):
    """QFIM, optimal generator and the pi/2-rotated probe state."""
    res = qfim(state)
    gen = res.optimal_generator
    return res, gen, rotate(state, gen, math.pi / 2)


def run_protocol(state, M_max, phi_true=0.0, seed=0, grid_size=GRID_SIZE,
                 window=PRIOR_WINDOW, record_at=None, refine=True):
    """Simulate M_max Jz measurements and track the posterior width.

    The posterior is kept in log form as sum_m n_m log P(m|phi), so the grid
    can be rebuilt at any time from the outcome counts. When sigma drops
    below REFINE_BELOW grid spacings, the grid is rebuilt around the
    posterior mean with REFINE_FACTOR times finer spacing. The prior is flat
    on ``window`` (half-open, ``grid_size`` points).
    """
    if M_max < 1:
        raise ValueError("M_max must be >= 1")
    res, gen, probe = prepare_probe(state)
    lik = _Likelihood(probe, gen)
    rng = make_rng(seed)
    p_true = lik.table(phi_true)[0]
    outcomes = rng.choice(p_true.size, size=M_max, p=p_true)

    lo, hi = window
    grid = lo + (hi - lo) * np.arange(grid_size) / grid_size
    with np.errstate(divide="ignore"):
        log_l = np.log(lik.table(grid))
    log_post = np.zeros(grid_size)
    counts = np.zeros(p_true.size)
    marks = set(record_at or record_points(M_max))
    sigma_curve, qcrb_curve = [], []
    post = None

    for M in range(1, M_max + 1):
        m = outcomes[M - 1]
        counts[m] += 1
        log_post += log_l[:, m]
        top = log_post.max()
        if not np.isfinite(top):
            raise InvariantError(f"posterior underflowed on every grid point after M={M}")
        log_post -= top
        if M in marks or M == M_max:
            weights = np.exp(log_post)
            post = PhasePosterior(grid, weights / weights.sum())
            sigma = post.std()
            if refine and sigma < REFINE_BELOW * post.spacing:
                grid, log_l, log_post = _refine(lik, post, counts, grid_size)
                weights = np.exp(log_post)
                post = PhasePosterior(grid, weights / weights.sum())
                sigma = post.std()
            if M in marks:
                sigma_curve.append((M, sigma))
                qcrb_curve.append((M, qcrb_sigma(res.lambda_max, M)))
    return ProtocolResult(sigma_curve, qcrb_curve, int(seed), res.lambda_max,
                          np.array(gen), post)


def _refine(lik, post, counts, grid_size):
    width = post.spacing * grid_size / REFINE_FACTOR
    while True:
        center = post.mean()
        grid = center - width / 2 + width * np.arange(grid_size) / grid_size
        with np.errstate(divide="ignore"):
            log_l = np.log(lik.table(grid))
        nz = counts > 0
        log_post = log_l[:, nz] @ counts[nz]
        log_post -= log_post.max()
        w = np.exp(log_post)
        w /= w.sum()
        sigma = math.sqrt(np.dot((grid - np.dot(grid, w)) ** 2, w))
        if sigma >= REFINE_BELOW * width / grid_size or width < 1e-9:
            return grid, log_l, log_post
        width /= REFINE_FACTOR
