"""Scenario execution: config in, CSV files plus a metadata sidecar out.

Every scenario writes ``<scenario>.csv`` (and sometimes a second table) into
``output_dir``, then ``<scenario>.meta``: the fully resolved config in config
syntax, so ``run <dir>/<scenario>.meta`` reproduces the same files.
"""
from __future__ import annotations

import csv
import math
import os

import numpy as np

from . import __version__
from .bayes import RNG_NAME, record_points, run_protocol
from .cavity import derive, vc_rates
from .config import ScenarioConfig, load_config
from .dicke import (aligned_fidelity, bw_state, coherent_state, ground_state,
                    husimi_q)
from .errors import ConfigError, InvariantError
from .metrology import db_gain, qfim
from .models import ModelSpec, drive_profile, t_peak_estimate
from .propagator import StepControl, evolve

# t N |chi| window searched for the probe closest to the phase state
BW_WINDOW = (5.0, 6.2)


def initial_state(name, N, theta=0.0, phi=0.0):
    """down: all atoms in m = -j; x: +x coherent state; coherent: (theta, phi)."""
    if name == "down":
        return ground_state(N)
    if name == "x":
        return coherent_state(N, math.pi / 2, math.pi)
    if name == "coherent":
        return coherent_state(N, theta, phi)
    raise ConfigError(f"unknown initial state {name!r}; expected down, x or coherent")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise AssertionError(f"row width {len(row)} != header width {len(header)}")
            w.writerow([_cell(x) for x in row])
    return path


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _qfim_obs(t, state):
    res = qfim(state)
    return res.eigenvalues.copy(), res.optimal_generator.copy()


def _ctl(cfg):
    return StepControl(dt=cfg.dt, record_every=cfg.record_every or 1)


def _scaled_time(spec):
    """Multiplier turning model time into t N |chi|."""
    if spec.chi == 0:
        raise ConfigError("chi must be nonzero for the t N|chi| time axis")
    return spec.N * abs(spec.chi)


def _qfi_dynamics(cfg, out):
    spec = cfg.model_spec()
    init = initial_state(cfg.initial, spec.N, cfg.theta or 0.0, cfg.phi or 0.0)
    tr = evolve(init, spec, 0.0, cfg.t_end, _ctl(cfg), observe=_qfim_obs, store_states=False)
    N2 = spec.N ** 2
    if spec.family == "vc":
        tcol, scale = "t_s", 1.0
    else:
        tcol, scale = "t_N_chi", _scaled_time(spec)
    rows = [(t * scale, *(lam / N2)) for t, (lam, _) in zip(tr.times, tr.records)]
    header = [tcol, "lambda_max_over_N2", "lambda_2_over_N2", "lambda_3_over_N2"]
    return [_write_csv(os.path.join(out, "qfi_dynamics.csv"), header, rows)]


def peak_state(spec, initial, ctl=None, t_end=None):
    """Run to ``t_end`` (default twice the peak estimate) and return the QFI maximum.

    Returns (trajectory, index of the recorded maximum).
    """
    t_end = t_end or 2 * t_peak_estimate(spec.N, spec.chi)
    tr = evolve(initial, spec, 0.0, t_end, ctl, observe=_qfim_obs)
    i = int(np.argmax([lam[0] for lam, _ in tr.records]))
    return tr, i


def _qfi_peak_scan(cfg, out):
    rows = []
    for N in cfg.N_list:
        spec = cfg.model_spec(N=N)
        tr, i = peak_state(spec, initial_state(cfg.initial, N), _ctl(cfg))
        lam, gen = tr.records[i]
        scale = _scaled_time(spec)
        rows.append((N, tr.times[i] * scale, t_peak_estimate(N, spec.chi) * scale,
                     lam[0] / N ** 2, db_gain(lam[0], N), *gen))
    header = ["N", "t_peak_N_chi", "t_peak_estimate_N_chi", "lambda_max_over_N2",
              "gain_db", "gx", "gy", "gz"]
    return [_write_csv(os.path.join(out, "qfi_peak_scan.csv"), header, rows)]


def select_probe(cfg):
    """Probe state for the Bayesian scenario and the time it was taken at."""
    spec = cfg.model_spec()
    init = initial_state(cfg.initial, spec.N)
    if cfg.probe == "peak":
        tr, i = peak_state(spec, init, _ctl(cfg))
        return tr.states[i], tr.times[i]
    if cfg.probe == "bw":
        scale = _scaled_time(spec)
        tr = evolve(init, spec, 0.0, BW_WINDOW[1] / scale, _ctl(cfg))
        target = bw_state(spec.N)
        best = None
        for t, st in zip(tr.times, tr.states):
            if t * scale < BW_WINDOW[0]:
                continue
            f = aligned_fidelity(st, target).fidelity
            if best is None or f > best[0]:
                best = (f, st, t)
        return best[1], best[2]
    if cfg.probe == "time":
        if cfg.t_probe is None:
            raise ConfigError("probe = time needs t_probe")
        tr = evolve(init, spec, 0.0, cfg.t_probe, _ctl(cfg))
        return tr.states[-1], tr.times[-1]
    raise ConfigError(f"unknown probe {cfg.probe!r}; expected peak, bw or time")


def _bayes(cfg, out):
    state, t_probe = select_probe(cfg)
    marks = record_points(cfg.M_max)
    runs = [run_protocol(state, cfg.M_max, seed=cfg.seed + i, grid_size=cfg.grid_size,
                         record_at=marks) for i in range(cfg.n_seeds)]
    sig = np.array([r.sigmas for r in runs])
    bound = runs[0].bounds
    med = np.median(sig, axis=0)
    lo, hi = np.percentile(sig, [16, 84], axis=0)
    rows = [(m, med[k], lo[k], hi[k], bound[k], med[k] / bound[k]) for k, m in enumerate(marks)]
    files = [_write_csv(os.path.join(out, "bayes.csv"),
                        ["M", "sigma_median", "sigma_p16", "sigma_p84", "qcrb", "ratio_median"],
                        rows)]
    seed_rows = [(r.seed, m, s) for r in runs for m, s in r.sigma_curve]
    files.append(_write_csv(os.path.join(out, "bayes_seeds.csv"), ["seed", "M", "sigma"],
                            seed_rows))
    N = state.n_atoms
    r0 = runs[0]
    probe_row = (t_probe * _scaled_time(cfg.model_spec()), r0.lambda_max / N ** 2,
                 db_gain(r0.lambda_max, N), *r0.generator)
    files.append(_write_csv(os.path.join(out, "bayes_probe.csv"),
                            ["t_N_chi", "lambda_max_over_N2", "gain_db", "gx", "gy", "gz"],
                            [probe_row]))
    return files


def dissipative_model(cfg, drive, ratio):
    """vc model at kappa = ratio |Delta_c'| with |beta0| held fixed."""
    kappa = ratio * abs(cfg.Delta_c_prime)
    chi0, gamma0 = vc_rates(cfg.Delta_c_prime, cfg.U0, cfg.beta0, kappa)
    if drive == "pdd":
        omega = 2 * abs(cfg.omega_g)
    elif drive == "oat":
        omega = 0.0
    else:
        raise ConfigError(f"unknown drive {drive!r}; expected pdd or oat")
    return ModelSpec("vc", cfg.N, delta=cfg.omega_g, chi=chi0, omega=omega, gamma0=gamma0)


def dissipative_initial(drive, N):
    # modulated drive squeezes |down>; the constant drive twists about z and
    # needs an equatorial start
    return ground_state(N) if drive == "pdd" else coherent_state(N, math.pi / 2, math.pi)


def _dissipative_scan(cfg, out):
    rows = []
    N2 = cfg.N ** 2
    for drive in cfg.drives:
        for ratio in cfg.kappa_ratios:
            spec = dissipative_model(cfg, drive, ratio)
            tr = evolve(dissipative_initial(drive, cfg.N), spec, 0.0, cfg.t_end, _ctl(cfg),
                        observe=_qfim_obs, store_states=False)
            for t, (lam, gen) in zip(tr.times, tr.records):
                rows.append((drive, ratio, t, *(lam / N2), *gen))
    header = ["drive", "kappa_ratio", "t_s", "lambda_max_over_N2", "lambda_2_over_N2",
              "lambda_3_over_N2", "gx", "gy", "gz"]
    return [_write_csv(os.path.join(out, "dissipative_scan.csv"), header, rows)]


def _vc_params(cfg, out):
    p = derive(cfg.lab_inputs())
    rows = [
        ("U0", p.U0, "rad/s"),
        ("Delta_c_prime", p.Delta_c_prime, "rad/s"),
        ("beta0", p.beta0, "1"),
        ("chi0", p.chi0, "rad/s"),
        ("N_chi0", cfg.N * p.chi0, "rad/s"),
        ("Gamma0", p.Gamma0, "rad/s"),
        ("omega_g", p.omega_g, "rad/s"),
        ("epsilon", p.epsilon, "1"),
    ]
    rows = [(name, v, v / (2 * math.pi) if unit == "rad/s" else v, unit) for name, v, unit in rows]
    files = [_write_csv(os.path.join(out, "vc_params.csv"),
                        ["quantity", "value", "value_over_2pi", "unit"], rows)]
    ledger_rows = [(e.name, e.inequality, e.ratio, e.status) for e in p.ledger.entries]
    files.append(_write_csv(os.path.join(out, "ledger.csv"),
                            ["approximation", "inequality", "ratio", "status"], ledger_rows))
    return files


def _qfunction(cfg, out):
    N = cfg.N
    if cfg.state == "down":
        state = ground_state(N)
    elif cfg.state == "coherent":
        state = coherent_state(N, cfg.theta, cfg.phi)
    elif cfg.state == "bw":
        state = bw_state(N)
    elif cfg.state == "evolved":
        if cfg.t_end is None:
            raise ConfigError("state = evolved needs t_end")
        spec = cfg.model_spec()
        tr = evolve(initial_state(cfg.initial or "down", N), spec, 0.0, cfg.t_end, _ctl(cfg))
        state = tr.states[-1]
    else:
        raise ConfigError(f"unknown state {cfg.state!r}; expected down, coherent, bw or evolved")
    thetas = np.linspace(0.0, math.pi, cfg.n_theta)
    phis = 2 * math.pi * np.arange(cfg.n_phi) / cfg.n_phi
    q = husimi_q(state, thetas, phis)
    rows = [(th, ph, q[i, j]) for i, th in enumerate(thetas) for j, ph in enumerate(phis)]
    return [_write_csv(os.path.join(out, "qfunction.csv"), ["theta", "phi", "q"], rows)]


def _drive_profile(cfg, out):
    rows = []
    for t in np.linspace(0.0, cfg.t_end, cfg.samples):
        d = drive_profile(cfg.beta0, cfg.omega, cfg.Delta_c_prime0, cfg.kappa, t)
        rows.append((t, d.beta.real, d.beta.imag, d.delta_c_prime,
                     d.eta.real, d.eta.imag, d.diverges))
    header = ["t_s", "beta_re", "beta_im", "delta_c_prime", "eta_re", "eta_im", "diverges"]
    return [_write_csv(os.path.join(out, "drive_profile.csv"), header, rows)]


_RUNNERS = {
    "qfi_dynamics": _qfi_dynamics,
    "qfi_peak_scan": _qfi_peak_scan,
    "bayes": _bayes,
    "dissipative_scan": _dissipative_scan,
    "vc_params": _vc_params,
    "qfunction": _qfunction,
    "drive_profile": _drive_profile,
}


def check_config(cfg):
    """Build the models/inputs a scenario needs without running anything."""
    try:
        if cfg.scenario in ("qfi_dynamics", "bayes"):
            cfg.model_spec()
        elif cfg.scenario == "qfi_peak_scan":
            for N in cfg.N_list:
                cfg.model_spec(N=N)
        elif cfg.scenario == "dissipative_scan":
            for drive in cfg.drives:
                for ratio in cfg.kappa_ratios:
                    dissipative_model(cfg, drive, ratio)
        elif cfg.scenario == "vc_params":
            derive(cfg.lab_inputs())
        elif cfg.scenario == "qfunction" and cfg.state == "evolved":
            cfg.model_spec()
        if cfg.initial is not None:
            initial_state(cfg.initial, 1, cfg.theta or 0.0, cfg.phi or 0.0)
    except ConfigError:
        raise
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"scenario {cfg.scenario}: {exc}") from exc


def metadata_text(cfg):
    return cfg.to_text(comments=(
        f"pddsqueeze {__version__}",
        f"rng {RNG_NAME}",
        "resolved parameters; run this file to reproduce the outputs",
    ))


def run_config(cfg):
    """Execute a parsed scenario and return the written paths."""
    if not isinstance(cfg, ScenarioConfig):
        raise TypeError("expected a ScenarioConfig")
    check_config(cfg)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    try:
        files = _RUNNERS[cfg.scenario](cfg, out)
    except InvariantError as exc:
        raise InvariantError(f"scenario {cfg.scenario}: {exc}") from exc
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"scenario {cfg.scenario}: {exc}") from exc
    meta = os.path.join(out, f"{cfg.scenario}.meta")
    with open(meta, "w", encoding="utf-8") as fh:
        fh.write(metadata_text(cfg))
    return files + [meta]


def run_scenario(config_path):
    """Parse ``config_path`` and run it; returns the written paths."""
    return run_config(load_config(config_path))
