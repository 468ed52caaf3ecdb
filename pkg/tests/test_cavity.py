import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pddsqueeze.cavity import (Ledger, LedgerEntry, approximation_ledger, derive,
                               format_ledger, injected_field, momentum_gap, stark_shift,
                               vc_model, vc_rates, vertical_cavity_preset)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def preset():
    return vertical_cavity_preset()


@pytest.fixture(scope="module")
def params(preset):
    return derive(preset)


def test_reference_rates(params, preset):
    assert abs(params.U0) / TWO_PI == pytest.approx(2.5e3, rel=0.01)
    assert abs(params.Delta_c_prime) / TWO_PI == pytest.approx(4.85e6, rel=0.01)
    assert params.beta0 == pytest.approx(6.8, rel=0.01)
    assert abs(params.chi0) / TWO_PI == pytest.approx(59.2, rel=0.02)
    assert preset.N * abs(params.chi0) / TWO_PI == pytest.approx(5.92e3, rel=0.02)
    assert params.omega_g / TWO_PI == pytest.approx(-0.488e6, rel=0.01)
    assert abs(params.epsilon) == pytest.approx(5.1e-4, rel=0.02)
    assert abs(params.U0) * params.beta0 ** 2 / TWO_PI == pytest.approx(0.115e6, rel=0.02)


def test_reference_ledger(params):
    expected = {
        "excited-state elimination": 10,
        "cavity elimination 1": 820,
        "cavity elimination 2": 42,
        "perturbation": 39,
        "single momentum flips": 26,
        "unwanted pair creation": 10,
    }
    ratios = params.ledger.ratios()
    assert list(ratios) == list(expected)
    for name, value in expected.items():
        assert ratios[name] == pytest.approx(value, rel=0.05), name
    assert params.ledger.passed


def test_ledger_scales_with_coupling(preset):
    weak = dataclasses.replace(preset, Lambda=preset.Lambda / 10)
    assert derive(weak).ledger["excited-state elimination"].ratio == pytest.approx(100)


def test_ledger_single_atom_perturbation(params, preset):
    # rates held at their N = 100 values, ledger evaluated for one atom
    one = approximation_ledger(params, dataclasses.replace(preset, N=1))
    assert one["perturbation"].ratio == pytest.approx(2 / 5.1e-4, rel=0.05)
    assert one["perturbation"].ratio == pytest.approx(2 / abs(params.epsilon), rel=1e-12)


def test_exact_identities(params, preset):
    assert params.Gamma0 / params.chi0 == pytest.approx(preset.kappa / params.Delta_c_prime,
                                                        rel=1e-12)
    assert params.epsilon * params.Delta_c_prime == pytest.approx(params.U0, rel=1e-15)
    beta = injected_field(preset.eta0, params.Delta_c_prime, preset.kappa)
    resid = abs(complex(params.Delta_c_prime, -preset.kappa / 2) * beta + preset.eta0)
    assert resid / preset.eta0 < 1e-12
    assert abs(beta) == pytest.approx(params.beta0, rel=1e-15)
    assert params.beta0 == pytest.approx(
        preset.eta0 / math.sqrt(params.Delta_c_prime ** 2 + preset.kappa ** 2 / 4), rel=1e-14)


@given(st.floats(-1e8, 1e8).filter(lambda x: abs(x) > 1.0), st.floats(1e-3, 1e6),
       st.floats(1e-2, 1e2), st.floats(1e-3, 1e8))
def test_decay_to_interaction_ratio(dcp, u0, beta0, kappa):
    chi0, gamma0 = vc_rates(dcp, u0, beta0, kappa)
    assert gamma0 / chi0 == pytest.approx(kappa / dcp, rel=1e-12)


def test_stark_shift_formula():
    assert stark_shift(2.0, 3.0, 4.0) == pytest.approx(0.5 * 4 * 3 / (9 + 4))
    assert stark_shift(1.0, -5.0, 0.1) < 0


def test_momentum_gap_prefers_exact_inputs(preset):
    kgt = preset.k * preset.g * preset.tau
    assert kgt / TWO_PI == pytest.approx(0.2515e6, rel=1e-3)
    rounded = dataclasses.replace(preset, kg_tau=TWO_PI * 0.25e6)
    assert derive(rounded).omega_g == derive(preset).omega_g
    direct = dataclasses.replace(preset, k=None, g=None, tau=None, kg_tau=TWO_PI * 0.25e6)
    assert derive(direct).omega_g == pytest.approx(momentum_gap(preset.omega_r, TWO_PI * 0.25e6))


def test_lab_input_validation(preset):
    with pytest.raises(ValueError):
        dataclasses.replace(preset, kappa=0.0)
    with pytest.raises(ValueError):
        dataclasses.replace(preset, tau=None)
    with pytest.raises(ValueError):
        dataclasses.replace(preset, k=None, g=None, tau=None)
    with pytest.raises(ValueError):
        dataclasses.replace(preset, N=0)


def test_zero_dressed_detuning(preset):
    u0 = stark_shift(preset.Lambda, preset.Delta_a, preset.gamma)
    with pytest.raises(ZeroDivisionError):
        derive(dataclasses.replace(preset, Delta_c=preset.N * u0))


def test_ledger_status_levels():
    entries = (LedgerEntry("a", "", 12.0), LedgerEntry("b", "", 7.0), LedgerEntry("c", "", 3.0))
    assert [e.status for e in entries] == ["ok", "warn", "fail"]
    assert not Ledger(entries).passed
    assert Ledger(entries[:2]).passed
    with pytest.raises(KeyError):
        Ledger(entries)["z"]


def test_format_and_model(params):
    text = format_ledger(params.ledger)
    assert "perturbation" in text and "overall: pass" in text
    spec = vc_model(params, 100)
    assert spec.family == "vc" and spec.omega == pytest.approx(2 * abs(params.omega_g))
    assert spec.delta == params.omega_g and spec.gamma0 == params.Gamma0
    assert vc_model(params, 100, modulated=False).omega == 0
