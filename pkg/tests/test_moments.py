"""Closed-form cavity population and the moment-system oracle."""
from __future__ import annotations

import numpy as np
import pytest

from ditsim.errors import PumpExceedsDecay
from ditsim.liouville import expectation, steady_state_escalated
from ditsim.moments import cavity_population_closed_form, moment_steady_state
from ditsim.operators import SystemParams

A3_VALUE = 0.22895622895622894


def test_decoupled_limit_equals_pump_over_net_decay():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.0, pump=0.5, n_max=3)
    assert cavity_population_closed_form(params) == pytest.approx(1.0, rel=1e-14)


def test_closed_form_reference_point():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, pump=0.2, n_max=3)
    assert cavity_population_closed_form(params) == pytest.approx(A3_VALUE, rel=1e-12)


def test_population_vanishes_linearly_with_pump():
    slopes = []
    for pump in (1e-7, 2e-7):
        params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, pump=pump, n_max=3)
        slopes.append(cavity_population_closed_form(params) / pump)
    assert slopes[0] == pytest.approx(slopes[1], rel=1e-6)


def test_closed_form_requires_resonance():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, delta=1.0, pump=0.2, n_max=3)
    with pytest.raises(ValueError):
        cavity_population_closed_form(params)


def test_pump_exceeding_decay_rejected():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, pump=1.2, n_max=3)
    with pytest.raises(PumpExceedsDecay):
        cavity_population_closed_form(params)
    with pytest.raises(PumpExceedsDecay):
        moment_steady_state(params)


def test_moment_system_reproduces_closed_form_on_resonance():
    rng = np.random.default_rng(31)
    for _ in range(20):
        kappa = float(rng.uniform(0.5, 30.0))
        params = SystemParams(
            gamma=float(rng.uniform(0.05, 2.0)),
            kappa1=kappa,
            g=float(rng.uniform(0.0, kappa)),
            pump=float(rng.uniform(0.01, 0.4)) * kappa,
            n_max=3,
        )
        closed = cavity_population_closed_form(params)
        assert moment_steady_state(params).n_a == pytest.approx(closed, rel=1e-12)


def test_decoupled_moment_set():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.0, pump=0.2, n_max=3)
    moments = moment_steady_state(params)
    assert moments.n_a == pytest.approx(0.25, rel=1e-12)
    assert moments.n_sigma == pytest.approx(0.0, abs=1e-15)
    assert moments.coherence == pytest.approx(0.0, abs=1e-15)
    assert moments.xi == pytest.approx(0.8)
    assert moments.chi == pytest.approx(0.9)


def test_population_increases_with_pump():
    previous = 0.0
    for pump in np.linspace(0.05, 0.9, 12):
        params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, pump=float(pump), n_max=3)
        current = cavity_population_closed_form(params)
        assert current > previous
        previous = current


def test_detuned_weak_pump_matches_liouvillian():
    params = SystemParams.from_gamma_total(
        15.0, gamma=1.0, g=7.5, delta=22.5, pump=0.1, n_max=5
    )
    ops, _, rho = steady_state_escalated(params)
    full = expectation(rho, ops.a.conj().T @ ops.a).real
    assert moment_steady_state(params).n_a == pytest.approx(full, rel=1e-2)


@pytest.mark.parametrize("pump_fraction", [0.02, 0.05, 0.1])
def test_weak_excitation_agreement_with_full_model(pump_fraction):
    worst = 0.0
    for gamma_total in (10.0, 15.0, 35.0):
        params = SystemParams.from_gamma_total(
            gamma_total,
            gamma=1.0,
            g=gamma_total / 2.0,
            pump=pump_fraction * gamma_total,
            n_max=7,
        )
        ops, _, rho = steady_state_escalated(params)
        full = expectation(rho, ops.a.conj().T @ ops.a).real
        worst = max(worst, abs(moment_steady_state(params).n_a - full) / full)
    assert worst <= 1e-2


def test_strong_pump_triggers_soft_warning():
    params = SystemParams(gamma=0.1, kappa1=1.0, g=0.5, pump=0.6, n_max=3)
    with pytest.warns(UserWarning):
        moment_steady_state(params)
