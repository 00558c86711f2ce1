"""Regression spectra, channel decomposition, grids, and normalization."""
from __future__ import annotations

import math

import numpy as np
import pytest

from ditsim.errors import GridMismatch
from ditsim.features import extract_features
from ditsim.liouville import (
    DensityMatrix,
    DissipatorSpec,
    build_liouvillian,
    expectation,
    liouvillian_from_parts,
    steady_state,
    steady_state_escalated,
)
from ditsim.operators import SystemParams, basis_index, build_operators
from ditsim.spectra import (
    Channel,
    ChannelMode,
    FrequencyGrid,
    Method,
    Normalization,
    Spectrum,
    channel_spectra,
    combined_channels,
    ipm_transmission,
    normalized,
    regression_spectrum,
    same_grid,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _wide_grid(span: float, core_points: int = 1501) -> FrequencyGrid:
    tails = np.geomspace(span, 1e5, 400)
    offsets = np.unique(
        np.concatenate([-tails[::-1], np.linspace(-span, span, core_points), tails])
    )
    return FrequencyGrid.from_offsets(offsets)


def test_grid_validation():
    with pytest.raises(ValueError):
        FrequencyGrid.from_offsets(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        FrequencyGrid.from_offsets(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ValueError):
        FrequencyGrid.from_offsets(np.array([0.0, np.inf, 1.0]))


def test_grid_uniform_flag():
    assert FrequencyGrid.linspace(-1.0, 1.0, 11).uniform
    assert not FrequencyGrid.from_offsets(np.array([0.0, 0.1, 0.3, 0.7])).uniform


def test_default_grid_span():
    params = SystemParams.from_gamma_total(15.0, gamma=1.0, g=7.5, delta=22.5, n_max=3)
    grid = FrequencyGrid.default_for(params)
    assert len(grid) == 2001
    assert grid.offsets[0] == pytest.approx(-3.0 * (15.0 + 7.5))
    assert grid.offsets[-1] == pytest.approx(3.0 * (15.0 + 7.5) + 22.5)


def test_decoupled_mode_spectrum_is_lorentzian():
    # n_max high enough that Fock-space truncation sits below the tolerance
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.0, pump=0.2, n_max=12)
    ops, liou, rho = steady_state_escalated(params)
    grid = FrequencyGrid.linspace(-8.0, 8.0, 301)
    values = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    # analytic correlation decay at kappa - pump gives a width-1.6 Lorentzian
    n_a = expectation(rho, ops.a.conj().T @ ops.a).real
    width = params.kappa_me - params.pump
    lorentzian = (2.0 / math.pi) * n_a * width / (grid.offsets**2 + width**2)
    np.testing.assert_allclose(values, lorentzian, rtol=1e-5, atol=1e-12)


def test_deep_strong_coupling_doublet_positions():
    params = SystemParams(gamma=1.0, kappa1=2.0, g=40.0, pump=0.2, n_max=6)
    ops, liou, rho = steady_state_escalated(params)
    grid = FrequencyGrid.linspace(-60.0, 60.0, 801)
    values = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    spectrum = Spectrum(
        grid=grid,
        values=values,
        method=Method.IPM,
        channel=Channel.AXIS,
        normalization=Normalization.RAW,
        params=params,
    )
    peaks = sorted(
        (f for f in extract_features(spectrum) if f.kind.value == "peak"),
        key=lambda f: f.prominence,
    )[-2:]
    positions = sorted(f.position for f in peaks)
    expected = math.sqrt(params.g**2 - ((params.kappa_me - params.gamma) / 2.0) ** 2)
    step = grid.offsets[1] - grid.offsets[0]
    assert positions[0] == pytest.approx(-expected, abs=step)
    assert positions[1] == pytest.approx(expected, abs=step)


def test_regression_spectrum_is_nonnegative():
    params = SystemParams(gamma=0.2, kappa1=1.0, g=0.7, pump=0.3, n_max=5)
    ops, liou, rho = steady_state_escalated(params)
    grid = FrequencyGrid.linspace(-20.0, 20.0, 401)
    values = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    assert values.min() >= 0.0


def test_sum_rule_recovers_population():
    params = SystemParams(gamma=0.2, kappa1=1.0, g=0.5, pump=0.2, n_max=6)
    ops, liou, rho = steady_state_escalated(params)
    span = 3.0 * (params.gamma_total + params.g) + 40.0 * params.gamma
    grid = _wide_grid(span)
    values = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    n_a = expectation(rho, ops.a.conj().T @ ops.a).real
    ratio = _trapezoid(values, grid.offsets) / n_a
    assert 1.9 <= ratio <= 2.1


def test_on_resonance_spectrum_is_symmetric():
    params = SystemParams.from_gamma_total(15.0, gamma=1.0, g=7.5, pump=2.5, n_max=6)
    grid = FrequencyGrid.linspace(-40.0, 40.0, 801)
    spectrum = ipm_transmission(params, grid, normalization=Normalization.RAW)
    assert np.max(np.abs(spectrum.values - spectrum.values[::-1])) <= 1e-8


def test_unit_area_normalization_integrates_to_one():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.2, n_max=5)
    grid = FrequencyGrid.linspace(-30.0, 30.0, 2001)
    spectrum = ipm_transmission(params, grid, normalization=Normalization.UNIT_AREA)
    assert _trapezoid(spectrum.values, grid.offsets) == pytest.approx(1.0, abs=1e-9)


def test_unit_max_normalization_peaks_at_exactly_one():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.2, n_max=5)
    grid = FrequencyGrid.linspace(-10.0, 10.0, 501)
    spectrum = ipm_transmission(params, grid, normalization=Normalization.UNIT_MAX)
    assert spectrum.values.max() == 1.0


def test_renormalization_only_from_raw():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.2, n_max=4)
    grid = FrequencyGrid.linspace(-10.0, 10.0, 101)
    raw = ipm_transmission(params, grid, normalization=Normalization.RAW)
    assert normalized(raw, Normalization.UNIT_MAX).values.max() == 1.0
    peaked = normalized(raw, Normalization.UNIT_MAX)
    with pytest.raises(ValueError):
        normalized(peaked, Normalization.UNIT_AREA)


def test_grid_density_doubling_preserves_shared_points():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.2, n_max=4)
    coarse = FrequencyGrid.linspace(-5.0, 5.0, 51)
    fine = FrequencyGrid.linspace(-5.0, 5.0, 101)
    coarse_values = ipm_transmission(params, coarse, normalization=Normalization.RAW).values
    fine_values = ipm_transmission(params, fine, normalization=Normalization.RAW).values
    # pointwise resolvent evaluation: shared offsets agree bit for bit
    assert np.array_equal(coarse_values, fine_values[::2])


def test_coupling_phase_leaves_spectra_unchanged():
    params = SystemParams(gamma=0.2, kappa1=1.0, g=0.6, pump=0.2, n_max=4)
    ops = build_operators(params)
    grid = FrequencyGrid.linspace(-8.0, 8.0, 201)
    liou = build_liouvillian(ops, params)
    rho = steady_state(liou)
    reference = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    phase = np.exp(0.7j)
    sigma_dag = ops.sigma.conj().T
    h_rotated = (
        params.delta * sigma_dag @ ops.sigma
        - 1j * params.g * phase * sigma_dag @ ops.a
        + 1j * params.g * np.conj(phase) * ops.a.conj().T @ ops.sigma
    )
    dissipators = [
        DissipatorSpec(collapse=ops.a, weight=2.0 * params.kappa_me),
        DissipatorSpec(collapse=ops.sigma, weight=2.0 * params.gamma),
        DissipatorSpec(collapse=ops.a.conj().T, weight=2.0 * params.pump),
    ]
    liou_rotated = liouvillian_from_parts(h_rotated, dissipators)
    rho_rotated = steady_state(liou_rotated)
    rotated = regression_spectrum(
        liou_rotated, rho_rotated, ops.a.conj().T, ops.a, grid
    )
    np.testing.assert_allclose(rotated, reference, rtol=0, atol=1e-10)


def test_decoupled_initial_photon_emits_only_along_the_axis():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.0, pump=0.0, n_max=3)
    rho0 = np.zeros((params.dim, params.dim), dtype=complex)
    photon = basis_index(1, excited=False)
    rho0[photon, photon] = 1.0
    grid = _wide_grid(10.0, core_points=801)
    t_axis, t_side = channel_spectra(
        params, grid, ChannelMode.INITIAL_EXCITATION, initial_state=DensityMatrix(matrix=rho0)
    )
    assert np.max(t_side.values) == 0.0
    assert _trapezoid(t_axis.values, grid.offsets) == pytest.approx(1.0, abs=1e-2)


def test_excited_dot_channels_are_normalized_together():
    params = SystemParams.from_gamma_total(15.0, gamma=1.0, g=7.5, pump=0.0, n_max=2)
    grid = _wide_grid(3.0 * (15.0 + 7.5) + 40.0)
    t_axis, t_side = channel_spectra(params, grid, ChannelMode.INITIAL_EXCITATION)
    total = _trapezoid(t_axis.values + t_side.values, grid.offsets)
    assert total == pytest.approx(1.0, abs=1e-2)
    assert t_axis.channel is Channel.AXIS
    assert t_side.channel is Channel.SIDE


def test_side_emission_fraction_drops_in_the_bad_cavity_limit():
    ratios = []
    for gamma_total in (10.0, 35.0):
        params = SystemParams.from_gamma_total(
            gamma_total, gamma=1.0, g=gamma_total / 2.0, pump=0.0, n_max=2
        )
        grid = _wide_grid(3.0 * (gamma_total + params.g) + 40.0)
        t_axis, t_side = channel_spectra(params, grid, ChannelMode.INITIAL_EXCITATION)
        ratios.append(
            _trapezoid(t_side.values, grid.offsets)
            / _trapezoid(t_axis.values, grid.offsets)
        )
    assert ratios[1] < ratios[0]


def test_channel_mode_pump_requirements():
    pumped = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.2, n_max=3)
    unpumped = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.0, n_max=3)
    grid = FrequencyGrid.linspace(-5.0, 5.0, 101)
    with pytest.raises(ValueError):
        channel_spectra(unpumped, grid, ChannelMode.PUMPED_STEADY)
    with pytest.raises(ValueError):
        channel_spectra(pumped, grid, ChannelMode.INITIAL_EXCITATION)


def test_ipm_doublet_at_reference_parameters():
    params = SystemParams.from_gamma_total(15.0, gamma=1.0, g=7.5, pump=2.5, n_max=6)
    grid = FrequencyGrid.default_for(params)
    spectrum = ipm_transmission(params, grid)
    assert spectrum.method is Method.IPM
    assert spectrum.channel is Channel.AXIS
    features = extract_features(spectrum)
    kinds = [f.kind.value for f in features]
    assert kinds == ["peak", "dip", "peak"]
    step = grid.offsets[1] - grid.offsets[0]
    assert features[1].position == pytest.approx(0.0, abs=step)


def test_detuned_spectrum_has_narrow_feature_near_detuning():
    params = SystemParams.from_gamma_total(15.0, gamma=1.0, g=7.5, delta=22.5, pump=2.5, n_max=6)
    grid = FrequencyGrid.default_for(params)
    peaks = [
        f for f in extract_features(ipm_transmission(params, grid)) if f.kind.value == "peak"
    ]
    assert len(peaks) == 2
    narrow = min(peaks, key=lambda f: f.fwhm)
    broad = max(peaks, key=lambda f: f.fwhm)
    assert abs(narrow.position - params.delta) < abs(broad.position - params.delta)
    assert narrow.fwhm < broad.fwhm


def test_combined_channels_requires_shared_grid():
    params = SystemParams(gamma=1.0, kappa1=1.0, g=0.5, pump=0.0, n_max=2)
    grid_a = FrequencyGrid.linspace(-5.0, 5.0, 101)
    grid_b = FrequencyGrid.linspace(-5.0, 5.0, 103)
    t_axis, t_side = channel_spectra(params, grid_a, ChannelMode.INITIAL_EXCITATION)
    other_axis, _ = channel_spectra(params, grid_b, ChannelMode.INITIAL_EXCITATION)
    combined = combined_channels(t_side, t_axis)
    assert combined.channel is Channel.COMBINED
    np.testing.assert_allclose(combined.values, t_side.values + t_axis.values)
    with pytest.raises(GridMismatch):
        combined_channels(t_side, other_axis)
    assert same_grid(grid_a, grid_a) and not same_grid(grid_a, grid_b)
