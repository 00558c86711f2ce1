"""Analytic transfer functions for the driven cavity in the linear regime.

A weak probe entering through the input mirror sees the cavity dressed by the
dot.  Eliminating the intracavity field at first order in the drive gives the
response denominator

    D(omega) = -i omega + Gamma_total + g^2 / (i (delta - omega) + gamma)

with Gamma_total = kappa0 / 2 + kappa1 the total field decay rate.  The
through-port and drop-port amplitudes are

    t(omega) = 1 - kappa1 / D(omega),      d(omega) = kappa1 / D(omega),

so |t|^2 + |d|^2 = 1 - 2 kappa1 (Re D - kappa1) / |D|^2 <= 1, with equality
only when the side channels (kappa0, dot absorption) carry nothing.
"""
from __future__ import annotations

import enum

import numpy as np

from .operators import SystemParams
from .spectra import (
    Channel,
    FrequencyGrid,
    Method,
    Normalization,
    Spectrum,
    normalize_values,
)


class Port(enum.Enum):
    THROUGH = "through"
    DROP = "drop"

__all__ = [
    "Port",
    "transfer_amplitude",
    "power_transmission",
    "transmission_amplitude",
    "iof_spectrum",
]


def _check_rates(kappa0: float, kappa1: float, g: float, gamma: float, delta: float):
    for name, value in (
        ("kappa0", kappa0),
        ("kappa1", kappa1),
        ("g", g),
        ("gamma", gamma),
        ("delta", delta),
    ):
        if not np.isfinite(value):
            raise ValueError(f"{name} must be finite")
    if kappa0 < 0 or kappa1 < 0 or g < 0 or gamma < 0:
        raise ValueError("rates must be nonnegative")


def transfer_amplitude(
    omega,
    *,
    kappa0: float,
    kappa1: float,
    g: float,
    gamma: float,
    delta: float,
    port: Port = Port.THROUGH,
):
    """Complex field amplitude at the given port for probe offset(s) omega.

    Vectorized over omega.  gamma = 0 is admitted; the resulting pole at
    omega = delta is resolved by its limit (the dot reflects the probe, so
    t -> 1 and d -> 0 there).
    """
    _check_rates(kappa0, kappa1, g, gamma, delta)
    port = Port(port)
    omega_arr = np.asarray(omega, dtype=float)
    gamma_total = 0.5 * kappa0 + kappa1

    dot_term = 1j * (delta - omega_arr) + gamma
    pole = dot_term == 0
    if g == 0.0:
        denom = -1j * omega_arr + gamma_total + np.zeros_like(dot_term)
        drop = np.where(
            denom == 0, np.inf + 0j, np.divide(kappa1, denom, where=denom != 0)
        )
        if np.any(denom == 0):
            raise ValueError("empty-cavity response undefined at zero total decay")
    else:
        safe = np.where(pole, 1.0, dot_term)
        denom = -1j * omega_arr + gamma_total + (g * g) / safe
        drop = np.divide(kappa1, denom)
        drop = np.where(pole, 0.0 + 0j, drop)

    out = drop if port is Port.DROP else 1.0 - drop
    if np.ndim(omega) == 0:
        return complex(out)
    return out


def power_transmission(
    omega,
    *,
    kappa0: float,
    kappa1: float,
    g: float,
    gamma: float,
    delta: float,
    port: Port = Port.THROUGH,
):
    """|amplitude|^2 at the given port; vectorized over omega."""
    amp = transfer_amplitude(
        omega, kappa0=kappa0, kappa1=kappa1, g=g, gamma=gamma, delta=delta, port=port
    )
    out = np.abs(np.asarray(amp)) ** 2
    if np.ndim(omega) == 0:
        return float(out)
    return out


def transmission_amplitude(params: SystemParams, omega, port: Port = Port.THROUGH):
    """Transfer amplitude for a parameter set (pump plays no role here)."""
    return transfer_amplitude(
        omega,
        kappa0=params.kappa0,
        kappa1=params.kappa1,
        g=params.g,
        gamma=params.gamma,
        delta=params.delta,
        port=port,
    )


def iof_spectrum(
    params: SystemParams,
    grid: FrequencyGrid,
    port: Port = Port.THROUGH,
    normalization: Normalization = Normalization.RAW,
) -> Spectrum:
    """Power transmission spectrum over the grid as a Spectrum record."""
    port = Port(port)
    values = power_transmission(
        grid.offsets,
        kappa0=params.kappa0,
        kappa1=params.kappa1,
        g=params.g,
        gamma=params.gamma,
        delta=params.delta,
        port=port,
    )
    channel = Channel.DROP_PORT if port is Port.DROP else Channel.THROUGH_PORT
    return Spectrum(
        grid=grid,
        values=normalize_values(values, grid, normalization),
        method=Method.IOF,
        channel=channel,
        normalization=normalization,
        params=params,
    )
