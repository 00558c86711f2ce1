"""Weak-excitation moment equations for the pumped cavity-dot system.

Closing the operator hierarchy at second order (dot treated in the
sigma_z ~ -1 regime) gives four real steady-state unknowns
{<a^dag a>, <sigma^dag sigma>, Re<a^dag sigma>, Im<a^dag sigma>}:

    xi  * n_a - g*u                      = pump
    gamma * n_s + g*u                    = 0
    g*n_a - g*n_s + chi*u - delta*v      = 0
    delta*u + chi*v                      = 0

with xi = kappa_me - pump and chi = xi + gamma.  On resonance this reproduces
the closed form n_a = pump*(g^2 + chi*gamma) / (chi*(xi*gamma + g^2)).
The closure is an independent oracle for the full Liouvillian path; its error
is first order in the excitation level.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import PumpExceedsDecay, SingularMatrix, SingularMomentSystem
from .operators import SystemParams

# Beyond pump = kappa_me/2 the weak-excitation closure is dubious.
SOFT_PUMP_FRACTION = 0.5


@dataclass(frozen=True)
class MomentSet:
    """Steady-state second moments."""

    n_a: float
    n_sigma: float
    coherence: complex  # <a^dag sigma>
    xi: float
    chi: float


def _rates(params: SystemParams) -> tuple[float, float]:
    xi = params.kappa_me - params.pump
    if xi <= 0:
        raise PumpExceedsDecay(
            f"pump {params.pump} >= kappa_me {params.kappa_me}: no stationary state"
        )
    return xi, xi + params.gamma


def cavity_population_closed_form(params: SystemParams) -> float:
    """On-resonance closed-form steady-state photon number."""
    if params.delta != 0.0:
        raise ValueError("closed form requires delta = 0")
    xi, chi = _rates(params)
    g2 = params.g * params.g
    return params.pump * (g2 + chi * params.gamma) / (chi * (xi * params.gamma + g2))


def moment_steady_state(params: SystemParams) -> MomentSet:
    """Solve the 4x4 moment system at arbitrary detuning."""
    xi, chi = _rates(params)
    if params.pump > SOFT_PUMP_FRACTION * params.kappa_me:
        warnings.warn(
            f"pump {params.pump} exceeds {SOFT_PUMP_FRACTION} * kappa_me; "
            "weak-excitation closure is unreliable here",
            stacklevel=2,
        )
    g, delta, gamma = params.g, params.delta, params.gamma
    m = np.array(
        [
            [xi, 0.0, -g, 0.0],
            [0.0, gamma, g, 0.0],
            [g, -g, chi, -delta],
            [0.0, 0.0, delta, chi],
        ],
        dtype=complex,
    )
    rhs = np.array([params.pump, 0.0, 0.0, 0.0], dtype=complex)
    try:
        sol = numerics.solve_dense(m, rhs)
    except SingularMatrix as exc:
        raise SingularMomentSystem(str(exc)) from exc
    n_a, n_sigma, u, v = (float(z.real) for z in sol)
    return MomentSet(n_a=n_a, n_sigma=n_sigma, coherence=complex(u, v), xi=xi, chi=chi)
