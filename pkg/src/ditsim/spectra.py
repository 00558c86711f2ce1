"""Emission spectra from the master equation via the quantum regression theorem.

The two-time correlation <A(tau) B(0)> is propagated by the Liouvillian, so
its one-sided transform is a resolvent element:

    s(omega) = integral_0^inf e^{-i omega tau} Tr[A e^{L tau}(B rho)] dtau
             = Tr[A x],   (i omega I - L) vec(x) = vec(B rho).

The reported power spectral density symmetrizes the transform,
S(omega) = (2/pi) Re s(omega), which makes autocorrelation spectra
nonnegative and integrate to 2 <A B>_ss over the real line.  Features appear
at physical offsets from the cavity frequency (the dot-like line sits near
+delta).  Only peak positions, widths, and ratios feed the analysis, so the
overall convention factor is inert downstream.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import GridMismatch, ResolventSingular
from .liouville import (
    DensityMatrix,
    Liouvillian,
    build_liouvillian,
    build_operators,
    require_pump_valid,
    steady_state_escalated,
    unvec,
    vec,
)
from .operators import OperatorSet, SystemParams, basis_index

NEGATIVE_VALUE_TOL = 1e-12
ZERO_MODE_OVERLAP_TOL = 1e-9

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class Method(enum.Enum):
    IPM = "IPM"
    IOF = "IOF"


class Channel(enum.Enum):
    AXIS = "axis"
    SIDE = "side"
    COMBINED = "combined"
    THROUGH_PORT = "through_port"
    DROP_PORT = "drop_port"


class Normalization(enum.Enum):
    RAW = "raw"
    UNIT_MAX = "unit_max"
    UNIT_AREA = "unit_area"


class ChannelMode(enum.Enum):
    PUMPED_STEADY = "pumped_steady"
    INITIAL_EXCITATION = "initial_excitation"


@dataclass(frozen=True)
class FrequencyGrid:
    """Ascending frequency offsets (units of gamma) relative to the cavity."""

    offsets: np.ndarray
    uniform: bool

    def __post_init__(self):
        arr = np.asarray(self.offsets, dtype=float)
        if arr.ndim != 1 or arr.size < 3:
            raise ValueError("grid needs at least 3 points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid contains non-finite offsets")
        if not np.all(np.diff(arr) > 0):
            raise ValueError("grid offsets must be strictly ascending")
        object.__setattr__(self, "offsets", arr)

    def __len__(self) -> int:
        return self.offsets.size

    @classmethod
    def from_offsets(cls, offsets) -> "FrequencyGrid":
        arr = np.asarray(offsets, dtype=float)
        steps = np.diff(arr)
        uniform = bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))
        return cls(offsets=arr, uniform=uniform)

    @classmethod
    def linspace(cls, lo: float, hi: float, points: int) -> "FrequencyGrid":
        if points < 3:
            raise ValueError("points must be >= 3")
        if not hi > lo:
            raise ValueError("max must exceed min")
        return cls(offsets=np.linspace(lo, hi, points), uniform=True)

    @classmethod
    def default_for(cls, params: SystemParams, points: int = 2001) -> "FrequencyGrid":
        """Figure-scale default: span 3*(Gamma_total + g) widened toward delta."""
        base = 3.0 * (params.gamma_total + params.g)
        base = max(base, 3.0 * params.gamma)
        lo = -base + min(params.delta, 0.0)
        hi = base + max(params.delta, 0.0)
        return cls.linspace(lo, hi, points)


@dataclass(frozen=True)
class Spectrum:
    grid: FrequencyGrid
    values: np.ndarray
    method: Method
    channel: Channel
    normalization: Normalization
    params: SystemParams | None = None

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (len(self.grid),) or not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite and match the grid length")
        object.__setattr__(self, "values", arr)


def same_grid(a: FrequencyGrid, b: FrequencyGrid) -> bool:
    return a.offsets.shape == b.offsets.shape and bool(np.array_equal(a.offsets, b.offsets))


def normalize_values(values: np.ndarray, grid: FrequencyGrid, norm: Normalization) -> np.ndarray:
    if norm is Normalization.RAW:
        return values
    if norm is Normalization.UNIT_MAX:
        peak = float(np.max(values))
        if peak <= 0.0:
            raise ValueError("unit_max normalization needs a positive maximum")
        return values / peak
    area = float(_trapezoid(values, grid.offsets))
    if area <= 0.0:
        raise ValueError("unit_area normalization needs positive area")
    return values / area


def normalized(spectrum: Spectrum, norm: Normalization) -> Spectrum:
    if spectrum.normalization is norm:
        return spectrum
    if spectrum.normalization is not Normalization.RAW:
        raise ValueError("renormalization is only defined from raw values")
    return replace(
        spectrum,
        values=normalize_values(spectrum.values, spectrum.grid, norm),
        normalization=norm,
    )


def _resolvent_solve(
    lmat: np.ndarray,
    d: int,
    rhs: np.ndarray,
    omega: float,
    scale: float,
) -> np.ndarray:
    """Solve (i omega I - L) x = rhs with a zero-mode deflation fallback.

    At omega = 0 the matrix shares L's kernel; the system stays consistent
    because the physical rhs has no weight on the zero mode (its trace
    vanishes), and the deflated solve pins Tr(x) = 0 through the trace row.
    """
    n = d * d
    m = 1j * omega * np.eye(n) - lmat
    try:
        x = numerics.solve_dense(m, rhs)
        if numerics.residual_inf(m, x, rhs) <= 1e-8 * max(1.0, scale):
            return x
    except numerics.SingularMatrix:
        pass
    overlap = abs(np.sum(rhs[(np.arange(d) * d) + np.arange(d)]))
    if overlap > ZERO_MODE_OVERLAP_TOL * max(1.0, float(np.max(np.abs(rhs)))):
        raise ResolventSingular(
            f"zero-mode overlap {overlap:.3e} at omega={omega!r}; spectrum undefined"
        )
    deflated = m.copy()
    deflated[0, :] = numerics.trace_functional_row(d)
    rhs2 = rhs.copy()
    rhs2[0] = 0.0
    try:
        return numerics.solve_dense(deflated, rhs2)
    except numerics.SingularMatrix as exc:
        raise ResolventSingular(f"deflated resolvent singular at omega={omega!r}") from exc


def regression_spectrum(
    liou: Liouvillian,
    rho_ss: DensityMatrix | np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    grid: FrequencyGrid,
) -> np.ndarray:
    """S(omega) = (2/pi) Re Tr[left x(omega)], (i omega - L) vec(x) = vec(right rho).

    For autocorrelation pairs (left = right^dag) this is a nonnegative power
    spectral density.  Requires <left>_ss <right>_ss = 0 (holds for a, sigma
    under incoherent pumping, where all field phases average out).
    """
    d = liou.dim
    rho = rho_ss.matrix if isinstance(rho_ss, DensityMatrix) else np.asarray(rho_ss)
    rhs = vec(np.asarray(right, dtype=complex) @ rho)
    weight = np.asarray(left, dtype=complex).reshape(-1)  # row-major == vec(left^T)
    scale = float(np.max(np.abs(rhs)))
    out = np.empty(len(grid), dtype=float)
    for i, omega in enumerate(grid.offsets):
        x = _resolvent_solve(liou.matrix, d, rhs, float(omega), scale)
        out[i] = (2.0 / np.pi) * float((weight @ x).real)
    floor = float(np.min(out))
    if floor < -NEGATIVE_VALUE_TOL:
        raise ResolventSingular(f"spectrum went negative ({floor:.3e}); solver failure")
    return np.maximum(out, 0.0)


def _time_integrated_state(liou: Liouvillian, rho0: np.ndarray) -> np.ndarray:
    """W = integral_0^inf (rho(t) - rho_inf) dt, fixed to Tr(W) = 0.

    Solves L W = rho_inf - rho0 with the trace row replaced; any leftover
    steady-state component is annihilated downstream by the collapse
    operators, so the trace gauge is immaterial.
    """
    from .liouville import steady_state  # local import to avoid cycle at module load

    d = liou.dim
    rho_inf = steady_state(liou).matrix
    rhs = vec(rho_inf - rho0)
    modified = liou.matrix.copy()
    modified[0, :] = numerics.trace_functional_row(d)
    rhs = rhs.copy()
    rhs[0] = 0.0
    w = numerics.solve_dense(modified, rhs)
    return unvec(w, d)


def channel_spectra(
    params: SystemParams,
    grid: FrequencyGrid,
    mode: ChannelMode,
    initial_state: DensityMatrix | None = None,
) -> tuple[Spectrum, Spectrum]:
    """(T_axis, T_side): cavity-axis and side-leak emission spectral densities.

    pumped_steady weighs steady-state regression spectra by the channel photon
    rates, T_axis = kappa_me * S_aa and T_side = gamma * S_ss, so each
    integrates to its channel's emitted photon flux.

    initial_excitation propagates a decay (pump must be 0) from
    |0 photons, excited dot> unless initial_state overrides it; the
    time-integrated spectra then satisfy
    integral (T_side + T_axis) d omega = 1 (one emitted photon total).
    """
    ops = build_operators(params)
    if mode is ChannelMode.PUMPED_STEADY:
        if params.pump <= 0:
            raise ValueError("pumped_steady mode requires pump > 0")
        require_pump_valid(params)
        ops, liou, rho = steady_state_escalated(params, include_pump=True)
        s_axis = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
        s_side = regression_spectrum(liou, rho, ops.sigma.conj().T, ops.sigma, grid)
    elif mode is ChannelMode.INITIAL_EXCITATION:
        if params.pump != 0:
            raise ValueError("initial_excitation mode requires pump = 0")
        if initial_state is None:
            rho0 = np.zeros((ops.dim, ops.dim), dtype=complex)
            idx = basis_index(0, excited=True)
            rho0[idx, idx] = 1.0
        else:
            rho0 = initial_state.matrix
            if rho0.shape != (ops.dim, ops.dim):
                raise ValueError("initial state dimension does not match params")
        liou = build_liouvillian(ops, params, include_pump=False)
        w = _time_integrated_state(liou, rho0)
        s_axis = regression_spectrum(liou, w, ops.a.conj().T, ops.a, grid)
        s_side = regression_spectrum(liou, w, ops.sigma.conj().T, ops.sigma, grid)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    t_axis = Spectrum(
        grid=grid,
        values=params.kappa_me * s_axis,
        method=Method.IPM,
        channel=Channel.AXIS,
        normalization=Normalization.RAW,
        params=params,
    )
    t_side = Spectrum(
        grid=grid,
        values=params.gamma * s_side,
        method=Method.IPM,
        channel=Channel.SIDE,
        normalization=Normalization.RAW,
        params=params,
    )
    return t_axis, t_side


def combined_channels(t_side: Spectrum, t_axis: Spectrum) -> Spectrum:
    if not same_grid(t_side.grid, t_axis.grid):
        raise GridMismatch("channel spectra live on different grids")
    return Spectrum(
        grid=t_axis.grid,
        values=t_side.values + t_axis.values,
        method=Method.IPM,
        channel=Channel.COMBINED,
        normalization=Normalization.RAW,
        params=t_axis.params,
    )


def ipm_transmission(
    params: SystemParams,
    grid: FrequencyGrid,
    normalization: Normalization = Normalization.UNIT_MAX,
) -> Spectrum:
    """Cavity-axis emission spectrum of the incoherently pumped steady state."""
    if params.pump <= 0:
        raise ValueError("IPM transmission requires pump > 0")
    require_pump_valid(params)
    ops, liou, rho = steady_state_escalated(params, include_pump=True)
    values = regression_spectrum(liou, rho, ops.a.conj().T, ops.a, grid)
    return Spectrum(
        grid=grid,
        values=normalize_values(values, grid, normalization),
        method=Method.IPM,
        channel=Channel.AXIS,
        normalization=normalization,
        params=params,
    )
