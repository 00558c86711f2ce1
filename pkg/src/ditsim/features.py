"""Spectral feature analysis: extrema, widths, transparency-window metrics.

The central quantity is the transparency window between the two polariton
features (dips flanking a peak on the through port, peaks flanking a dip in
cavity emission).  Feature kinds are always recorded, never assumed.
"""
from __future__ import annotations

import concurrent.futures
import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import GridMismatch, NoDITStructure, ZeroDetuning
from .input_output import Port, iof_spectrum
from .operators import SystemParams
from .spectra import (
    FrequencyGrid,
    Channel,
    Normalization,
    Spectrum,
    ipm_transmission,
    same_grid,
)

PROMINENCE_FLOOR_FRACTION = 1e-4


class FeatureKind(enum.Enum):
    PEAK = "peak"
    DIP = "dip"


@dataclass(frozen=True)
class SpectralFeature:
    kind: FeatureKind
    position: float
    value: float
    fwhm: float | None
    prominence: float

    def __post_init__(self):
        if not (math.isfinite(self.position) and math.isfinite(self.value)):
            raise ValueError("feature position and value must be finite")
        if self.fwhm is not None and not self.fwhm > 0:
            raise ValueError("fwhm must be positive when present")
        if self.prominence < 0:
            raise ValueError("prominence must be nonnegative")


@dataclass(frozen=True)
class DITMetrics:
    """Transparency-window triple: polariton pair and the feature between."""

    dit: SpectralFeature
    left_polariton: SpectralFeature
    right_polariton: SpectralFeature
    splitting: float

    def __post_init__(self):
        if not (self.left_polariton.position < self.dit.position < self.right_polariton.position):
            raise ValueError("polaritons must bracket the central feature")
        expected = self.right_polariton.position - self.left_polariton.position
        if not math.isclose(self.splitting, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("splitting must equal the polariton separation")


@dataclass(frozen=True)
class ComparisonReport:
    """Cross-method comparison of the transparency window on a shared grid."""

    dit_peak_ratio: float
    fwhm_discrepancy_pct: float | None
    splitting_iof: float
    splitting_ipm: float
    port: Port
    normalization: Normalization
    best_pump: float | None = None

    def to_dict(self) -> dict:
        return {
            "dit_peak_ratio": self.dit_peak_ratio,
            "fwhm_discrepancy_pct": self.fwhm_discrepancy_pct,
            "splitting_iof": self.splitting_iof,
            "splitting_ipm": self.splitting_ipm,
            "port": self.port.value,
            "normalization": self.normalization.value,
            "best_pump": self.best_pump,
        }


class PredictedLinewidths(NamedTuple):
    cavity_like: float
    atom_like: float


class FitEntry(NamedTuple):
    pump: float
    objective: float


def _strict_extrema(values: np.ndarray) -> list[tuple[int, FeatureKind]]:
    out = []
    for i in range(1, values.size - 1):
        if values[i] > values[i - 1] and values[i] > values[i + 1]:
            out.append((i, FeatureKind.PEAK))
        elif values[i] < values[i - 1] and values[i] < values[i + 1]:
            out.append((i, FeatureKind.DIP))
    return out


def _merge_same_kind(feats, values):
    """Collapse same-kind neighbors, keeping the more extreme sample."""
    out: list[tuple[int, FeatureKind]] = []
    for idx, kind in feats:
        if out and out[-1][1] is kind:
            prev_idx = out[-1][0]
            if kind is FeatureKind.PEAK:
                better = values[idx] > values[prev_idx]
            else:
                better = values[idx] < values[prev_idx]
            if better:
                out[-1] = (idx, kind)
        else:
            out.append((idx, kind))
    return out


def _prominences(feats, values):
    """Contrast against the adjacent extrema, grid-boundary samples as sentinels."""
    proms = []
    for k, (idx, _) in enumerate(feats):
        left_ref = values[feats[k - 1][0]] if k > 0 else values[0]
        right_ref = values[feats[k + 1][0]] if k + 1 < len(feats) else values[-1]
        proms.append(
            min(abs(values[idx] - left_ref), abs(values[idx] - right_ref))
        )
    return proms


def _refine(idx: int, kind: FeatureKind, x: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Parabolic vertex through the extremum and its two neighbors."""
    u0 = x[idx - 1] - x[idx]
    u2 = x[idx + 1] - x[idx]
    y0 = v[idx - 1] - v[idx]
    y2 = v[idx + 1] - v[idx]
    denom = u0 * u2 * (u0 - u2)
    a = (u2 * y0 - u0 * y2) / denom
    b = (u0 * u0 * y2 - u2 * u2 * y0) / denom
    concave_ok = a < 0 if kind is FeatureKind.PEAK else a > 0
    if not concave_ok:
        return float(x[idx]), float(v[idx])
    u_star = -b / (2.0 * a)
    if not u0 <= u_star <= u2:
        return float(x[idx]), float(v[idx])
    y_star = v[idx] + a * u_star * u_star + b * u_star
    return float(x[idx] + u_star), float(y_star)


def _cross_toward(values, x, start, level, step, descending):
    """First level crossing walking from start in direction step (+1/-1)."""
    j = start + step
    while 0 <= j < values.size:
        prev = values[j - step]
        cur = values[j]
        hit = cur <= level if descending else cur >= level
        if hit:
            if cur == prev:
                return float(x[j])
            t = (prev - level) / (prev - cur)
            return float(x[j - step] + t * (x[j] - x[j - step]))
        j += step
    return None


def _fwhm_for(
    k: int,
    feats,
    refined: list[tuple[float, float]],
    x: np.ndarray,
    v: np.ndarray,
) -> float | None:
    idx, kind = feats[k]
    value = refined[k][1]
    left_neighbor = refined[k - 1][1] if k > 0 else None
    right_neighbor = refined[k + 1][1] if k + 1 < len(feats) else None
    if kind is FeatureKind.PEAK:
        # Half maximum over the higher adjacent dip when the peak sits in a
        # window; a solitary peak falls back to plain half maximum.
        if left_neighbor is not None and right_neighbor is not None:
            background = max(left_neighbor, right_neighbor)
        else:
            background = 0.0
        if background >= value:
            return None
        level = 0.5 * (value + background)
        lo = _cross_toward(v, x, idx, level, -1, descending=True)
        hi = _cross_toward(v, x, idx, level, +1, descending=True)
    else:
        # Half depth below the lower adjacent peak; undefined without both walls.
        if left_neighbor is None or right_neighbor is None:
            return None
        background = min(left_neighbor, right_neighbor)
        if background <= value:
            return None
        level = 0.5 * (value + background)
        lo = _cross_toward(v, x, idx, level, -1, descending=False)
        hi = _cross_toward(v, x, idx, level, +1, descending=False)
    if lo is None or hi is None or not hi > lo:
        return None
    return hi - lo


def extract_features(
    s: Spectrum, prominence_floor: float | None = None
) -> list[SpectralFeature]:
    """All interior strict extrema above the prominence floor, in position order.

    The floor defaults to 1e-4 of the spectrum range.  Low-contrast extrema
    are removed and same-kind survivors merged until the sequence alternates.
    Positions and values are refined by a parabola through each extremum and
    its grid neighbors; FWHM is attached where the half level is bracketed
    in-grid (dips additionally need both flanking peaks to set a background).
    """
    x = s.grid.offsets
    v = s.values
    if x.size < 5:
        raise ValueError("feature extraction needs at least 5 grid points")
    vrange = float(np.max(v) - np.min(v))
    if prominence_floor is None:
        prominence_floor = PROMINENCE_FLOOR_FRACTION * vrange
    if vrange == 0.0:
        return []

    feats = _merge_same_kind(_strict_extrema(v), v)
    while True:
        proms = _prominences(feats, v)
        kept = [f for f, p in zip(feats, proms) if p >= prominence_floor]
        kept = _merge_same_kind(kept, v)
        if kept == feats:
            break
        feats = kept

    refined = [_refine(idx, kind, x, v) for idx, kind in feats]
    out = []
    for k, (idx, kind) in enumerate(feats):
        pos, val = refined[k]
        out.append(
            SpectralFeature(
                kind=kind,
                position=pos,
                value=val,
                fwhm=_fwhm_for(k, feats, refined, x, v),
                prominence=proms[k],
            )
        )
    return out


def dit_metrics(s: Spectrum) -> DITMetrics:
    """Locate the transparency window bracketed by the two polariton features.

    The polaritons are the most prominent features of the polariton kind on
    either side of the spectral centroid; the window is the most extreme
    opposite-kind feature strictly between them.  On the through port the
    polaritons are dips and the window is a peak; in emission spectra the
    polaritons are peaks and the window is a dip.  Prominence-based selection
    ignores weak satellite features from higher excitation rungs.
    """
    if s.params is not None and s.params.g == 0:
        raise NoDITStructure("no dipole coupling, no transparency window")
    feats = extract_features(s)
    if len(feats) < 3:
        raise NoDITStructure(
            f"need at least 3 alternating features, found {len(feats)}"
        )
    if s.channel is Channel.THROUGH_PORT:
        pol_kind, dit_kind = FeatureKind.DIP, FeatureKind.PEAK
    else:
        pol_kind, dit_kind = FeatureKind.PEAK, FeatureKind.DIP
    weight = np.abs(s.values)
    center = float(np.sum(weight * s.grid.offsets) / np.sum(weight))
    lefts = [f for f in feats if f.kind is pol_kind and f.position < center]
    rights = [f for f in feats if f.kind is pol_kind and f.position > center]
    if not lefts or not rights:
        raise NoDITStructure(
            f"no {pol_kind.value} on each side of the spectral center"
        )
    left = max(lefts, key=lambda f: f.prominence)
    right = max(rights, key=lambda f: f.prominence)
    between = [
        f
        for f in feats
        if f.kind is dit_kind and left.position < f.position < right.position
    ]
    if not between:
        raise NoDITStructure("no window extremum between the polaritons")
    if dit_kind is FeatureKind.DIP:
        dit = min(between, key=lambda f: f.value)
    else:
        dit = max(between, key=lambda f: f.value)
    return DITMetrics(
        dit=dit,
        left_polariton=left,
        right_polariton=right,
        splitting=right.position - left.position,
    )


def strong_coupling_check(params: SystemParams) -> bool:
    """True iff g^2 > (kappa_me - gamma)^2 / 16, strictly."""
    gap = params.kappa_me - params.gamma
    return params.g * params.g > gap * gap / 16.0


def predicted_linewidths(params: SystemParams) -> PredictedLinewidths:
    """Dispersive-regime linewidths of the cavity-like and atom-like features.

    Each mode inherits a (g/delta)^2 admixture of the other's decay:
    cavity-like 2*Gamma + 2*(g/delta)^2*gamma, atom-like the mirror image.
    """
    if params.delta == 0:
        raise ZeroDetuning("linewidth estimates require nonzero detuning")
    mix = (params.g / params.delta) ** 2
    gamma_total = params.gamma_total
    return PredictedLinewidths(
        cavity_like=2.0 * gamma_total + 2.0 * mix * params.gamma,
        atom_like=2.0 * params.gamma + 2.0 * mix * gamma_total,
    )


def dit_match_objective(candidate: Spectrum, reference: Spectrum) -> float:
    """Squared relative errors of window value and FWHM, summed.

    Raises NoDITStructure when either spectrum lacks a measurable window
    (including an absent FWHM, which leaves the objective undefined).
    """
    m_cand = dit_metrics(candidate)
    m_ref = dit_metrics(reference)
    if m_ref.dit.value == 0:
        raise NoDITStructure("reference window value is zero")
    if m_cand.dit.fwhm is None or m_ref.dit.fwhm is None:
        raise NoDITStructure("window FWHM not measurable on both spectra")
    rel_value = m_cand.dit.value / m_ref.dit.value - 1.0
    rel_fwhm = m_cand.dit.fwhm / m_ref.dit.fwhm - 1.0
    return rel_value * rel_value + rel_fwhm * rel_fwhm


def fit_pump_rate(
    params: SystemParams,
    grid: FrequencyGrid,
    candidates,
    port: Port = Port.THROUGH,
    normalization: Normalization = Normalization.UNIT_MAX,
    jobs: int = 1,
) -> tuple[float, list[FitEntry]]:
    """Pick the pump rate whose emission spectrum best matches the transfer one.

    Evaluates every candidate against a single analytic reference under the
    shared port and normalization; candidates without a measurable window get
    an infinite objective.  Returns the argmin of the reported table (first
    entry on exact ties) together with the table itself, in candidate order.
    """
    pumps = [float(p) for p in candidates]
    if not pumps:
        raise ValueError("candidate list must be nonempty")
    for p in pumps:
        if not 0.0 < p < params.kappa_me:
            raise ValueError(f"candidate pump {p!r} outside (0, kappa_me)")
    if not strong_coupling_check(params):
        raise ValueError("pump fitting is defined in the strong-coupling regime")
    reference = iof_spectrum(params, grid, port=port, normalization=normalization)

    def one(pump: float) -> float:
        trial = replace(params, pump=pump)
        try:
            spectrum = ipm_transmission(trial, grid, normalization=normalization)
            return dit_match_objective(spectrum, reference)
        except NoDITStructure:
            return math.inf

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            objectives = list(pool.map(one, pumps))
    else:
        objectives = [one(p) for p in pumps]
    table = [FitEntry(pump=p, objective=o) for p, o in zip(pumps, objectives)]
    if all(math.isinf(e.objective) for e in table):
        raise NoDITStructure("no candidate produced a measurable window")
    best = min(table, key=lambda e: e.objective)
    return best.pump, table


def _port_of(spectrum: Spectrum) -> Port:
    return Port.DROP if spectrum.channel is Channel.DROP_PORT else Port.THROUGH


def compare_methods(iof: Spectrum, ipm: Spectrum) -> ComparisonReport:
    """Window value ratio, FWHM discrepancy, and splittings on a shared grid.

    Spectra are compared exactly as given; apply a shared normalization
    upstream when one is wanted.  The FWHM discrepancy degrades to None when
    either window width is not measurable.
    """
    if not same_grid(iof.grid, ipm.grid):
        raise GridMismatch("spectra must share one frequency grid")
    m_iof = dit_metrics(iof)
    m_ipm = dit_metrics(ipm)
    if m_iof.dit.value == 0:
        raise NoDITStructure("reference window value is zero")
    ratio = m_ipm.dit.value / m_iof.dit.value
    if m_iof.dit.fwhm is None or m_ipm.dit.fwhm is None:
        fwhm_pct = None
    else:
        fwhm_pct = 100.0 * abs(m_ipm.dit.fwhm - m_iof.dit.fwhm) / m_iof.dit.fwhm
    return ComparisonReport(
        dit_peak_ratio=ratio,
        fwhm_discrepancy_pct=fwhm_pct,
        splitting_iof=m_iof.splitting,
        splitting_ipm=m_ipm.splitting,
        port=_port_of(iof),
        normalization=iof.normalization,
    )
