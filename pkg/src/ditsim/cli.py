"""Batch driver: config parsing, spectrum runs, sweeps, figure reproduction.

All physical inputs are in units of gamma.  Every CSV gets a JSON sidecar
whose "config" block re-runs the exact computation; CSV bytes are
deterministic (17 significant digits, LF-terminated rows, atomic writes).
"""
from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import datetime
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NoDITStructure, SimulationError
from .features import compare_methods, dit_metrics
from .input_output import Port, iof_spectrum
from .operators import SystemParams
from .spectra import FrequencyGrid, Normalization, Spectrum, ipm_transmission

PARAM_KEYS = ("gamma", "kappa0", "kappa1", "Gamma", "g", "delta", "pump", "n_max")
RUN_KEYS = PARAM_KEYS + ("grid", "port", "normalization", "method", "sweep")
SWEEPABLE = ("pump", "Gamma", "g", "delta", "gamma", "kappa0", "kappa1", "n_max")

SUMMARY_HEADER = (
    "sweep_value,dit_iof,dit_ipm,fwhm_iof,fwhm_ipm,"
    "splitting_iof,splitting_ipm,dit_peak_ratio,fwhm_discrepancy_pct"
)

FIGURE_PUMPS = (1.0, 2.0, 2.5, 3.5)
FIG2_GAMMAS = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0)
FIG3_GAMMAS = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    raw: dict
    params: SystemParams
    grid_spec: tuple[float, float, int] | None
    method: str
    port: Port
    normalization: Normalization
    sweep: tuple[str, tuple] | None
    out_dir: Path
    jobs: int
    plot: bool


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _require_number(cfg: dict, key: str, default):
    if key not in cfg:
        return default
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{key}' must be a number, got {value!r}")
    return float(value)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # accept a sidecar back as input
    return data


def resolve_params(cfg: dict) -> SystemParams:
    for key in cfg:
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown config field '{key}'")
    gamma = _require_number(cfg, "gamma", 1.0)
    if "Gamma" in cfg and ("kappa0" in cfg or "kappa1" in cfg):
        raise ConfigError("field 'Gamma' conflicts with explicit 'kappa0'/'kappa1'")
    if "Gamma" in cfg:
        kappa0 = 0.0
        kappa1 = _require_number(cfg, "Gamma", None)
    else:
        kappa0 = _require_number(cfg, "kappa0", 0.0)
        kappa1 = _require_number(cfg, "kappa1", 0.0)
    kappa_me = 0.5 * kappa0 + kappa1

    g = cfg.get("g", 0.0)
    if g == "half_kappa":
        g = 0.5 * kappa_me
    elif isinstance(g, bool) or not isinstance(g, (int, float)):
        raise ConfigError(f"field 'g' must be a number or \"half_kappa\", got {g!r}")

    delta = cfg.get("delta", 0.0)
    if isinstance(delta, dict):
        extra = set(delta) - {"ratio_of_Gamma"}
        if extra or "ratio_of_Gamma" not in delta:
            raise ConfigError("field 'delta' object supports only 'ratio_of_Gamma'")
        ratio = delta["ratio_of_Gamma"]
        if isinstance(ratio, bool) or not isinstance(ratio, (int, float)):
            raise ConfigError("field 'delta.ratio_of_Gamma' must be a number")
        delta = float(ratio) * kappa_me
    elif isinstance(delta, bool) or not isinstance(delta, (int, float)):
        raise ConfigError(f"field 'delta' must be a number or object, got {delta!r}")

    pump = _require_number(cfg, "pump", 0.0)
    n_max = cfg.get("n_max", 5)
    if isinstance(n_max, bool) or not isinstance(n_max, int):
        raise ConfigError(f"field 'n_max' must be an integer, got {n_max!r}")
    try:
        return SystemParams(
            gamma=gamma,
            kappa0=kappa0,
            kappa1=kappa1,
            g=float(g),
            delta=float(delta),
            pump=pump,
            n_max=n_max,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc


def _parse_grid_flag(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects MIN:MAX:POINTS, got {text!r}")
    try:
        lo, hi, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--grid expects numbers, got {text!r}") from exc
    if points < 3 or not hi > lo:
        raise ConfigError("--grid needs MAX > MIN and POINTS >= 3")
    return lo, hi, points


def _grid_spec_from_config(cfg: dict) -> tuple[float, float, int] | None:
    if "grid" not in cfg:
        return None
    spec = cfg["grid"]
    if not isinstance(spec, dict) or set(spec) - {"min", "max", "points"}:
        raise ConfigError("field 'grid' must be an object with min/max/points")
    try:
        lo = float(spec["min"])
        hi = float(spec["max"])
        points = int(spec["points"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid spec: {spec!r}") from exc
    if points < 3 or not hi > lo:
        raise ConfigError("grid needs max > min and points >= 3")
    return lo, hi, points


def _resolve_enum(cfg: dict, args, key: str, flag_value, mapping: dict, default):
    if flag_value is not None:
        return mapping[flag_value]
    if key in cfg:
        value = cfg[key]
        if value not in mapping:
            raise ConfigError(f"field '{key}' must be one of {sorted(mapping)}, got {value!r}")
        return mapping[value]
    return default


def resolve_run(cfg: dict, args) -> RunConfig:
    params = resolve_params(cfg)
    grid_spec = (
        _parse_grid_flag(args.grid) if args.grid else _grid_spec_from_config(cfg)
    )
    port = _resolve_enum(
        cfg, args, "port", args.port,
        {"through": Port.THROUGH, "drop": Port.DROP}, Port.THROUGH,
    )
    norm = _resolve_enum(
        cfg, args, "normalization", args.norm,
        {n.value: n for n in Normalization}, Normalization.UNIT_MAX,
    )
    method = cfg.get("method", "both")
    if method not in ("ipm", "iof", "both"):
        raise ConfigError(f"field 'method' must be ipm|iof|both, got {method!r}")

    sweep = None
    if "sweep" in cfg:
        spec = cfg["sweep"]
        if not isinstance(spec, dict) or set(spec) != {"parameter", "values"}:
            raise ConfigError("field 'sweep' must be an object with parameter/values")
        name = spec["parameter"]
        if name not in SWEEPABLE:
            raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}, got {name!r}")
        values = spec["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep values must be a nonempty list")
        sweep = (name, tuple(values))
        for value in values:
            point_cfg = dict(cfg)
            point_cfg.pop("sweep")
            point_cfg[name] = value
            resolve_params(point_cfg)  # each point must validate up front

    needs_pump = method in ("ipm", "both") or sweep is not None
    pump_swept = sweep is not None and sweep[0] == "pump"
    if needs_pump and not pump_swept and not params.pump > 0:
        raise ConfigError("IPM spectra need pump > 0 (set 'pump' or sweep it)")
    return RunConfig(
        raw=cfg,
        params=params,
        grid_spec=grid_spec,
        method=method,
        port=port,
        normalization=norm,
        sweep=sweep,
        out_dir=Path(args.out),
        jobs=max(1, args.jobs),
        plot=args.plot,
    )


def _materialize_grid(spec, params: SystemParams) -> FrequencyGrid:
    if spec is None:
        grid = FrequencyGrid.default_for(params)
    else:
        grid = FrequencyGrid.linspace(*spec)
    return grid


def _params_dict(params: SystemParams) -> dict:
    return {
        "gamma": params.gamma,
        "kappa0": params.kappa0,
        "kappa1": params.kappa1,
        "g": params.g,
        "delta": params.delta,
        "pump": params.pump,
        "n_max": params.n_max,
        "kappa_me_override": params.kappa_me_override,
        "kappa_me": params.kappa_me,
        "gamma_total": params.gamma_total,
    }


def _replay_config(
    params: SystemParams, grid: FrequencyGrid, method: str, port: Port, norm: Normalization
) -> dict:
    return {
        "gamma": params.gamma,
        "kappa0": params.kappa0,
        "kappa1": params.kappa1,
        "g": params.g,
        "delta": params.delta,
        "pump": params.pump,
        "n_max": params.n_max,
        "grid": {
            "min": float(grid.offsets[0]),
            "max": float(grid.offsets[-1]),
            "points": int(len(grid)),
        },
        "method": method,
        "port": port.value,
        "normalization": norm.value,
    }


def _spectrum_csv(spectrum: Spectrum) -> str:
    rows = ["omega_offset_gamma,value"]
    for w, v in zip(spectrum.grid.offsets, spectrum.values):
        rows.append(f"{_fmt(w)},{_fmt(v)}")
    return "\n".join(rows) + "\n"


def _write_spectrum(
    out_dir: Path,
    stem: str,
    spectrum: Spectrum,
    method: str,
    port: Port,
    norm: Normalization,
):
    _write_text(out_dir / f"{stem}.csv", _spectrum_csv(spectrum))
    sidecar = {
        "artifact_version": __version__,
        "command": "spectrum",
        "csv": f"{stem}.csv",
        "config": _replay_config(spectrum.params, spectrum.grid, method, port, norm),
        "params": _params_dict(spectrum.params),
        "method": method,
        "port": port.value,
        "normalization": norm.value,
        "wall_clock_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(out_dir / f"{stem}.json", sidecar)


def _feature_dict(feature) -> dict:
    return {
        "kind": feature.kind.value,
        "position": feature.position,
        "value": feature.value,
        "fwhm": feature.fwhm,
        "prominence": feature.prominence,
    }


def _metrics_block(spectrum: Spectrum) -> dict:
    try:
        m = dit_metrics(spectrum)
    except (NoDITStructure, ValueError) as exc:
        return {"error": type(exc).__name__, "detail": str(exc)}
    return {
        "dit": _feature_dict(m.dit),
        "left_polariton": _feature_dict(m.left_polariton),
        "right_polariton": _feature_dict(m.right_polariton),
        "splitting": m.splitting,
    }


def _plot_overlay(path: Path, spectra: dict):
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--plot requires matplotlib (install the 'plot' extra)") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, spectrum in spectra.items():
        ax.plot(spectrum.grid.offsets, spectrum.values, label=label)
    ax.set_xlabel("offset from cavity resonance (units of gamma)")
    ax.set_ylabel("value")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def run_spectrum(run: RunConfig) -> int:
    run.out_dir.mkdir(parents=True, exist_ok=True)
    grid = _materialize_grid(run.grid_spec, run.params)
    computed: dict[str, Spectrum] = {}
    if run.method in ("iof", "both"):
        spec = iof_spectrum(run.params, grid, port=run.port, normalization=run.normalization)
        _write_spectrum(
            run.out_dir, f"spectrum_iof_{run.port.value}", spec, "iof", run.port, run.normalization
        )
        computed["iof"] = spec
    if run.method in ("ipm", "both"):
        spec = ipm_transmission(run.params, grid, normalization=run.normalization)
        _write_spectrum(
            run.out_dir, "spectrum_ipm", spec, "ipm", run.port, run.normalization
        )
        computed["ipm"] = spec

    comparison: dict = {
        "artifact_version": __version__,
        "port": run.port.value,
        "normalization": run.normalization.value,
        "params": _params_dict(run.params),
    }
    for name, spectrum in computed.items():
        comparison[name] = _metrics_block(spectrum)
    if len(computed) == 2:
        try:
            report = compare_methods(computed["iof"], computed["ipm"])
            comparison["comparison"] = report.to_dict()
        except (NoDITStructure, ValueError) as exc:
            comparison["comparison"] = {"error": type(exc).__name__, "detail": str(exc)}
    _write_json(run.out_dir / "comparison.json", comparison)
    if run.plot:
        _plot_overlay(run.out_dir / "spectrum.png", computed)
    return 0


def _sweep_point(run: RunConfig, index: int, value) -> dict:
    """Compute one sweep point; returns summary cells plus success flag."""
    name, _ = run.sweep
    point_cfg = dict(run.raw)
    point_cfg.pop("sweep", None)
    point_cfg[name] = value
    params = resolve_params(point_cfg)
    point_dir = run.out_dir / "points" / f"{index:03d}"
    point_dir.mkdir(parents=True, exist_ok=True)
    grid = _materialize_grid(run.grid_spec, params)

    row = {"sweep_value": value}
    errors: list[str] = []
    iof = ipm = None
    try:
        iof = iof_spectrum(params, grid, port=run.port, normalization=run.normalization)
        _write_spectrum(
            point_dir, f"spectrum_iof_{run.port.value}", iof, "iof", run.port, run.normalization
        )
    except SimulationError as exc:
        errors.append(type(exc).__name__)
        row.update({k: type(exc).__name__ for k in ("dit_iof", "fwhm_iof", "splitting_iof")})
    try:
        ipm = ipm_transmission(params, grid, normalization=run.normalization)
        _write_spectrum(point_dir, "spectrum_ipm", ipm, "ipm", run.port, run.normalization)
    except (SimulationError, ValueError) as exc:
        errors.append(type(exc).__name__)
        row.update({k: type(exc).__name__ for k in ("dit_ipm", "fwhm_ipm", "splitting_ipm")})

    for label, spectrum in (("iof", iof), ("ipm", ipm)):
        if spectrum is None:
            continue
        try:
            m = dit_metrics(spectrum)
            row[f"dit_{label}"] = m.dit.value
            row[f"fwhm_{label}"] = m.dit.fwhm
            row[f"splitting_{label}"] = m.splitting
        except NoDITStructure as exc:
            row.update({f"{k}_{label}": type(exc).__name__ for k in ("dit", "fwhm", "splitting")})

    if iof is not None and ipm is not None:
        try:
            report = compare_methods(iof, ipm)
            row["dit_peak_ratio"] = report.dit_peak_ratio
            row["fwhm_discrepancy_pct"] = report.fwhm_discrepancy_pct
        except (NoDITStructure, ValueError) as exc:
            row["dit_peak_ratio"] = type(exc).__name__
            row["fwhm_discrepancy_pct"] = type(exc).__name__
    else:
        row["dit_peak_ratio"] = errors[0]
        row["fwhm_discrepancy_pct"] = errors[0]
    row["_ok"] = iof is not None and ipm is not None
    return row


def _summary_cell(value) -> str:
    if isinstance(value, str):
        return value
    return _fmt(value)


def run_sweep(run: RunConfig) -> int:
    run.out_dir.mkdir(parents=True, exist_ok=True)
    name, values = run.sweep
    indexed = list(enumerate(values))
    if run.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=run.jobs) as pool:
            rows = list(pool.map(lambda iv: _sweep_point(run, iv[0], iv[1]), indexed))
    else:
        rows = [_sweep_point(run, i, v) for i, v in indexed]

    lines = [SUMMARY_HEADER]
    for row in rows:
        cells = [_summary_cell(row.get(col, "nan")) for col in SUMMARY_HEADER.split(",")]
        lines.append(",".join(cells))
    _write_text(run.out_dir / "summary.csv", "\n".join(lines) + "\n")
    _write_json(
        run.out_dir / "summary.json",
        {
            "artifact_version": __version__,
            "command": "sweep",
            "csv": "summary.csv",
            "config": dict(run.raw),
            "sweep_parameter": name,
            "port": run.port.value,
            "normalization": run.normalization.value,
            "wall_clock_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
    )
    if run.plot:
        _plot_summary(run.out_dir / "summary.png", rows)
    return 0 if any(r["_ok"] for r in rows) else 3


def _plot_summary(path: Path, rows: list[dict]):
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--plot requires matplotlib (install the 'plot' extra)") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs, iof_w, ipm_w = [], [], []
    for row in rows:
        a, b = row.get("fwhm_iof"), row.get("fwhm_ipm")
        if not (isinstance(a, (int, float)) and isinstance(b, (int, float))):
            continue
        xs.append(row["sweep_value"])
        iof_w.append(a)
        ipm_w.append(b)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, iof_w, "o-", label="transfer function")
    ax.plot(xs, ipm_w, "s-", label="master equation")
    ax.set_xlabel("sweep value")
    ax.set_ylabel("window FWHM (units of gamma)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _default_n_max(pump: float, kappa: float) -> int:
    if not pump > 0 or not kappa > pump:
        return 5
    mean_guess = pump / (kappa - pump)
    return max(5, 4 + math.ceil(3.0 * mean_guess))


def _figure_config(figure: str) -> list[tuple[str, dict]]:
    """(subdirectory, config) pairs making up one canned figure."""
    if figure == "fig1":
        out = []
        for pump in FIGURE_PUMPS:
            cfg = {
                "Gamma": 15.0,
                "g": "half_kappa",
                "delta": 0.0,
                "pump": pump,
                "n_max": _default_n_max(pump, 15.0),
                "method": "both",
            }
            out.append((f"pump_{_fmt_label(pump)}", cfg))
        return out
    if figure == "fig2":
        out = []
        for pump in FIGURE_PUMPS:
            cfg = {
                "g": "half_kappa",
                "delta": 0.0,
                "pump": pump,
                # Sized for the smallest Gamma; capped to keep runtime sane.
                "n_max": min(_default_n_max(pump, min(FIG2_GAMMAS)), 12),
                "grid": {"min": -120.0, "max": 120.0, "points": 801},
                "sweep": {"parameter": "Gamma", "values": list(FIG2_GAMMAS)},
            }
            out.append((f"pump_{_fmt_label(pump)}", cfg))
        return out
    if figure == "fig3":
        cfg = {
            "g": "half_kappa",
            "delta": {"ratio_of_Gamma": 1.5},
            "pump": 2.5,
            "n_max": 6,
            "sweep": {"parameter": "Gamma", "values": list(FIG3_GAMMAS)},
        }
        return [("", cfg)]
    raise ConfigError(f"unknown figure id {figure!r}")


def _fmt_label(x: float) -> str:
    return format(x, "g").replace(".", "p")


def reproduce_figure(figure: str, args) -> int:
    out_root = Path(args.out) / "figures" / figure
    statuses = []
    for subdir, cfg in _figure_config(figure):
        sub_args = argparse.Namespace(
            config=None,
            out=str(out_root / subdir) if subdir else str(out_root),
            jobs=args.jobs,
            grid=args.grid,
            port=args.port,
            norm=args.norm,
            plot=args.plot,
        )
        run = resolve_run(cfg, sub_args)
        if run.sweep is None:
            statuses.append(run_spectrum(run))
        else:
            statuses.append(run_sweep(run))
    return 0 if all(s == 0 for s in statuses) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ditsim",
        description="Cavity-dot transmission spectra: master equation vs transfer function.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (values in units of gamma)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for sweep points")
        p.add_argument("--grid", help="frequency grid as MIN:MAX:POINTS")
        p.add_argument("--port", choices=["through", "drop"], help="transfer-function port")
        p.add_argument(
            "--norm",
            choices=[n.value for n in Normalization],
            help="spectrum normalization (default unit_max)",
        )
        p.add_argument("--plot", action="store_true", help="also write PNG plots")

    p_spectrum = sub.add_parser("spectrum", help="single-point spectra and comparison")
    common(p_spectrum)
    p_sweep = sub.add_parser("sweep", help="parameter sweep with a summary table")
    common(p_sweep)
    p_figure = sub.add_parser("figure", help="reproduce a canned figure dataset")
    p_figure.add_argument("id", choices=["fig1", "fig2", "fig3"])
    common(p_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "figure":
            if args.config is not None:
                raise ConfigError("figure uses canned configs; --config is not accepted")
            return reproduce_figure(args.id, args)
        cfg = load_config(args.config) if args.config else {}
        run = resolve_run(cfg, args)
        if args.command == "sweep":
            if run.sweep is None:
                raise ConfigError("sweep command needs a 'sweep' block in the config")
            return run_sweep(run)
        if run.sweep is not None:
            raise ConfigError("config has a 'sweep' block; use the sweep command")
        return run_spectrum(run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
