"""Command-line front end producing reproducible CSV/JSON artifacts.

Every subcommand reads one INI section (same name as the subcommand), applies
flag overrides, and writes its tables plus a ``summary.json`` into the output
directory.  All CSV files begin with ``# key=value`` comment rows carrying the
configuration hash and, for sampled runs, the seed, so a rerun with the same
inputs is byte-identical.

Exit codes: 0 on success, 2 for configuration/validation problems, 1 for
runtime failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import noise_sweep, reference_bounds, relative_resolution, scaling_fit
from .channel import GaussianMode, load_bd_calibration, overlap_gaussian
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .decay import DecayModel, Markovian, Quadratic, Tabulated
from .estimation import (
    SENSITIVITY_CSV_HEADER,
    FitError,
    apply_monte_carlo_errors,
    closed_form_result,
    fit_fringe,
    monte_carlo_errorbar,
    noise_subtract,
    optimal_time_for_probe,
    sensitivity_from_fringe,
)
from .probes import (
    ProbeSpec,
    WhiteNoiseGhzParams,
    fidelity_bound,
    ghz_density_matrix,
    sample_fringe,
    synthetic_fringe,
    witness_expectation,
    witness_from_settings,
)

__all__ = ["main", "build_parser"]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, comments, header, rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines += [",".join(_format_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_summary(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _comments(cfg: ExperimentConfig, section: str) -> list[str]:
    lines = [f"config_sha256={config_hash(cfg, section)}"]
    if cfg.seed is not None:
        lines.append(f"seed={cfg.seed}")
    return lines


def _derived_seed(seed: int, *tags) -> int:
    """Stable per-work-item seed so runs do not share sampling streams."""
    payload = ":".join([str(seed), *map(str, tags)]).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def _decay_model(cfg: ExperimentConfig) -> DecayModel:
    if cfg.model_kind == "quadratic":
        return Quadratic(cfg.model_coefficient)
    if cfg.model_kind == "markovian":
        return Markovian(cfg.model_coefficient)
    return Tabulated.from_csv(cfg.model_csv)


def _theta_grid(cfg: ExperimentConfig, fringe_frequency: int) -> np.ndarray:
    """Uniform grid on [0, pi] whose spacing lands the working point
    ``pi/(2m)`` on a node with two neighbours on each side."""
    if cfg.theta_points is not None:
        return np.linspace(0.0, math.pi, cfg.theta_points)
    m = fringe_frequency
    if m == 5:
        points = 21
    elif m in (1, 2, 3, 4, 6):
        points = 25
    else:
        points = 4 * m + 1
    return np.linspace(0.0, math.pi, points)


def _visibility_for(cfg: ExperimentConfig, position: int) -> float:
    if cfg.visibilities is None:
        return 1.0
    if len(cfg.visibilities) == 1:
        return cfg.visibilities[0]
    return cfg.visibilities[position]


def _interrogation_time(cfg: ExperimentConfig, spec: ProbeSpec,
                        model: DecayModel) -> float:
    if cfg.interrogation_time == "opt":
        return optimal_time_for_probe(spec, model)
    return float(cfg.interrogation_time)


def _run_fringe(cfg: ExperimentConfig, out: Path) -> dict:
    model = _decay_model(cfg)
    comments = _comments(cfg, "fringe")
    per_n = {}
    for position, n in enumerate(cfg.n_values):
        spec = ProbeSpec(cfg.strategy, n, _visibility_for(cfg, position))
        t = _interrogation_time(cfg, spec, model)
        grid = _theta_grid(cfg, spec.fringe_frequency)
        if cfg.mode == "montecarlo":
            data = sample_fringe(spec, model, t, grid, cfg.shots_per_setting,
                                 _derived_seed(cfg.seed, "fringe", n))
        else:
            data = synthetic_fringe(spec, model, t, grid)
        data.to_csv(out / f"fringe_n{n}.csv", extra_comments=comments)
        fit = fit_fringe(data)
        per_n[str(n)] = {
            "interrogation_time": t,
            "visibility": spec.visibility,
            "amplitude": fit.amplitude,
            "phase": fit.phase,
            "amplitude_stderr": fit.amplitude_stderr,
            "iterations": fit.iterations,
        }
    return {"per_n": per_n}


def _scaling_series(cfg: ExperimentConfig, model: DecayModel,
                    subtract: bool) -> list:
    results = []
    for position, n in enumerate(cfg.n_values):
        v0 = _visibility_for(cfg, position)
        spec = ProbeSpec(cfg.strategy, n, v0)
        t = _interrogation_time(cfg, spec, model)
        if cfg.mode == "analytic":
            ideal = ProbeSpec(cfg.strategy, n, 1.0) if subtract else spec
            results.append(closed_form_result(ideal, model, t))
            continue
        tag = "subtracted" if subtract else "raw"
        data = sample_fringe(spec, model, t, _theta_grid(cfg, spec.fringe_frequency),
                             cfg.shots_per_setting,
                             _derived_seed(cfg.seed, "scaling", n))
        if subtract:
            data = noise_subtract(data, v0)
        result = sensitivity_from_fringe(data, t)
        errors = monte_carlo_errorbar(data, t, cfg.trials,
                                      _derived_seed(cfg.seed, "scaling-mc", n, tag))
        results.append(apply_monte_carlo_errors(result, errors))
    return results


def _run_scaling(cfg: ExperimentConfig, out: Path) -> dict:
    model = _decay_model(cfg)
    comments = _comments(cfg, "scaling")
    summary: dict = {}
    for subtract, name in ((False, "raw"), (True, "subtracted")):
        results = _scaling_series(cfg, model, subtract)
        _write_csv(out / f"resolution_{name}.csv", comments,
                   SENSITIVITY_CSV_HEADER, [r.to_csv_row() for r in results])
        if len(results) >= 3:
            fit = scaling_fit([(r.n_qubits, r.d2omega_t, r.stderr_d2omega_t)
                               for r in results])
            summary[f"slope_{name}"] = {
                "slope": fit.slope,
                "stderr": fit.slope_stderr,
                "intercept": fit.intercept,
            }
        if not subtract and cfg.model_kind == "quadratic":
            bounds = reference_bounds(cfg.n_values, cfg.model_coefficient)
            rows = [
                (r.n_qubits, r.d2omega_t, sql, zl, hl, r.d2omega_t < sql)
                for r, sql, zl, hl in zip(results, bounds.sql, bounds.zl, bounds.hl)
            ]
            _write_csv(out / "bounds.csv", comments,
                       ("N", "value", "bound_sql", "bound_zl", "bound_hl",
                        "beats_sql"), rows)
    return summary


def _run_compare(cfg: ExperimentConfig, out: Path) -> dict:
    if cfg.model_kind == "markovian":
        raise ConfigError("[compare-markovian] model_kind: the test channel "
                          "must not itself be markovian")
    model_test = _decay_model(cfg)
    model_ref = Markovian(cfg.markovian_rate)
    comments = _comments(cfg, "compare-markovian")
    rows = []
    for n in cfg.n_values:
        if cfg.mode == "analytic":
            r2 = relative_resolution(n, model_test, model_ref)
            stderr = 0.0
        else:
            r2, stderr = _compare_montecarlo(cfg, n, model_test, model_ref)
        rows.append((n, r2, stderr, math.sqrt(n)))
    _write_csv(out / "relative_resolution.csv", comments,
               ("N", "r_squared", "r_squared_stderr", "sqrt_n_reference"), rows)
    return {"r_squared": {str(r[0]): r[1] for r in rows}}


def _compare_montecarlo(cfg: ExperimentConfig, n: int, model_test: DecayModel,
                        model_ref: Markovian) -> tuple[float, float]:
    spec = ProbeSpec("ghz", n, 1.0)
    values = {}
    for tag, model in (("test", model_test), ("reference", model_ref)):
        t = optimal_time_for_probe(spec, model)
        data = sample_fringe(spec, model, t, _theta_grid(cfg, spec.fringe_frequency),
                             cfg.shots_per_setting,
                             _derived_seed(cfg.seed, "compare", n, tag))
        result = sensitivity_from_fringe(data, t)
        errors = monte_carlo_errorbar(data, t, cfg.trials,
                                      _derived_seed(cfg.seed, "compare-mc", n, tag))
        values[tag] = (result.d2omega_t, errors.d2omega_t)
    (d2_test, err_test), (d2_ref, err_ref) = values["test"], values["reference"]
    r2 = d2_ref / d2_test
    stderr = r2 * math.sqrt((err_test / d2_test) ** 2 + (err_ref / d2_ref) ** 2)
    return r2, stderr


def _run_noise_sweep(cfg: ExperimentConfig, out: Path) -> dict:
    if cfg.model_kind != "quadratic":
        raise ConfigError("[noise-sweep] model_kind: sweep bounds assume the "
                          "quadratic family")
    comments = _comments(cfg, "noise-sweep")
    ns = range(1, cfg.n_max + 1)
    rows = []
    crossings = {}
    for v in cfg.fusion_visibilities:
        sweep = noise_sweep(v, ns, cfg.model_coefficient)
        bounds = reference_bounds([r.n for r in sweep.rows],
                                  cfg.model_coefficient)
        for row, hl in zip(sweep.rows, bounds.hl):
            rows.append((v, row.n, row.d2omega_t_ghz, row.bound_sql, hl,
                         row.beats_sql))
        crossings[repr(v)] = sweep.crossing
    _write_csv(out / "noise_sweep.csv", comments,
               ("fusion_visibility", "N", "d2omegaT_ghz", "bound_sql",
                "bound_hl", "beats_sql"), rows)
    return {"crossings": crossings}


def _run_witness(cfg: ExperimentConfig, out: Path) -> dict:
    comments = _comments(cfg, "witness")
    rows = []
    has_settings = (cfg.x_expectation is not None
                    and cfg.p_all_zero is not None
                    and cfg.p_all_one is not None)
    if cfg.witness_value is not None:
        rows.append((None, "direct", cfg.witness_value,
                     fidelity_bound(cfg.witness_value)))
    elif has_settings:
        w = witness_from_settings(cfg.x_expectation, cfg.p_all_zero,
                                  cfg.p_all_one)
        rows.append((None, "settings", w, fidelity_bound(w)))
    else:
        for n in cfg.n_values:
            state = ghz_density_matrix(
                WhiteNoiseGhzParams(n, cfg.fusion_visibility))
            w = witness_expectation(state)
            rows.append((n, "oracle", w, fidelity_bound(w)))
    _write_csv(out / "witness.csv", comments,
               ("N", "source", "w_value", "fidelity_bound"), rows)
    return {"witness": [
        {"n_qubits": r[0], "source": r[1], "w_value": r[2],
         "fidelity_bound": r[3]} for r in rows
    ]}


def _run_channel_calibration(cfg: ExperimentConfig, out: Path) -> dict:
    try:
        table = load_bd_calibration(cfg.table_csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"[channel-calibration] table_csv: {exc}") from None
    mode = GaussianMode(cfg.waist_mm)
    comments = _comments(cfg, "channel-calibration")
    rows = []
    worst = 0.0
    for entry in table:
        x0 = entry.geometry.total_separation
        predicted = overlap_gaussian(x0, mode)
        measured = entry.measured_visibility
        residual = predicted - measured
        worst = max(worst, abs(residual))
        rows.append((entry.per_bd_displacement, x0, predicted, measured,
                     residual))
    _write_csv(out / "calibration.csv", comments,
               ("per_bd_displacement_mm", "total_separation_mm",
                "predicted_visibility", "measured_visibility", "residual"),
               rows)
    return {"max_abs_residual": worst, "rows": len(rows)}


_HANDLERS = {
    "fringe": _run_fringe,
    "scaling": _run_scaling,
    "compare-markovian": _run_compare,
    "noise-sweep": _run_noise_sweep,
    "witness": _run_witness,
    "channel-calibration": _run_channel_calibration,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenometry",
        description="Dephasing-limited frequency metrology simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="INI file; the section named after the subcommand applies")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed (overrides the config)")
        p.add_argument("--mode", choices=("analytic", "montecarlo"),
                       default=None, help="evaluation mode (overrides the config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, overrides={
            "out_dir": args.out,
            "seed": args.seed,
            "mode": args.mode,
        })
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = _HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FitError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = {
        "subcommand": args.command,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "config_sha256": config_hash(cfg, args.command),
    }
    payload.update(summary)
    _write_summary(out / "summary.json", payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
