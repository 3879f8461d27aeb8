"""Command-line orchestration of simulations and Monte Carlo studies.

Each subcommand reads a single JSON config document, runs the study,
and writes CSV/JSON outputs plus a manifest.json with per-file SHA-256
checksums.  Data files contain no timestamps, so a rerun with the same
config and seed is byte-identical regardless of the parallelism degree
(timestamps live only in the manifest).
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, seeds
from .basis import CoefficientVector, FunctionFamilySpec, make_test_function
from .dgp import DgpSpec, generate_sample
from .estimator import EstimatorConfig, adaptive_estimate
from .risk import (
    RiskCurve,
    _lsq_line,
    coverage_study,
    oracle_ratio_study,
    oracle_summary,
    rate_fit,
)
from .serialize import to_plain, write_csv, write_json

__all__ = ["STUDIES", "CliError", "ExperimentConfig", "emit_plot_data", "load_config", "main", "run"]

STUDIES = (
    "simulate",
    "estimate",
    "risk-curve",
    "rate-study",
    "coverage-study",
    "oracle-study",
)


class CliError(Exception):
    """Configuration or dispatch failure with a machine-readable payload."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description driving one CLI run."""

    study: str
    dgp: DgpSpec
    estimator: EstimatorConfig
    n_grid: tuple
    reps: int
    master_seed: int
    output_dir: str
    jobs: int = 1
    phi_family: FunctionFamilySpec | None = None

    def __post_init__(self):
        if self.study not in STUDIES:
            raise CliError(f"unknown study {self.study!r}", field="study")
        if len(self.n_grid) == 0:
            raise CliError("n_grid must be nonempty", field="n_grid")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise CliError("n_grid must be strictly increasing", field="n_grid")
        if self.reps < 1:
            raise CliError("reps must be at least 1", field="reps")
        if self.jobs < 1:
            raise CliError("jobs must be at least 1", field="jobs")

    def to_json_dict(self, run_params: bool = True) -> dict:
        """Config echo; run_params=False drops the fields (output_dir,
        jobs) that may vary between byte-identical runs."""
        payload = {
            "study": self.study,
            "dgp": self.dgp.to_json_dict(),
            "estimator": to_plain(self.estimator),
            "n_grid": list(self.n_grid),
            "reps": self.reps,
            "master_seed": self.master_seed,
        }
        if run_params:
            payload["output_dir"] = self.output_dir
            payload["jobs"] = self.jobs
        if self.phi_family is not None:
            payload["phi_family"] = to_plain(self.phi_family)
        return payload


def _reject_unknown_keys(node, allowed, label):
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise CliError(f"unknown {label} keys: {', '.join(unknown)}", field=label)


def _coefficient_node(node, label):
    if not isinstance(node, dict):
        raise CliError(f"{label} must be an object", field=label)
    _reject_unknown_keys(
        node, ("coeffs", "family", "s", "q", "gamma", "t_exp", "amplitude", "k_support"), label
    )
    if "coeffs" in node:
        return CoefficientVector(np.asarray(node["coeffs"], dtype=np.float64)), None
    if "family" in node:
        family = FunctionFamilySpec(
            kind=str(node["family"]),
            k_support=int(node.get("k_support", 50)),
            amplitude=float(node.get("amplitude", 1.0)),
            s=node.get("s"),
            q=node.get("q"),
            gamma=node.get("gamma"),
            t_exp=node.get("t_exp"),
        )
        try:
            return make_test_function(family), family
        except ValueError as exc:
            raise CliError(str(exc), field=label) from exc
    raise CliError(f"{label} must provide 'coeffs' or 'family'", field=label)


def load_config(path, study=None, seed=None, out=None, jobs=None):
    """Parse a JSON config file, applying CLI overrides.

    Returns (config, adjustments) where adjustments lists every
    normalization applied, for inclusion in the manifest.
    """
    adjustments = []
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise CliError(f"config file not found: {path}", field="config") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config file is not valid JSON: {exc}", field="config") from exc

    cfg_study = raw.get("study")
    if study is not None:
        if cfg_study is not None and cfg_study != study:
            adjustments.append(f"study overridden by subcommand: {cfg_study!r} -> {study!r}")
        cfg_study = study
    if cfg_study is None:
        raise CliError("config must name a study (or use a subcommand)", field="study")

    _reject_unknown_keys(
        raw,
        ("study", "dgp", "estimator", "n_grid", "reps", "master_seed", "output_dir", "jobs"),
        "config",
    )
    dgp_node = raw.get("dgp")
    if not isinstance(dgp_node, dict):
        raise CliError("config must provide a 'dgp' object", field="dgp")
    _reject_unknown_keys(dgp_node, ("t", "a", "eta_sd", "phi", "g"), "dgp")
    phi, phi_family = _coefficient_node(dgp_node.get("phi", {}), "dgp.phi")
    g, _ = _coefficient_node(dgp_node.get("g", {}), "dgp.g")
    try:
        dgp = DgpSpec(
            t=float(dgp_node.get("t", 1.0)),
            phi=phi,
            g=g,
            a=float(dgp_node.get("a", 0.0)),
            eta_sd=float(dgp_node.get("eta_sd", 0.5)),
        )
    except ValueError as exc:
        raise CliError(str(exc), field="dgp") from exc

    est_node = raw.get("estimator", {})
    _reject_unknown_keys(
        est_node,
        ("k_max", "n_cap", "penalty_log_exponent", "u0_constant", "allow_empty_model"),
        "estimator",
    )
    try:
        estimator = EstimatorConfig(
            k_max=int(est_node.get("k_max", 10**6)),
            n_cap=est_node.get("n_cap"),
            penalty_log_exponent=float(est_node.get("penalty_log_exponent", 2.0)),
            u0_constant=float(est_node.get("u0_constant", 2.0)),
            allow_empty_model=bool(est_node.get("allow_empty_model", True)),
        )
    except ValueError as exc:
        raise CliError(str(exc), field="estimator") from exc
    if estimator.n_cap is not None and estimator.n_cap > estimator.k_max:
        adjustments.append(
            f"resolution cap n_cap={estimator.n_cap} exceeds k_max={estimator.k_max}; "
            "the scan horizon is k_max"
        )

    output_dir = out if out is not None else raw.get("output_dir")
    if output_dir is None:
        raise CliError("an output directory is required (config output_dir or --out)", field="output_dir")

    job_count = jobs if jobs is not None else raw.get("jobs")
    if job_count is None:
        job_count = os.cpu_count() or 1
        adjustments.append(f"jobs defaulted to available cores: {job_count}")

    master_seed = seed if seed is not None else raw.get("master_seed")
    if master_seed is None:
        raise CliError("a master seed is required (config master_seed or --seed)", field="master_seed")
    if seed is not None and raw.get("master_seed") not in (None, seed):
        adjustments.append(f"master_seed overridden: {raw.get('master_seed')} -> {seed}")

    try:
        config = ExperimentConfig(
            study=cfg_study,
            dgp=dgp,
            estimator=estimator,
            n_grid=tuple(int(v) for v in raw.get("n_grid", [])),
            reps=int(raw.get("reps", 1)),
            master_seed=int(master_seed),
            output_dir=str(output_dir),
            jobs=int(job_count),
            phi_family=phi_family,
        )
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid config value: {exc}", field="config") from exc
    return config, adjustments


def emit_plot_data(curve: RiskCurve, path) -> None:
    """Two-block CSV for plotting: log-log risk points plus fit endpoints."""
    if curve.n_grid.size == 0:
        raise ValueError("cannot emit plot data for an empty risk curve")
    if curve.n_grid.size < 2:
        raise ValueError("plot data needs at least two grid points")
    x = np.log(curve.n_grid.astype(np.float64))
    y = np.log(curve.mean_loss)
    slope, intercept = _lsq_line(x, y)
    rows = [("data", xi, yi) for xi, yi in zip(x, y)]
    for xe in (float(x[0]), float(x[-1])):
        rows.append(("fit", xe, slope * xe + intercept))
    write_csv(path, ("block", "log_n", "log_loss"), rows)


def _run_simulate(config: ExperimentConfig, out: Path):
    n = int(config.n_grid[0])
    sample = generate_sample(
        config.dgp, n, seed=seeds.sequence(config.master_seed, "simulate", n, 0)
    )
    sample.to_csv(out / "sample.csv")
    return ["sample.csv"], {"study": "simulate", "n": n, "rows": n}


def _run_estimate(config: ExperimentConfig, out: Path):
    n = int(config.n_grid[0])
    sample = generate_sample(
        config.dgp, n, seed=seeds.sequence(config.master_seed, "estimate", n, 0)
    )
    report = adaptive_estimate(sample, config.estimator)
    write_json(out / "estimate_report.json", report.to_json_dict())
    report.write_phi_csv(out / "phi_hat.csv")
    return ["estimate_report.json", "phi_hat.csv"], {
        "study": "estimate",
        "n": n,
        "m_selected": report.m_selected,
        "resolution": report.resolution,
        "empty_model": report.empty_model,
    }


def _risk_curve_payload(config: ExperimentConfig, result) -> dict:
    return {
        "n_grid": to_plain(result.curve.n_grid),
        "mean_loss": to_plain(result.curve.mean_loss),
        "stderr": to_plain(result.curve.stderr),
        "oracle_risk": to_plain(result.curve.oracle_risk),
        "ratio": to_plain(result.ratio),
        "naive_mean_loss": to_plain(result.naive_mean_loss),
        "naive_stderr": to_plain(result.naive_stderr),
        "oracle_levels": to_plain(result.oracle_levels),
        "reps": result.curve.reps,
        "master_seed": config.master_seed,
    }


def _write_risk_curve_csv(out: Path, result) -> None:
    rows = [
        (int(n), m, s, o, r)
        for n, m, s, o, r in zip(
            result.curve.n_grid,
            result.curve.mean_loss,
            result.curve.stderr,
            result.curve.oracle_risk,
            result.ratio,
        )
    ]
    write_csv(out / "risk_curve.csv", ("n", "mean_loss", "stderr", "oracle_risk", "ratio"), rows)


def _run_risk_curve(config: ExperimentConfig, out: Path):
    result = oracle_ratio_study(
        config.dgp,
        config.estimator,
        config.n_grid,
        config.reps,
        config.master_seed,
        jobs=config.jobs,
    )
    _write_risk_curve_csv(out, result)
    return ["risk_curve.csv"], {"study": "risk-curve", **_risk_curve_payload(config, result)}


def _run_rate_study(config: ExperimentConfig, out: Path):
    family = config.phi_family
    if family is None or family.kind != "sobolev":
        raise CliError(
            "rate-study needs dgp.phi given as a sobolev family so the smoothness s is known",
            field="dgp.phi",
        )
    result = oracle_ratio_study(
        config.dgp,
        config.estimator,
        config.n_grid,
        config.reps,
        config.master_seed,
        jobs=config.jobs,
    )
    fit = rate_fit(result.curve, s=float(family.s), t=float(config.dgp.t))
    _write_risk_curve_csv(out, result)
    write_json(out / "rate_fit.json", to_plain(fit))
    emit_plot_data(result.curve, out / "plot_data.csv")
    payload = {
        "study": "rate-study",
        **_risk_curve_payload(config, result),
        "rate_fit": to_plain(fit),
    }
    return ["risk_curve.csv", "rate_fit.json", "plot_data.csv"], payload


def _run_coverage_study(config: ExperimentConfig, out: Path):
    results = [
        coverage_study(
            config.dgp, config.estimator, int(n), config.reps, config.master_seed, jobs=config.jobs
        )
        for n in config.n_grid
    ]
    rows = [
        (r.n, r.reps, r.hits, r.fraction, r.ci_low, r.ci_high, r.lower_bound, r.upper_bound)
        for r in results
    ]
    write_csv(
        out / "coverage.csv",
        ("n", "reps", "hits", "fraction", "ci_low", "ci_high", "lower_bound", "upper_bound"),
        rows,
    )
    return ["coverage.csv"], {"study": "coverage-study", "results": to_plain(results)}


def _run_oracle_study(config: ExperimentConfig, out: Path):
    summaries = [
        oracle_summary(config.dgp, config.estimator, int(n), config.master_seed)
        for n in config.n_grid
    ]
    rows = [
        (
            s.n,
            s.oracle_m,
            s.restricted_oracle_m,
            s.resolution,
            s.lower_bound,
            s.upper_bound,
            s.remainder,
            float(np.min(s.risk_values)),
            float(np.min(s.penalized_risk_values)),
        )
        for s in summaries
    ]
    write_csv(
        out / "oracle_summary.csv",
        (
            "n",
            "oracle_m",
            "restricted_oracle_m",
            "resolution",
            "lower_bound",
            "upper_bound",
            "remainder",
            "min_risk",
            "min_penalized_risk",
        ),
        rows,
    )
    return ["oracle_summary.csv"], {"study": "oracle-study", "results": to_plain(summaries)}


_DISPATCH = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "risk-curve": _run_risk_curve,
    "rate-study": _run_rate_study,
    "coverage-study": _run_coverage_study,
    "oracle-study": _run_oracle_study,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(config: ExperimentConfig, adjustments=()) -> dict:
    """Execute the configured study; returns the manifest payload."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    files, results = _DISPATCH[config.study](config, out)
    results_payload = {"config": config.to_json_dict(run_params=False), **results}
    write_json(out / "results.json", results_payload)
    files = list(files) + ["results.json"]
    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest = {
        "tool": "ivadapt",
        "version": __version__,
        "study": config.study,
        "master_seed": config.master_seed,
        "config": config.to_json_dict(),
        "started_at": started,
        "finished_at": finished,
        "adjustments": list(adjustments),
        "outputs": {
            name: {"sha256": _sha256(out / name), "bytes": (out / name).stat().st_size}
            for name in sorted(files)
        },
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivadapt",
        description="Adaptive spectral cut-off estimation: simulation and Monte Carlo studies.",
    )
    sub = parser.add_subparsers(dest="study", required=True)
    for name in STUDIES:
        sp = sub.add_parser(name, help=f"run the {name} study")
        sp.add_argument("--config", required=True, help="path to the JSON config document")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--out", default=None, help="override the output directory")
        sp.add_argument("--jobs", type=int, default=None, help="parallel replication workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config, adjustments = load_config(
            args.config, study=args.study, seed=args.seed, out=args.out, jobs=args.jobs
        )
        run(config, adjustments)
    except CliError as exc:
        record = {"error": str(exc), **exc.context}
        sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return 2
    except OSError as exc:
        record = {"error": str(exc), "path": getattr(exc, "filename", None)}
        sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
