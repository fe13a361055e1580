"""Command-line front end: estimation, bounds, simulation and cohort splitting.

Every run is driven by a JSON config (flags override config fields), writes
a machine-readable ``report.json`` embedding the resolved config, a human
``summary.txt`` and mode-specific CSVs, and exits with a stable code per
error category: 2 config, 3 data, 4 estimation.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from .bounds import auto_scale, bounds_report
from .crossfit import CrossfitPlan, cross_fit, diagnostics
from .dataset import load_csv, parse_mapping, write_csv, default_mapping
from .errors import ConfigError, DataError, EstimationError, SwlateError
from .estimator import swlate
from .learners import LearnerSpec
from .presets import PRESET_NAMES, learners_from_preset, make_plan
from .simulation import (
    DgmSpec,
    cohort_split,
    gen_cohorts,
    ground_truth_late,
    run_replications,
    standardized_mean_differences,
)

SCHEMA_VERSION = 1
MODES = ("estimate", "bounds", "simulate", "cohort-split", "gen-data")
NUISANCE_NAMES = ("outcome", "treatment", "instrument", "sampling")


@dataclass
class RunConfig:
    """Fully resolved run description; serialized verbatim into every report."""

    mode: str
    seed: int = 0
    alpha: float = 0.05
    folds: int = 5
    weighted: bool | None = None  # None reports both arms
    learners: str | dict = "glm"
    clip_e: tuple[float, float] = (0.01, 0.99)
    clip_eta: tuple[float, float] = (0.01, 0.99)
    data: dict = field(default_factory=dict)
    dgm: dict = field(default_factory=dict)
    reps: int = 100
    estimands: str = "late"
    workers: int = 1
    cohort_split: dict = field(default_factory=dict)
    out: str = "swlate-out"

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "seed": self.seed,
            "alpha": self.alpha,
            "folds": self.folds,
            "weighted": self.weighted,
            "learners": self.learners if isinstance(self.learners, str) else self.learners,
            "clip_e": list(self.clip_e),
            "clip_eta": list(self.clip_eta),
            "data": self.data,
            "dgm": self.dgm,
            "reps": self.reps,
            "estimands": self.estimands,
            "workers": self.workers,
            "cohort_split": self.cohort_split,
            "out": self.out,
        }
        return out


def _check_learners(value, errors: list[str]) -> None:
    if isinstance(value, str):
        if value not in PRESET_NAMES:
            errors.append(f"learners: unknown preset {value!r}; expected one of {PRESET_NAMES}")
        return
    if not isinstance(value, dict):
        errors.append("learners: must be a preset name or a {nuisance: spec} object")
        return
    missing = [n for n in NUISANCE_NAMES if n not in value]
    if missing:
        errors.append(f"learners: missing specs for {missing}")
    for name, spec in value.items():
        if name not in NUISANCE_NAMES:
            errors.append(f"learners.{name}: unknown nuisance (expected {NUISANCE_NAMES})")
            continue
        try:
            LearnerSpec.from_dict(spec)
        except (TypeError, ValueError) as exc:
            errors.append(f"learners.{name}: {exc}")


def validate_config(source: dict | str | Path) -> RunConfig:
    """Validate a config mapping (or JSON file path); reports every violation."""
    if not isinstance(source, dict):
        path = Path(source)
        if not path.exists():
            raise ConfigError([f"config file {path} does not exist"])
        try:
            source = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file {path} is not valid JSON: {exc}"]) from exc
        if not isinstance(source, dict):
            raise ConfigError([f"config file {path} must hold a JSON object"])

    errors: list[str] = []
    known = set(RunConfig.__dataclass_fields__)
    for key in source:
        if key not in known:
            errors.append(f"unknown config key {key!r}")
    cfg = {k: v for k, v in source.items() if k in known}

    mode = cfg.get("mode")
    if mode not in MODES:
        errors.append(f"mode: expected one of {MODES}, got {mode!r}")

    alpha = cfg.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not (0.0 < alpha < 1.0):
        errors.append(f"alpha: must be a number in (0, 1), got {alpha!r}")
    folds = cfg.get("folds", 5)
    if not isinstance(folds, int) or folds < 2:
        errors.append(f"folds: must be an integer >= 2, got {folds!r}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        errors.append(f"seed: must be an integer, got {seed!r}")
    reps = cfg.get("reps", 100)
    if not isinstance(reps, int) or reps < 2:
        errors.append(f"reps: must be an integer >= 2, got {reps!r}")
    workers = cfg.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        errors.append(f"workers: must be a positive integer, got {workers!r}")
    weighted = cfg.get("weighted")
    if weighted is not None and not isinstance(weighted, bool):
        errors.append(f"weighted: must be true, false or omitted, got {weighted!r}")
    estimands = cfg.get("estimands", "late")
    if estimands not in ("late", "bounds", "both"):
        errors.append(f"estimands: expected late, bounds or both, got {estimands!r}")

    for name in ("clip_e", "clip_eta"):
        bounds = cfg.get(name, (0.01, 0.99))
        ok = (
            isinstance(bounds, (list, tuple))
            and len(bounds) == 2
            and all(isinstance(v, (int, float)) for v in bounds)
            and 0.0 < bounds[0] < bounds[1] < 1.0
        )
        if not ok:
            errors.append(f"{name}: must be [lo, hi] with 0 < lo < hi < 1, got {bounds!r}")
        else:
            cfg[name] = (float(bounds[0]), float(bounds[1]))

    _check_learners(cfg.get("learners", "glm"), errors)

    data = cfg.get("data", {})
    if not isinstance(data, dict):
        errors.append("data: must be an object of file paths")
        data = {}
    if mode in ("estimate", "bounds"):
        for key in ("a", "b", "mapping"):
            if key not in data:
                errors.append(f"data.{key}: required in {mode} mode")
    if mode == "cohort-split":
        for key in ("input", "mapping"):
            if key not in data:
                errors.append(f"data.{key}: required in cohort-split mode")
        split = cfg.get("cohort_split", {})
        if not isinstance(split, dict) or "slopes" not in split:
            errors.append("cohort_split.slopes: required in cohort-split mode")

    dgm = cfg.get("dgm", {})
    if not isinstance(dgm, dict):
        errors.append("dgm: must be an object of generator settings")
    elif mode in ("simulate", "gen-data"):
        try:
            DgmSpec.from_dict({"seed": seed, **dgm})
        except (TypeError, ValueError) as exc:
            errors.append(f"dgm: {exc}")

    if errors:
        raise ConfigError(errors)
    return RunConfig(**cfg)


def _resolve_learners(config: RunConfig) -> dict[str, LearnerSpec]:
    if isinstance(config.learners, str):
        return learners_from_preset(config.learners)
    return {name: LearnerSpec.from_dict(spec) for name, spec in config.learners.items()}


def _plan(config: RunConfig) -> CrossfitPlan:
    return make_plan(
        _resolve_learners(config),
        k=config.folds,
        clip_e=config.clip_e,
        clip_eta=config.clip_eta,
        seed=config.seed,
    )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _emit(config: RunConfig, results: dict, summary_lines: list[str]) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "report.json",
        {"schema_version": SCHEMA_VERSION, "config": config.to_dict(), "results": results},
    )
    (out / "summary.txt").write_text("\n".join(summary_lines) + "\n")
    return out


def _load_two_studies(config: RunConfig):
    mapping = parse_mapping(config.data["mapping"])
    a = load_csv(config.data["a"], mapping, label="A")
    b = load_csv(config.data["b"], mapping, label="B")
    if a.p != b.p:
        raise DataError(f"study files disagree on covariate count: {a.p} vs {b.p}")
    return a, b


def _weighted_arms(config: RunConfig) -> tuple[bool, ...]:
    if config.weighted is None:
        return (True, False)
    return (config.weighted,)


def _run_estimate(config: RunConfig) -> Path:
    a, b = _load_two_studies(config)
    plan = _plan(config)
    preds = cross_fit(a, b, plan)
    diag = diagnostics(preds, b, plan)
    results: dict = {"diagnostics": diag.to_dict(), "estimates": {}}
    lines = [f"SWLATE estimate  (study B n={b.n}, study A n={a.n}, K={plan.k})", ""]
    for weighted in _weighted_arms(config):
        report = swlate(preds, b, alpha=config.alpha, weighted=weighted)
        key = "weighted" if weighted else "unweighted"
        results["estimates"][key] = report.to_dict()
        lines.append(
            f"{key:>10}: point {report.point:+.6f}  se {report.se:.6f}  "
            f"{(1 - config.alpha) * 100:.0f}% CI [{report.ci_lower:+.6f}, {report.ci_upper:+.6f}]"
        )
    lines += ["", *diag.summary_lines()]
    out = _emit(config, results, lines)
    preds.export_csv(out / "diagnostics.csv")
    return out


def _run_bounds(config: RunConfig) -> Path:
    a, b = _load_two_studies(config)
    plan = _plan(config)
    scale = auto_scale(a, b)
    results: dict = {"bounds": {}}
    lines = [f"ATE bounds  (study B n={b.n}, outcome range [{scale.y_min:.6g}, {scale.y_max:.6g}])", ""]
    for weighted in _weighted_arms(config):
        report = bounds_report(a, b, plan, alpha=config.alpha, weighted=weighted, scale=scale)
        key = "weighted" if weighted else "unweighted"
        results["bounds"][key] = report.to_dict()
        lines.append(
            f"{key:>10}: [{report.lower:+.6f}, {report.upper:+.6f}]  "
            f"(scaled [{report.lower / scale.span:+.4f}, {report.upper / scale.span:+.4f}])  "
            f"CI lower {report.lower_ci[0]:+.6f}, CI upper {report.upper_ci[1]:+.6f}"
        )
    return _emit(config, results, lines)


def _run_simulate(config: RunConfig) -> Path:
    spec = DgmSpec.from_dict({"seed": config.seed, **config.dgm})
    plan = _plan(config)
    result = run_replications(
        spec,
        plan,
        reps=config.reps,
        alpha=config.alpha,
        mode=config.estimands,
        workers=config.workers,
    )
    results = {
        "late_target": result.late_target,
        "ate_target": result.ate_target,
        "summaries": [s.to_dict() for s in result.summaries],
        "failures": [{"rep": rep, "error": msg} for rep, msg in result.failures],
    }
    lines = [
        f"replication study: {spec.linearity} DGM, strength {spec.strength}, "
        f"n={spec.n}, reps={config.reps}",
        f"targets: LATE(A) {result.late_target:.6f}, ATE(A) {result.ate_target:.6f}",
        "",
    ]
    for s in result.summaries:
        d = s.to_dict()
        if s.estimand == "late":
            lines.append(
                f"late {'weighted' if s.weighted else 'unweighted':>10}: "
                f"mean {d['mean_point']:+.4f}  bias {d['bias_pct']:+.2f}%  "
                f"mc-se {d['mc_se']:.4f}  model-se {d['mean_model_se']:.4f}  "
                f"coverage {d['coverage']:.3f}"
            )
        else:
            lines.append(
                f"bounds {'weighted' if s.weighted else 'unweighted':>10}: "
                f"[{d['mean_lower']:+.4f}, {d['mean_upper']:+.4f}]  "
                f"width {d['mean_width']:.4f}  coverage {d['coverage_interval']:.3f}"
            )
    out = _emit(config, results, lines)
    import pandas as pd

    pd.DataFrame([dict(r) for r in result.records]).to_csv(
        out / "replications.csv", index=False, float_format="%.17g"
    )
    pd.DataFrame([s.to_dict() for s in result.summaries]).to_csv(
        out / "summary.csv", index=False, float_format="%.17g"
    )
    return out


def _run_cohort_split(config: RunConfig) -> Path:
    mapping = parse_mapping(config.data["mapping"])
    sample = load_csv(config.data["input"], mapping, label="target")
    split = config.cohort_split
    slopes = split["slopes"]
    if isinstance(slopes, dict):
        missing = [c for c in mapping.covariates if c not in slopes]
        extra = [c for c in slopes if c not in mapping.covariates]
        if missing or extra:
            raise DataError(
                f"cohort-split slopes do not match covariates (missing {missing}, unknown {extra})"
            )
        vector = [float(split.get("intercept", 0.0))] + [float(slopes[c]) for c in mapping.covariates]
    else:
        vector = [float(split.get("intercept", 0.0))] + [float(v) for v in slopes]
    target, current = cohort_split(sample, np.asarray(vector), seed=config.seed)
    smd = standardized_mean_differences(target, current)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(target, out / "target.csv")
    write_csv(current, out / "current.csv")
    results = {
        "n": target.n,
        "coefficients": vector,
        "smd": {name: float(v) for name, v in zip(mapping.covariates, smd)},
    }
    lines = [f"cohort split of {config.data['input']} (n={target.n})", "",
             "standardized mean differences (current - target):"]
    lines += [f"  {name:>12}: {v:+.4f}" for name, v in zip(mapping.covariates, smd)]
    _emit(config, results, lines)
    return out


def _run_gen_data(config: RunConfig) -> Path:
    spec = DgmSpec.from_dict({"seed": config.seed, **config.dgm})
    cohorts = gen_cohorts(spec)
    truth = ground_truth_late(spec, reps=min(2000, max(2, config.reps)))
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(cohorts.a, out / "a.csv")
    write_csv(cohorts.b, out / "b.csv")
    mapping = default_mapping(cohorts.a)
    (out / "mapping.txt").write_text(
        "instrument = z\ntreatment = d\noutcome = y\ncovariates = "
        + ", ".join(mapping.covariates)
        + "\n"
    )
    results = {
        "n": spec.n,
        "ground_truth": {
            "late_a": truth.late_a,
            "late_b": truth.late_b,
            "mc_se_a": truth.mc_se_a,
            "mc_se_b": truth.mc_se_b,
            "ate_a": truth.ate_a,
        },
    }
    lines = [
        f"generated cohorts under the {spec.linearity} DGM (strength {spec.strength}, n={spec.n})",
        f"ground-truth LATE: study A {truth.late_a:.4f}, study B {truth.late_b:.4f}",
        f"files: a.csv, b.csv, mapping.txt",
    ]
    _emit(config, results, lines)
    return out


_RUNNERS = {
    "estimate": _run_estimate,
    "bounds": _run_bounds,
    "simulate": _run_simulate,
    "cohort-split": _run_cohort_split,
    "gen-data": _run_gen_data,
}


def run(config: RunConfig) -> Path:
    """Execute a validated run config; returns the output directory."""
    return _RUNNERS[config.mode](config)


def _merge_flags(mode: str, config_path, flags: dict) -> RunConfig:
    base: dict = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError([f"config file {path} does not exist"])
        try:
            base = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file {path} is not valid JSON: {exc}"]) from exc
        if not isinstance(base, dict):
            raise ConfigError([f"config file {path} must hold a JSON object"])
    base["mode"] = mode
    for key, value in flags.items():
        if value is not None:
            base[key] = value
    return validate_config(base)


def _execute(mode: str, config_path, **flags) -> None:
    try:
        config = _merge_flags(mode, config_path, flags)
        out = run(config)
    except ConfigError as exc:
        click.echo(json.dumps({"category": exc.category, "errors": exc.errors}), err=True)
        sys.exit(exc.exit_code)
    except SwlateError as exc:
        click.echo(json.dumps({"category": exc.category, "errors": [str(exc)]}), err=True)
        sys.exit(exc.exit_code)
    except ValueError as exc:
        click.echo(json.dumps({"category": "data", "errors": [str(exc)]}), err=True)
        sys.exit(DataError.exit_code)
    click.echo(f"report written to {out}")


def _common_options(fn):
    fn = click.option("--config", type=click.Path(), default=None, help="JSON config file.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed for all randomness.")(fn)
    fn = click.option("--folds", type=int, default=None, help="Cross-fitting fold count.")(fn)
    fn = click.option("--alpha", type=float, default=None, help="CI significance level.")(fn)
    fn = click.option(
        "--learners", type=str, default=None, help="Learner preset (glm or ensemble)."
    )(fn)
    fn = click.option(
        "--weighted/--unweighted", "weighted", default=None, help="Report only one arm."
    )(fn)
    fn = click.option("--reps", type=int, default=None, help="Replication count.")(fn)
    fn = click.option("--workers", type=int, default=None, help="Parallel worker count.")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="Output directory.")(fn)
    return fn


@click.group()
def main() -> None:
    """Survey-weighted LATE estimation and ATE bounds across two cohorts."""


@main.command()
@_common_options
def estimate(config, **flags):
    """Point estimate with influence-function CI from two study files."""
    _execute("estimate", config, **flags)


@main.command()
@_common_options
def bounds(config, **flags):
    """Treatment-effect bounds for the target study."""
    _execute("bounds", config, **flags)


@main.command()
@_common_options
def simulate(config, **flags):
    """Replication study on simulated cohorts."""
    _execute("simulate", config, **flags)


@main.command("cohort-split")
@_common_options
def cohort_split_cmd(config, **flags):
    """Split one dataset into synthetic target and current cohorts."""
    _execute("cohort-split", config, **flags)


@main.command("gen-data")
@_common_options
def gen_data(config, **flags):
    """Write simulated cohort CSVs plus their column mapping."""
    _execute("gen-data", config, **flags)


if __name__ == "__main__":
    main()
