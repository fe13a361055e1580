"""Two-study cross-fitting of nuisance functions.

For each fold of study B, the outcome and treatment regressions are fit
per instrument arm on the fold's complement, the instrument propensity is
fit on the complement, and the sampling score is fit on study A pooled with
the complement. Predictions are made only on the held-out fold, so every
unit's nuisance values are independent of its own data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .dataset import FoldAssignment, StudySample, make_folds, pool_for_weights
from .errors import CrossfitError
from .learners import LearnerSpec, fit

DEFAULT_CLIP = (0.01, 0.99)


@dataclass(frozen=True)
class CrossfitPlan:
    """Learner specs, fold count, clip bounds and master seed for one run."""

    outcome: LearnerSpec
    treatment: LearnerSpec
    instrument: LearnerSpec
    sampling: LearnerSpec
    k: int = 5
    clip_e: tuple[float, float] = DEFAULT_CLIP
    clip_eta: tuple[float, float] = DEFAULT_CLIP
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"cross-fitting needs at least 2 folds, got {self.k}")
        for name, (lo, hi) in (("clip_e", self.clip_e), ("clip_eta", self.clip_eta)):
            if not (0.0 < lo < hi < 1.0):
                raise ValueError(f"{name} bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")


@dataclass(frozen=True)
class NuisancePredictions:
    """Held-out-fold nuisance predictions for every unit of study B.

    ``w`` is (1 - eta) / eta computed after clipping; the raw (pre-clip)
    propensities are kept for diagnostics.
    """

    mu1: np.ndarray
    mu0: np.ndarray
    m1: np.ndarray
    m0: np.ndarray
    e: np.ndarray
    eta: np.ndarray
    w: np.ndarray
    fold_index: np.ndarray
    e_raw: np.ndarray
    eta_raw: np.ndarray

    @property
    def n(self) -> int:
        return self.mu1.shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "unit": np.arange(self.n),
                "fold": self.fold_index,
                "mu1": self.mu1,
                "mu0": self.mu0,
                "m1": self.m1,
                "m0": self.m0,
                "e_raw": self.e_raw,
                "e": self.e,
                "eta_raw": self.eta_raw,
                "eta": self.eta,
                "w": self.w,
            }
        )

    def export_csv(self, path) -> None:
        """Audit export, one row per study-B unit."""
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _plan_seeds(plan: CrossfitPlan) -> tuple[int, list[list[int]]]:
    """Fold seed plus ten per-fold learner seeds, a pure function of the plan."""
    root = np.random.SeedSequence(plan.seed)
    children = root.spawn(1 + plan.k)
    fold_seed = _seed_int(children[0])
    per_fold = [[_seed_int(s) for s in child.spawn(10)] for child in children[1:]]
    return fold_seed, per_fold


def _fit_predict(spec, x_train, y_train, target_type, seed, x_test, context):
    try:
        model = fit(spec, x_train, y_train, target_type, seed)
        return model.predict(x_test)
    except CrossfitError:
        raise
    except Exception as exc:
        raise CrossfitError(f"{context}: {type(exc).__name__}: {exc}") from exc


def _arm_rows(z_train: np.ndarray, fold: int) -> tuple[np.ndarray, np.ndarray]:
    z1 = np.flatnonzero(z_train == 1.0)
    z0 = np.flatnonzero(z_train == 0.0)
    for arm, rows in ((1, z1), (0, z0)):
        if rows.size == 0:
            raise CrossfitError(
                f"fold {fold}: training complement has no Z={arm} units; "
                "cannot fit per-arm nuisances"
            )
    return z1, z0


def crossfit_folds(b: StudySample, plan: CrossfitPlan) -> FoldAssignment:
    """The fold assignment a plan induces on study B (deterministic)."""
    fold_seed, _ = _plan_seeds(plan)
    return make_folds(b, plan.k, fold_seed)


def cross_fit(a: StudySample, b: StudySample, plan: CrossfitPlan) -> NuisancePredictions:
    """Run the two-study cross-fitting procedure and collect held-out predictions."""
    if a.p != b.p:
        raise ValueError(f"studies have different covariate dimensions: {a.p} vs {b.p}")
    fold_seed, fold_seeds = _plan_seeds(plan)
    folds = make_folds(b, plan.k, fold_seed)

    n = b.n
    out = {name: np.empty(n) for name in ("mu1", "mu0", "m1", "m0", "e_raw", "eta_raw")}
    x, z, d, y = b.covariates, b.instrument, b.treatment, b.outcome

    for fold in range(1, plan.k + 1):
        train = folds.train_rows(fold)
        test = folds.test_rows(fold)
        seeds = fold_seeds[fold - 1]
        x_tr, x_te = x[train], x[test]
        z1, z0 = _arm_rows(z[train], fold)

        out["mu1"][test] = _fit_predict(
            plan.outcome, x_tr[z1], y[train][z1], "regression", seeds[0], x_te,
            f"fold {fold}, outcome regression on Z=1 arm",
        )
        out["mu0"][test] = _fit_predict(
            plan.outcome, x_tr[z0], y[train][z0], "regression", seeds[1], x_te,
            f"fold {fold}, outcome regression on Z=0 arm",
        )
        out["m1"][test] = _fit_predict(
            plan.treatment, x_tr[z1], d[train][z1], "probability", seeds[2], x_te,
            f"fold {fold}, treatment model on Z=1 arm",
        )
        out["m0"][test] = _fit_predict(
            plan.treatment, x_tr[z0], d[train][z0], "probability", seeds[3], x_te,
            f"fold {fold}, treatment model on Z=0 arm",
        )
        out["e_raw"][test] = _fit_predict(
            plan.instrument, x_tr, z[train], "probability", seeds[4], x_te,
            f"fold {fold}, instrument propensity",
        )
        pooled = pool_for_weights(a, x_tr)
        out["eta_raw"][test] = _fit_predict(
            plan.sampling, pooled.covariates, pooled.membership, "probability", seeds[5], x_te,
            f"fold {fold}, sampling score",
        )

    e = np.clip(out["e_raw"], *plan.clip_e)
    eta = np.clip(out["eta_raw"], *plan.clip_eta)
    return NuisancePredictions(
        mu1=out["mu1"],
        mu0=out["mu0"],
        m1=out["m1"],
        m0=out["m0"],
        e=e,
        eta=eta,
        w=(1.0 - eta) / eta,
        fold_index=folds.fold_index.copy(),
        e_raw=out["e_raw"],
        eta_raw=out["eta_raw"],
    )


@dataclass(frozen=True)
class DiagnosticsReport:
    """Positivity and instrument-strength diagnostics; advisory, never fatal."""

    n: int
    e_deciles: np.ndarray
    eta_deciles: np.ndarray
    frac_e_clipped: float
    frac_eta_clipped: float
    strength: float
    weight_cv: float
    weak_instrument: bool
    positivity_warning: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "e_deciles": [float(v) for v in self.e_deciles],
            "eta_deciles": [float(v) for v in self.eta_deciles],
            "frac_e_clipped": self.frac_e_clipped,
            "frac_eta_clipped": self.frac_eta_clipped,
            "strength": self.strength,
            "weight_cv": self.weight_cv,
            "weak_instrument": self.weak_instrument,
            "positivity_warning": self.positivity_warning,
        }

    def summary_lines(self) -> list[str]:
        lines = [
            f"instrument strength mean(m1 - m0): {self.strength:.4f}"
            + ("  [WEAK-IV WARNING]" if self.weak_instrument else ""),
            f"fraction clipped: e {self.frac_e_clipped:.3f}, eta {self.frac_eta_clipped:.3f}"
            + ("  [POSITIVITY WARNING]" if self.positivity_warning else ""),
            f"weight coefficient of variation: {self.weight_cv:.4f}",
            "e deciles (pre-clip):   " + " ".join(f"{v:.3f}" for v in self.e_deciles),
            "eta deciles (pre-clip): " + " ".join(f"{v:.3f}" for v in self.eta_deciles),
        ]
        return lines


WEAK_IV_THRESHOLD = 0.05
CLIP_WARNING_FRACTION = 0.20


def diagnostics(preds: NuisancePredictions, b: StudySample, plan: CrossfitPlan | None = None) -> DiagnosticsReport:
    """Summaries of the nuisance predictions: deciles, clipping, strength, flags."""
    clip_e = plan.clip_e if plan is not None else DEFAULT_CLIP
    clip_eta = plan.clip_eta if plan is not None else DEFAULT_CLIP
    frac_e = float(np.mean((preds.e_raw < clip_e[0]) | (preds.e_raw > clip_e[1])))
    frac_eta = float(np.mean((preds.eta_raw < clip_eta[0]) | (preds.eta_raw > clip_eta[1])))
    strength = float(np.mean(preds.m1 - preds.m0))
    mean_w = float(np.mean(preds.w))
    weight_cv = float(np.std(preds.w) / mean_w) if mean_w != 0 else float("inf")
    return DiagnosticsReport(
        n=preds.n,
        e_deciles=np.percentile(preds.e_raw, np.arange(0, 101, 10)),
        eta_deciles=np.percentile(preds.eta_raw, np.arange(0, 101, 10)),
        frac_e_clipped=frac_e,
        frac_eta_clipped=frac_eta,
        strength=strength,
        weight_cv=weight_cv,
        weak_instrument=strength < WEAK_IV_THRESHOLD,
        positivity_warning=max(frac_e, frac_eta) > CLIP_WARNING_FRACTION,
    )
