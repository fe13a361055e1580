"""Weighted (and unweighted) ATE bounds from instrument-implied envelopes.

The outcome is scaled to [0, 1], four envelope targets are built from the
scaled outcome and the treatment, and each bound is estimated like a
weighted ATE of the corresponding envelope contrast, with influence-function
confidence intervals. Results are reported back in original outcome units;
since a treatment effect is a difference, only the slope of the affine
rescaling applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .crossfit import CrossfitPlan, NuisancePredictions, _fit_predict, _arm_rows, _plan_seeds
from .dataset import StudySample, make_folds, pool_for_weights
from .errors import DataError, EstimationError, InternalError
from .estimator import augmented_contrast

BOUND_ORDER_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OutcomeScale:
    """Affine map from original outcome units onto [0, 1]."""

    y_min: float
    y_max: float

    def __post_init__(self):
        if not self.y_max > self.y_min:
            raise ValueError(f"outcome scale needs y_max > y_min, got ({self.y_min}, {self.y_max})")

    @property
    def span(self) -> float:
        return self.y_max - self.y_min

    def forward(self, y: np.ndarray) -> np.ndarray:
        return np.clip((y - self.y_min) / self.span, 0.0, 1.0)

    def invert(self, scaled: np.ndarray) -> np.ndarray:
        return scaled * self.span + self.y_min


def auto_scale(*samples: StudySample) -> OutcomeScale:
    """Min/max scale over the pooled outcomes of every sample given."""
    pooled = np.concatenate([s.outcome for s in samples])
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        raise DataError("outcome is constant; cannot auto-scale to [0, 1]")
    return OutcomeScale(lo, hi)


def scale_outcome(
    sample: StudySample, scale: OutcomeScale | None = None
) -> tuple[StudySample, OutcomeScale]:
    """Scale a sample's outcome into [0, 1]; auto mode uses the sample's own range.

    When bounds target another study, pass a scale pooled over both studies
    (see :func:`auto_scale`); values outside the scale are clamped.
    """
    if scale is None:
        scale = auto_scale(sample)
    return sample.with_outcome(scale.forward(sample.outcome)), scale


def v_variables(b: StudySample) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Envelope targets (upper/lower, per arm) from a [0, 1]-scaled sample.

    Returns ``(v_u1, v_l1, v_u0, v_l0)`` where the treated-arm envelopes
    replace untreated outcomes by the extremes 1 (upper) and 0 (lower), and
    symmetrically for the untreated arm.
    """
    y, d = b.outcome, b.treatment
    if y.min() < 0.0 or y.max() > 1.0:
        raise ValueError("outcome must be scaled to [0, 1] before building envelope targets")
    v_u1 = y * d + 1.0 - d
    v_l1 = y * d
    v_u0 = y * (1.0 - d)
    v_l0 = y * (1.0 - d) + d
    return v_u1, v_l1, v_u0, v_l0


@dataclass(frozen=True)
class BoundNuisance:
    """Held-out predictions of the envelope regressions plus shared e, eta, w."""

    v_u1: np.ndarray
    v_l1: np.ndarray
    v_u0: np.ndarray
    v_l0: np.ndarray
    e: np.ndarray
    eta: np.ndarray
    w: np.ndarray
    fold_index: np.ndarray

    @property
    def n(self) -> int:
        return self.e.shape[0]


def cross_fit_bounds(
    a: StudySample,
    b_scaled: StudySample,
    plan: CrossfitPlan,
    base: NuisancePredictions | None = None,
) -> BoundNuisance:
    """Cross-fit the four envelope regressions per arm; reuse e/eta from ``base``.

    When ``base`` is given (a nuisance set from the same plan on the same
    study B), its fold assignment and clipped propensities are shared so the
    bounds and the point estimate rest on identical weights.
    """
    if a.p != b_scaled.p:
        raise ValueError(f"studies have different covariate dimensions: {a.p} vs {b_scaled.p}")
    fold_seed, fold_seeds = _plan_seeds(plan)
    if base is not None:
        if base.n != b_scaled.n:
            raise ValueError("base nuisance predictions do not match study B's size")
        fold_index = base.fold_index
    else:
        fold_index = make_folds(b_scaled, plan.k, fold_seed).fold_index

    n = b_scaled.n
    x, z = b_scaled.covariates, b_scaled.instrument
    targets = v_variables(b_scaled)
    names = ("upper envelope (Z=1)", "lower envelope (Z=1)",
             "upper envelope (Z=0)", "lower envelope (Z=0)")
    arms = (1, 1, 0, 0)
    out = [np.empty(n) for _ in range(4)]
    e_raw = np.empty(n)
    eta_raw = np.empty(n)

    for fold in range(1, plan.k + 1):
        train = np.flatnonzero(fold_index != fold)
        test = np.flatnonzero(fold_index == fold)
        seeds = fold_seeds[fold - 1]
        x_tr, x_te = x[train], x[test]
        z1, z0 = _arm_rows(z[train], fold)
        for i, (target, arm, name) in enumerate(zip(targets, arms, names)):
            rows = z1 if arm == 1 else z0
            out[i][test] = _fit_predict(
                plan.outcome, x_tr[rows], target[train][rows], "regression",
                seeds[6 + i], x_te, f"fold {fold}, {name} regression",
            )
        if base is None:
            e_raw[test] = _fit_predict(
                plan.instrument, x_tr, z[train], "probability", seeds[4], x_te,
                f"fold {fold}, instrument propensity",
            )
            pooled = pool_for_weights(a, x_tr)
            eta_raw[test] = _fit_predict(
                plan.sampling, pooled.covariates, pooled.membership, "probability",
                seeds[5], x_te, f"fold {fold}, sampling score",
            )

    if base is not None:
        e, eta, w = base.e, base.eta, base.w
    else:
        e = np.clip(e_raw, *plan.clip_e)
        eta = np.clip(eta_raw, *plan.clip_eta)
        w = (1.0 - eta) / eta
    return BoundNuisance(
        v_u1=out[0], v_l1=out[1], v_u0=out[2], v_l0=out[3],
        e=e, eta=eta, w=w, fold_index=np.asarray(fold_index),
    )


@dataclass(frozen=True)
class BoundSide:
    """One bound (lower or upper) with its influence-function interval."""

    side: str
    point: float
    se: float
    ci_lower: float
    ci_upper: float
    point_scaled: float
    se_scaled: float


def swate_bound(
    preds: BoundNuisance,
    b_scaled: StudySample,
    side: str,
    alpha: float = 0.05,
    weighted: bool = True,
    scale: OutcomeScale | None = None,
) -> BoundSide:
    """One side of the weighted ATE bounds from envelope nuisances.

    The point is the mean augmented envelope contrast; the standard error is
    the root mean square of the centered per-unit values over the weight
    normalizer mean(w). Results are inverse-scaled when ``scale`` is given.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not ((preds.e > 0.0) & (preds.e < 1.0)).all():
        raise InternalError("instrument propensity outside (0, 1) after clipping")
    v_u1, v_l1, v_u0, v_l0 = v_variables(b_scaled)
    if side == "upper":
        obs1, obs0, g1, g0 = v_u1, v_u0, preds.v_u1, preds.v_u0
    else:
        obs1, obs0, g1, g0 = v_l1, v_l0, preds.v_l1, preds.v_l0
    wn = preds.w / np.mean(preds.w) if weighted else np.ones(preds.n)
    phi = wn * augmented_contrast(b_scaled.instrument, preds.e, obs1, obs0, g1, g0)
    point = float(np.mean(phi))
    se = float(np.sqrt(np.mean((phi - point) ** 2) / preds.n))
    q = float(stats.norm.ppf(1.0 - alpha / 2.0))
    span = scale.span if scale is not None else 1.0
    return BoundSide(
        side=side,
        point=point * span,
        se=se * span,
        ci_lower=(point - q * se) * span,
        ci_upper=(point + q * se) * span,
        point_scaled=point,
        se_scaled=se,
    )


@dataclass(frozen=True)
class BoundsReport:
    """Lower and upper weighted ATE bounds with CIs, in original outcome units."""

    lower: float
    upper: float
    lower_ci: tuple[float, float]
    upper_ci: tuple[float, float]
    lower_se: float
    upper_se: float
    scale: OutcomeScale
    weighted: bool
    alpha: float
    n_b: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "width": self.width,
            "lower_ci": list(self.lower_ci),
            "upper_ci": list(self.upper_ci),
            "lower_se": self.lower_se,
            "upper_se": self.upper_se,
            "lower_scaled": self.lower / self.scale.span,
            "upper_scaled": self.upper / self.scale.span,
            "scale": {"y_min": self.scale.y_min, "y_max": self.scale.y_max},
            "weighted": self.weighted,
            "alpha": self.alpha,
            "n_b": self.n_b,
        }


def compute_bounds(
    preds: BoundNuisance,
    b_scaled: StudySample,
    scale: OutcomeScale,
    alpha: float = 0.05,
    weighted: bool = True,
) -> BoundsReport:
    """Assemble both bound sides and enforce their ordering."""
    lower = swate_bound(preds, b_scaled, "lower", alpha, weighted, scale)
    upper = swate_bound(preds, b_scaled, "upper", alpha, weighted, scale)
    if lower.point > upper.point + BOUND_ORDER_TOLERANCE * max(1.0, scale.span):
        raise EstimationError(
            f"crossed bounds (lower {lower.point:.6g} > upper {upper.point:.6g}); "
            "this signals nuisance pathology - check positivity and clipping diagnostics"
        )
    return BoundsReport(
        lower=lower.point,
        upper=upper.point,
        lower_ci=(lower.ci_lower, lower.ci_upper),
        upper_ci=(upper.ci_lower, upper.ci_upper),
        lower_se=lower.se,
        upper_se=upper.se,
        scale=scale,
        weighted=weighted,
        alpha=alpha,
        n_b=preds.n,
    )


def bounds_report(
    a: StudySample,
    b: StudySample,
    plan: CrossfitPlan,
    alpha: float = 0.05,
    weighted: bool = True,
    scale: OutcomeScale | None = None,
    base: NuisancePredictions | None = None,
) -> BoundsReport:
    """End-to-end ATE bounds: scale, cross-fit envelopes, estimate both sides.

    Auto-scaling pools the outcomes of both studies so the bounds live on a
    scale valid for the target study as well.
    """
    if scale is None:
        scale = auto_scale(a, b)
    b_scaled, _ = scale_outcome(b, scale)
    preds = cross_fit_bounds(a, b_scaled, plan, base=base)
    return compute_bounds(preds, b_scaled, scale, alpha, weighted)
