"""Survey-weighted LATE point estimation and influence-function inference.

The point estimate is a ratio of two weighted augmented-residual means: the
numerator debiases the outcome contrast, the denominator the treatment
contrast. The variance comes from the plug-in influence function of the
ratio, whose empirical second moment gives a closed-form standard error and
Wald confidence intervals without resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .crossfit import NuisancePredictions
from .dataset import StudySample
from .errors import EstimationError, InternalError

WEAK_DENOMINATOR = 1e-8


def _check_propensity(e: np.ndarray) -> None:
    if not ((e > 0.0) & (e < 1.0)).all():
        raise InternalError("instrument propensity outside (0, 1) after clipping")


def _normalized_weights(preds: NuisancePredictions, weighted: bool) -> np.ndarray:
    if not weighted:
        return np.ones(preds.n)
    return preds.w / np.mean(preds.w)


def augmented_contrast(z, e, obs1, obs0, g1, g0) -> np.ndarray:
    """Arm-wise inverse-propensity residual correction plus the fitted contrast.

    ``obs1``/``obs0`` are the observed responses entering the Z=1 and Z=0
    residual terms; for the LATE both are the same column (Y or D).
    """
    return z / e * (obs1 - g1) - (1.0 - z) / (1.0 - e) * (obs0 - g0) + g1 - g0


def phi_numerator(
    preds: NuisancePredictions, b: StudySample, weighted: bool = True
) -> np.ndarray:
    """Per-unit uncentered influence values for the outcome contrast."""
    _check_propensity(preds.e)
    wn = _normalized_weights(preds, weighted)
    y = b.outcome
    return wn * augmented_contrast(b.instrument, preds.e, y, y, preds.mu1, preds.mu0)


def phi_denominator(
    preds: NuisancePredictions, b: StudySample, weighted: bool = True
) -> np.ndarray:
    """Per-unit uncentered influence values for the treatment contrast."""
    _check_propensity(preds.e)
    wn = _normalized_weights(preds, weighted)
    d = b.treatment
    return wn * augmented_contrast(b.instrument, preds.e, d, d, preds.m1, preds.m0)


def gamma_plugin(
    preds: NuisancePredictions,
    b: StudySample,
    beta_hat: float,
    weighted: bool = True,
) -> np.ndarray:
    """Plug-in centered influence function of the ratio estimator.

    The observed-arm propensity e(X, Z) = e(X) Z + (1 - e(X))(1 - Z) weights
    the residual of whichever arm each unit realized; the normalizer is the
    study-B mean of w(X) (m1(X) - m0(X)). Its empirical mean is zero by the
    ratio construction whenever ``beta_hat`` is the reported point estimate.
    """
    if not np.isfinite(beta_hat):
        raise ValueError("beta_hat must be finite")
    _check_propensity(preds.e)
    z, d, y = b.instrument, b.treatment, b.outcome
    w = preds.w if weighted else np.ones(preds.n)
    e_obs = preds.e * z + (1.0 - preds.e) * (1.0 - z)
    mu_obs = np.where(z == 1.0, preds.mu1, preds.mu0)
    m_obs = np.where(z == 1.0, preds.m1, preds.m0)
    sign = 2.0 * z - 1.0
    core = (
        sign / e_obs * (y - mu_obs - beta_hat * (d - m_obs))
        + preds.mu1
        - preds.mu0
        - beta_hat * (preds.m1 - preds.m0)
    )
    normalizer = np.mean(w * (preds.m1 - preds.m0))
    if abs(normalizer) <= WEAK_DENOMINATOR:
        raise EstimationError(
            "influence-function normalizer is numerically zero; "
            "check instrument strength diagnostics"
        )
    return w * core / normalizer


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with influence-function SE and Wald confidence interval."""

    point: float
    se: float
    ci_lower: float
    ci_upper: float
    alpha: float
    per_fold_points: np.ndarray
    weighted: bool
    n_b: int

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "se": self.se,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "alpha": self.alpha,
            "per_fold_points": [float(v) for v in self.per_fold_points],
            "fold_average_point": float(np.mean(self.per_fold_points)),
            "weighted": self.weighted,
            "n_b": self.n_b,
        }


def _per_fold_ratios(phin, phid, fold_index) -> np.ndarray:
    """Fold-restricted ratio estimates, kept for audit alongside the global one."""
    folds = np.unique(fold_index)
    out = np.empty(folds.size)
    for i, fold in enumerate(folds):
        rows = fold_index == fold
        out[i] = np.mean(phin[rows]) / np.mean(phid[rows])
    return out


def swlate(
    preds: NuisancePredictions,
    b: StudySample,
    alpha: float = 0.05,
    weighted: bool = True,
) -> EstimateReport:
    """Survey-weighted (or plain) LATE report from cross-fitted nuisances.

    The point estimate is the global ratio of influence-value means; per-fold
    ratios are recorded for audit. A treatment contrast too close to zero is
    an error rather than a meaningless interval.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    phin = phi_numerator(preds, b, weighted)
    phid = phi_denominator(preds, b, weighted)
    denom = np.mean(phid)
    if abs(denom) <= WEAK_DENOMINATOR:
        raise EstimationError(
            f"treatment contrast mean {denom:.2e} is too weak for a ratio estimate; "
            "check instrument strength diagnostics"
        )
    point = float(np.mean(phin) / denom)
    gamma = gamma_plugin(preds, b, point, weighted)
    se = float(np.sqrt(np.mean(gamma**2) / preds.n))
    q = float(stats.norm.ppf(1.0 - alpha / 2.0))
    return EstimateReport(
        point=point,
        se=se,
        ci_lower=point - q * se,
        ci_upper=point + q * se,
        alpha=alpha,
        per_fold_points=_per_fold_ratios(phin, phid, preds.fold_index),
        weighted=weighted,
        n_b=preds.n,
    )
