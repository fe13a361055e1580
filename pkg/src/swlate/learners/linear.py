"""Closed-form linear regression and IRLS logistic regression, with ridge variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError

IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100
SEPARATION_FALLBACK_PENALTY = 1e-4


def _design(x: np.ndarray, intercept_only: bool) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if intercept_only:
        return np.ones((x.shape[0], 1))
    return np.column_stack([np.ones(x.shape[0]), x])


def _penalty_matrix(dim: int, penalty: float) -> np.ndarray:
    # intercept is never penalized
    pen = np.full(dim, penalty)
    pen[0] = 0.0
    return np.diag(pen)


PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LinearModel:
    """Fitted (possibly ridge-penalized) linear or logistic model.

    Logistic predictions are kept inside the open unit interval: saturated
    logits would otherwise round to exactly 0 or 1 in floating point.
    """

    coef: np.ndarray
    target_type: str
    link: str  # "identity" or "logit"
    intercept_only: bool = False
    fallback: bool = False  # logistic fit fell back to a small ridge penalty

    def predict(self, x: np.ndarray) -> np.ndarray:
        design = _design(x, self.intercept_only)
        if design.shape[1] != self.coef.shape[0]:
            raise ValueError(
                f"feature dimension {design.shape[1] - 1} does not match "
                f"training dimension {self.coef.shape[0] - 1}"
            )
        eta = design @ self.coef
        if self.link == "logit":
            return np.clip(_expit(eta), PROB_FLOOR, 1.0 - PROB_FLOOR)
        return eta


def _expit(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def fit_linear(
    x: np.ndarray,
    y: np.ndarray,
    penalty: float = 0.0,
    target_type: str = "regression",
    intercept_only: bool = False,
) -> LinearModel:
    """Least squares, exactly solved; ridge when ``penalty`` > 0.

    A singular design without ridge raises :class:`NumericalError` rather
    than silently returning a minimum-norm solution.
    """
    design = _design(x, intercept_only)
    y = np.asarray(y, dtype=np.float64).ravel()
    if design.shape[0] == 0:
        raise ValueError("cannot fit a linear model on empty data")
    gram = design.T @ design
    if penalty > 0:
        gram = gram + _penalty_matrix(design.shape[1], penalty)
    else:
        rank = np.linalg.matrix_rank(design)
        if rank < design.shape[1]:
            raise NumericalError(
                f"design matrix is singular (rank {rank} < {design.shape[1]}); "
                "use a ridge learner or drop collinear covariates"
            )
    coef = np.linalg.solve(gram, design.T @ y)
    return LinearModel(
        coef=coef, target_type=target_type, link="identity", intercept_only=intercept_only
    )


def _irls(design: np.ndarray, y: np.ndarray, penalty: float) -> tuple[np.ndarray, bool]:
    """Newton-Raphson on the (penalized) logistic log-likelihood.

    Returns the coefficients and a convergence flag. Stops when the relative
    deviance change drops below ``IRLS_TOL``.
    """
    n, dim = design.shape
    coef = np.zeros(dim)
    pen = _penalty_matrix(dim, penalty) if penalty > 0 else None
    deviance = np.inf
    for _ in range(IRLS_MAX_ITER):
        eta = design @ coef
        prob = _expit(eta)
        prob = np.clip(prob, 1e-12, 1 - 1e-12)
        new_dev = -2.0 * np.sum(y * np.log(prob) + (1 - y) * np.log(1 - prob))
        if penalty > 0:
            new_dev += penalty * np.sum(coef[1:] ** 2)
        w = prob * (1 - prob)
        hessian = design.T @ (design * w[:, None])
        grad = design.T @ (y - prob)
        if pen is not None:
            hessian = hessian + pen
            grad = grad - pen @ coef
        coef = coef + np.linalg.solve(hessian, grad)
        if np.isfinite(new_dev) and abs(deviance - new_dev) <= IRLS_TOL * (abs(new_dev) + 1e-12):
            return coef, True
        deviance = new_dev
    return coef, False


def fit_logistic(
    x: np.ndarray,
    y: np.ndarray,
    penalty: float = 0.0,
    intercept_only: bool = False,
) -> LinearModel:
    """Logistic regression by IRLS; probability targets must be 0/1.

    An unpenalized fit that fails to converge or hits a singular Hessian
    (typically perfect separation) falls back to a lightly ridged fit and
    flags the fallback on the returned model.
    """
    design = _design(x, intercept_only)
    y = np.asarray(y, dtype=np.float64).ravel()
    if design.shape[0] == 0:
        raise ValueError("cannot fit a logistic model on empty data")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("probability targets must be 0 or 1")
    if penalty > 0:
        coef, _ = _irls(design, y, penalty)
        return LinearModel(
            coef=coef, target_type="probability", link="logit", intercept_only=intercept_only
        )
    try:
        coef, converged = _irls(design, y, 0.0)
    except np.linalg.LinAlgError:
        converged = False
    if not converged or not np.isfinite(coef).all() or np.abs(coef).max() > 1e8:
        coef, _ = _irls(design, y, SEPARATION_FALLBACK_PENALTY)
        return LinearModel(
            coef=coef,
            target_type="probability",
            link="logit",
            intercept_only=intercept_only,
            fallback=True,
        )
    return LinearModel(
        coef=coef, target_type="probability", link="logit", intercept_only=intercept_only
    )
