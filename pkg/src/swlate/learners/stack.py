"""Convex stacking: cross-validated member predictions, simplex-constrained weights.

Weights minimize the cross-validated squared error (regression) or log-loss
(probability) over the probability simplex, solved by projected gradient
descent with backtracking so the constraint holds exactly rather than by
post-hoc normalization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError

STACK_TOL = 1e-8
STACK_MAX_ITER = 10_000
_PROB_FLOOR = 1e-12


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u - css / np.arange(1, v.size + 1) > 0)[-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _cv_loss(pred: np.ndarray, y: np.ndarray, target_type: str) -> float:
    if target_type == "probability":
        q = np.clip(pred, _PROB_FLOOR, 1 - _PROB_FLOOR)
        return float(-np.mean(y * np.log(q) + (1 - y) * np.log(1 - q)))
    return float(np.mean((pred - y) ** 2))


def _loss_grad(p_mat: np.ndarray, y: np.ndarray, w: np.ndarray, target_type: str):
    pred = p_mat @ w
    if target_type == "probability":
        q = np.clip(pred, _PROB_FLOOR, 1 - _PROB_FLOOR)
        loss = -np.mean(y * np.log(q) + (1 - y) * np.log(1 - q))
        grad = p_mat.T @ ((q - y) / (q * (1 - q))) / y.size
    else:
        resid = pred - y
        loss = np.mean(resid**2)
        grad = 2.0 * (p_mat.T @ resid) / y.size
    return float(loss), grad


def solve_stack_weights(p_mat: np.ndarray, y: np.ndarray, target_type: str) -> np.ndarray:
    """Minimize CV loss of the convex combination ``p_mat @ w`` over the simplex."""
    m = p_mat.shape[1]
    w = np.full(m, 1.0 / m)
    step = 1.0
    loss, grad = _loss_grad(p_mat, y, w, target_type)
    stalled = 0
    for _ in range(STACK_MAX_ITER):
        while True:
            cand = project_to_simplex(w - step * grad)
            delta = cand - w
            cand_loss, cand_grad = _loss_grad(p_mat, y, cand, target_type)
            if cand_loss <= loss + grad @ delta + (delta @ delta) / (2 * step) + 1e-15:
                break
            step *= 0.5
            if step < 1e-16:
                return w
        moved = np.abs(delta).max()
        # ties between near-identical members leave a flat valley; stop once
        # the loss has plateaued even if the weights still drift along it
        stalled = stalled + 1 if loss - cand_loss <= 1e-13 * max(1.0, abs(loss)) else 0
        w, loss, grad = cand, cand_loss, cand_grad
        step = min(step * 2.0, 1e6)
        if moved < STACK_TOL or stalled >= 5:
            break
    return w


@dataclass(frozen=True)
class StackModel:
    """Convex combination of fitted member models."""

    members: tuple
    weights: np.ndarray
    member_cv_losses: np.ndarray
    stack_cv_loss: float
    target_type: str

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = self.weights[0] * self.members[0].predict(x)
        for w, model in zip(self.weights[1:], self.members[1:]):
            out = out + w * model.predict(x)
        return out


def fit_stack_from_parts(member_specs, x, y, target_type, v, seed, fit_one):
    """Shared stacking driver; ``fit_one(spec, x, y, target_type, seed)`` fits a member.

    Members whose fit fails on any CV fold are dropped with a warning; an
    error is raised only when no member survives.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if v < 2:
        raise ValueError(f"stack cross-validation needs at least 2 folds, got {v}")
    if not member_specs:
        raise ValueError("stack needs at least one member")
    root = np.random.SeedSequence(seed)
    fold_seed, *member_seeds = root.spawn(1 + len(member_specs))
    order = np.random.default_rng(fold_seed).permutation(n)
    bounds = np.linspace(0, n, min(v, n) + 1).astype(int)
    folds = [order[bounds[i] : bounds[i + 1]] for i in range(len(bounds) - 1)]

    kept, oof_cols, full_seeds = [], [], []
    for spec, mseed in zip(member_specs, member_seeds):
        fold_fit_seed, full_fit_seed = mseed.spawn(2)
        sub_seeds = fold_fit_seed.spawn(len(folds))
        oof = np.empty(n)
        try:
            for fold_rows, sseed in zip(folds, sub_seeds):
                train = np.setdiff1d(np.arange(n), fold_rows)
                model = fit_one(spec, x[train], y[train], target_type, _as_int(sseed))
                oof[fold_rows] = model.predict(x[fold_rows])
        except Exception as exc:  # noqa: BLE001 - any member failure means dropping it
            warnings.warn(f"stack member {spec.kind!r} dropped: {exc}", stacklevel=2)
            continue
        kept.append(spec)
        oof_cols.append(oof)
        full_seeds.append(full_fit_seed)
    if not kept:
        raise NumericalError("every stack member failed to fit")

    p_mat = np.column_stack(oof_cols)
    weights = solve_stack_weights(p_mat, y, target_type)
    member_losses = np.array([_cv_loss(p_mat[:, i], y, target_type) for i in range(len(kept))])
    stack_loss = _cv_loss(p_mat @ weights, y, target_type)
    fitted = tuple(
        fit_one(spec, x, y, target_type, _as_int(fs)) for spec, fs in zip(kept, full_seeds)
    )
    return StackModel(
        members=fitted,
        weights=weights,
        member_cv_losses=member_losses,
        stack_cv_loss=stack_loss,
        target_type=target_type,
    )


def _as_int(seed_seq: np.random.SeedSequence) -> int:
    return int(seed_seq.generate_state(1, dtype=np.uint64)[0])
