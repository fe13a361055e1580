"""Self-contained supervised learners used to fit every nuisance function.

Available kinds: ``linear``, ``ridge-linear`` (squared-error regression),
``logistic``, ``ridge-logistic`` (probability targets), ``tree-ensemble``
(either target type) and ``stack`` (cross-validated convex combination of
non-stack members). Every fit is deterministic given the spec, the data and
a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linear import LinearModel, fit_linear, fit_logistic
from .stack import StackModel, fit_stack_from_parts, project_to_simplex, solve_stack_weights
from .trees import TreeEnsembleModel, fit_tree_ensemble

KINDS = ("linear", "logistic", "ridge-linear", "ridge-logistic", "tree-ensemble", "stack")
REGRESSION_KINDS = ("linear", "ridge-linear", "tree-ensemble", "stack")
PROBABILITY_KINDS = ("logistic", "ridge-logistic", "tree-ensemble", "stack")

FittedModel = LinearModel | TreeEnsembleModel | StackModel


@dataclass(frozen=True)
class LearnerSpec:
    """Declarative description of a learner and its hyperparameters."""

    kind: str
    penalty: float = 1.0
    n_trees: int = 200
    max_depth: int = 8
    min_leaf: int = 5
    members: tuple["LearnerSpec", ...] = field(default_factory=tuple)
    stack_cv: int = 5
    intercept_only: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.penalty < 0:
            raise ValueError("ridge penalty must be non-negative")
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("tree count, depth and min leaf size must be at least 1")
        object.__setattr__(self, "members", tuple(self.members))
        if self.kind == "stack":
            if not self.members:
                raise ValueError("stack spec needs a non-empty member list")
            if any(m.kind == "stack" for m in self.members):
                raise ValueError("stack members must not themselves be stacks")
            if self.stack_cv < 2:
                raise ValueError("stack cross-validation needs at least 2 folds")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("ridge-linear", "ridge-logistic"):
            out["penalty"] = self.penalty
        if self.kind == "tree-ensemble":
            out.update(n_trees=self.n_trees, max_depth=self.max_depth, min_leaf=self.min_leaf)
        if self.kind == "stack":
            out["members"] = [m.to_dict() for m in self.members]
            out["stack_cv"] = self.stack_cv
        if self.intercept_only:
            out["intercept_only"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerSpec":
        data = dict(data)
        members = tuple(cls.from_dict(m) for m in data.pop("members", ()))
        return cls(members=members, **data)


def _check_target_kind(spec: LearnerSpec, target_type: str) -> None:
    if target_type not in ("regression", "probability"):
        raise ValueError(f"unknown target type {target_type!r}")
    allowed = REGRESSION_KINDS if target_type == "regression" else PROBABILITY_KINDS
    if spec.kind not in allowed:
        raise ValueError(
            f"learner kind {spec.kind!r} does not support {target_type} targets; "
            f"use one of {allowed}"
        )


def fit(
    spec: LearnerSpec,
    features: np.ndarray,
    targets: np.ndarray,
    target_type: str = "regression",
    seed: int = 0,
) -> FittedModel:
    """Fit a learner described by ``spec``; deterministic given data and seed."""
    _check_target_kind(spec, target_type)
    if spec.kind == "linear":
        return fit_linear(features, targets, 0.0, target_type, spec.intercept_only)
    if spec.kind == "ridge-linear":
        return fit_linear(features, targets, spec.penalty, target_type, spec.intercept_only)
    if spec.kind == "logistic":
        return fit_logistic(features, targets, 0.0, spec.intercept_only)
    if spec.kind == "ridge-logistic":
        return fit_logistic(features, targets, spec.penalty, spec.intercept_only)
    if spec.kind == "tree-ensemble":
        return fit_tree_ensemble(
            features,
            targets,
            n_trees=spec.n_trees,
            max_depth=spec.max_depth,
            min_leaf=spec.min_leaf,
            target_type=target_type,
            seed=seed,
        )
    return fit_stack(list(spec.members), features, targets, target_type, spec.stack_cv, seed)


def fit_stack(
    members: list[LearnerSpec],
    features: np.ndarray,
    targets: np.ndarray,
    target_type: str = "regression",
    v: int = 5,
    seed: int = 0,
) -> StackModel:
    """Fit a convex stack of learners with v-fold cross-validated weights."""
    for member in members:
        _check_target_kind(member, target_type)
    return fit_stack_from_parts(members, features, targets, target_type, v, seed, fit)


def predict(model: FittedModel, features: np.ndarray) -> np.ndarray:
    """Predictions from a fitted model; probability models stay within [0, 1]."""
    return model.predict(np.atleast_2d(np.asarray(features, dtype=np.float64)))


__all__ = [
    "KINDS",
    "FittedModel",
    "LearnerSpec",
    "LinearModel",
    "StackModel",
    "TreeEnsembleModel",
    "fit",
    "fit_stack",
    "predict",
    "project_to_simplex",
    "solve_stack_weights",
]
