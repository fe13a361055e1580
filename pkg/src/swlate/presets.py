"""Ready-made learner bundles for the four nuisance functions.

``glm`` fits plain linear/logistic regressions throughout. ``ensemble``
stacks a parametric member, its ridge variant and a bagged forest for the
within-study nuisances, and uses a larger forest for the sampling score,
whose misspecification is not protected by double robustness.
"""

from __future__ import annotations

from .crossfit import CrossfitPlan, DEFAULT_CLIP
from .learners import LearnerSpec

PRESET_NAMES = ("glm", "ensemble")


def glm_learners() -> dict[str, LearnerSpec]:
    logistic = LearnerSpec("logistic")
    return {
        "outcome": LearnerSpec("linear"),
        "treatment": logistic,
        "instrument": logistic,
        "sampling": logistic,
    }


def ensemble_learners(
    nuisance_trees: int = 30,
    sampling_trees: int = 120,
) -> dict[str, LearnerSpec]:
    forest = LearnerSpec("tree-ensemble", n_trees=nuisance_trees, max_depth=6, min_leaf=20)
    stack_reg = LearnerSpec(
        "stack",
        members=(LearnerSpec("linear"), LearnerSpec("ridge-linear", penalty=1.0), forest),
    )
    stack_prob = LearnerSpec(
        "stack",
        members=(LearnerSpec("logistic"), LearnerSpec("ridge-logistic", penalty=1.0), forest),
    )
    return {
        "outcome": stack_reg,
        "treatment": stack_prob,
        "instrument": stack_prob,
        "sampling": LearnerSpec("tree-ensemble", n_trees=sampling_trees, max_depth=8, min_leaf=25),
    }


def learners_from_preset(name: str) -> dict[str, LearnerSpec]:
    if name == "glm":
        return glm_learners()
    if name == "ensemble":
        return ensemble_learners()
    raise ValueError(f"unknown learner preset {name!r}; expected one of {PRESET_NAMES}")


def make_plan(
    learners: dict[str, LearnerSpec],
    k: int = 5,
    clip_e: tuple[float, float] = DEFAULT_CLIP,
    clip_eta: tuple[float, float] = DEFAULT_CLIP,
    seed: int = 0,
) -> CrossfitPlan:
    return CrossfitPlan(
        outcome=learners["outcome"],
        treatment=learners["treatment"],
        instrument=learners["instrument"],
        sampling=learners["sampling"],
        k=k,
        clip_e=clip_e,
        clip_eta=clip_eta,
        seed=seed,
    )
