from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swlate.errors import NumericalError
from swlate.learners import (
    LearnerSpec,
    fit,
    fit_stack,
    predict,
    project_to_simplex,
)


def test_linear_exact_interpolation():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 2))
    y = 2.0 * x[:, 0] - x[:, 1]
    model = fit(LearnerSpec("linear"), x, y)
    np.testing.assert_allclose(model.coef, [0.0, 2.0, -1.0], atol=1e-8)


def test_singular_design_advises_ridge():
    x = np.column_stack([np.arange(10.0), np.arange(10.0)])
    with pytest.raises(NumericalError, match="ridge"):
        fit(LearnerSpec("linear"), x, np.arange(10.0))
    model = fit(LearnerSpec("ridge-linear", penalty=1.0), x, np.arange(10.0))
    assert np.isfinite(model.predict(x)).all()


def test_perfect_separation_falls_back_to_ridge():
    x = np.linspace(-2, 2, 40).reshape(-1, 1)
    y = (x[:, 0] > 0).astype(float)
    model = fit(LearnerSpec("logistic"), x, y, target_type="probability")
    assert model.fallback
    p = model.predict(x)
    assert ((p > 0.0) & (p < 1.0)).all()


def test_logistic_rejects_non_binary_targets():
    x = np.random.default_rng(1).normal(size=(20, 2))
    with pytest.raises(ValueError, match="0 or 1"):
        fit(LearnerSpec("logistic"), x, np.linspace(0, 1, 20), target_type="probability")


def test_target_kind_compatibility():
    x = np.random.default_rng(2).normal(size=(20, 2))
    y = (x[:, 0] > 0).astype(float)
    with pytest.raises(ValueError, match="logistic"):
        fit(LearnerSpec("linear"), x, y, target_type="probability")
    with pytest.raises(ValueError):
        fit(LearnerSpec("logistic"), x, x[:, 0], target_type="regression")


def test_intercept_only_regression_predicts_training_mean():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(25, 4))
    y = rng.normal(size=25)
    model = fit(LearnerSpec("linear", intercept_only=True), x, y)
    np.testing.assert_allclose(model.predict(rng.normal(size=(9, 4))), np.full(9, y.mean()),
                               atol=1e-12)


def test_zero_coefficient_logistic_predicts_half():
    from swlate.learners.linear import LinearModel

    model = LinearModel(coef=np.zeros(3), target_type="probability", link="logit")
    np.testing.assert_allclose(model.predict(np.ones((5, 2))), 0.5)


def test_intercept_only_logistic_matches_arm_share():
    rng = np.random.default_rng(4)
    y = (rng.random(200) < 0.3).astype(float)
    model = fit(LearnerSpec("logistic", intercept_only=True), rng.normal(size=(200, 2)), y,
                target_type="probability")
    np.testing.assert_allclose(model.predict(np.zeros((3, 2))), np.full(3, y.mean()), atol=1e-9)


def test_ridge_path_continuity():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(60, 3))
    y = x @ [1.0, -0.5, 0.2] + rng.normal(size=60)
    lam = 1.0
    a = fit(LearnerSpec("ridge-linear", penalty=lam), x, y).predict(x)
    b = fit(LearnerSpec("ridge-linear", penalty=lam + 1e-9), x, y).predict(x)
    assert np.abs(a - b).max() < 1e-6


def test_tree_ensemble_learns_square():
    rng = np.random.default_rng(6)
    x = rng.uniform(-2, 2, size=(2000, 1))
    y = x[:, 0] ** 2
    model = fit(LearnerSpec("tree-ensemble", n_trees=100, max_depth=8, min_leaf=5), x, y, seed=1)
    x_new = rng.uniform(-2, 2, size=(1000, 1))
    mse = np.mean((model.predict(x_new) - x_new[:, 0] ** 2) ** 2)
    assert mse < 0.05


def test_tree_ensemble_probability_range_and_determinism():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(300, 4))
    y = (rng.random(300) < 0.4).astype(float)
    spec = LearnerSpec("tree-ensemble", n_trees=20, max_depth=5, min_leaf=5)
    a = fit(spec, x, y, target_type="probability", seed=9)
    b = fit(spec, x, y, target_type="probability", seed=9)
    pa, pb = a.predict(x), b.predict(x)
    np.testing.assert_array_equal(pa, pb)
    assert pa.min() >= 0.0 and pa.max() <= 1.0


def test_tree_dimension_mismatch():
    rng = np.random.default_rng(8)
    model = fit(LearnerSpec("tree-ensemble", n_trees=5, max_depth=3), rng.normal(size=(50, 3)),
                rng.normal(size=50))
    with pytest.raises(ValueError, match="dimension"):
        model.predict(rng.normal(size=(5, 2)))


def test_stack_single_member_gets_unit_weight():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(80, 2))
    y = x[:, 0] + rng.normal(size=80)
    model = fit_stack([LearnerSpec("linear")], x, y, v=5, seed=0)
    np.testing.assert_allclose(model.weights, [1.0], atol=1e-10)


def test_stack_identical_members_tie():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(100, 2))
    y = x[:, 0] + rng.normal(size=100)
    model = fit_stack([LearnerSpec("linear"), LearnerSpec("linear")], x, y, v=5, seed=0)
    assert model.stack_cv_loss <= model.member_cv_losses.min() + 1e-9
    assert model.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert (model.weights >= -1e-12).all()


def test_stack_prefers_trees_on_square():
    rng = np.random.default_rng(11)
    x = rng.uniform(-2, 2, size=(1200, 1))
    y = x[:, 0] ** 2 + 0.1 * rng.normal(size=1200)
    members = [LearnerSpec("linear"),
               LearnerSpec("tree-ensemble", n_trees=50, max_depth=8, min_leaf=5)]
    model = fit_stack(members, x, y, v=5, seed=0)
    # the flexible member must dominate, consistent with its lower CV loss
    assert model.member_cv_losses[1] < model.member_cv_losses[0]
    assert model.weights[1] > 0.5


def test_stack_prediction_is_convex_combination():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(150, 3))
    y = x @ [1.0, 0.0, -1.0] + rng.normal(size=150)
    members = [LearnerSpec("linear"), LearnerSpec("ridge-linear", penalty=2.0)]
    model = fit_stack(members, x, y, v=4, seed=3)
    x_new = rng.normal(size=(40, 3))
    direct = sum(w * m.predict(x_new) for w, m in zip(model.weights, model.members))
    assert np.abs(model.predict(x_new) - direct).max() < 1e-12


def test_stack_cv_loss_beats_every_member():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(200, 3))
    y = (rng.random(200) < 1 / (1 + np.exp(-x[:, 0]))).astype(float)
    members = [LearnerSpec("logistic"), LearnerSpec("ridge-logistic", penalty=1.0),
               LearnerSpec("tree-ensemble", n_trees=20, max_depth=4, min_leaf=10)]
    model = fit_stack(members, x, y, target_type="probability", v=5, seed=1)
    assert model.stack_cv_loss <= model.member_cv_losses.min() + 1e-9
    assert model.weights.sum() == pytest.approx(1.0, abs=1e-10)


def test_stack_drops_failing_member_with_warning():
    rng = np.random.default_rng(14)
    x = np.column_stack([np.arange(60.0), np.arange(60.0)])  # collinear: plain linear fails
    y = x[:, 0] + rng.normal(size=60)
    members = [LearnerSpec("linear"), LearnerSpec("ridge-linear", penalty=1.0)]
    with pytest.warns(UserWarning, match="dropped"):
        model = fit_stack(members, x, y, v=4, seed=2)
    np.testing.assert_allclose(model.weights, [1.0])


def test_stack_all_members_failing_is_an_error():
    x = np.column_stack([np.arange(40.0), np.arange(40.0)])
    with pytest.raises(NumericalError, match="every stack member"):
        with pytest.warns(UserWarning):
            fit_stack([LearnerSpec("linear")], x, x[:, 0], v=4, seed=2)


def test_stack_spec_validation():
    with pytest.raises(ValueError, match="non-empty"):
        LearnerSpec("stack")
    inner = LearnerSpec("stack", members=(LearnerSpec("linear"),))
    with pytest.raises(ValueError, match="must not themselves"):
        LearnerSpec("stack", members=(inner,))


def test_spec_json_roundtrip():
    spec = LearnerSpec(
        "stack",
        members=(LearnerSpec("logistic"),
                 LearnerSpec("tree-ensemble", n_trees=40, max_depth=6, min_leaf=10)),
        stack_cv=4,
    )
    assert LearnerSpec.from_dict(spec.to_dict()) == spec


@given(st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=12))
def test_simplex_projection_properties(values):
    v = np.asarray(values)
    proj = project_to_simplex(v)
    assert (proj >= 0.0).all()
    assert proj.sum() == pytest.approx(1.0, abs=1e-9)
    again = project_to_simplex(proj)
    np.testing.assert_allclose(again, proj, atol=1e-9)


def test_predict_helper_matches_model():
    rng = np.random.default_rng(15)
    x = rng.normal(size=(30, 2))
    y = x[:, 0]
    model = fit(LearnerSpec("linear"), x, y)
    np.testing.assert_array_equal(predict(model, x), model.predict(x))
