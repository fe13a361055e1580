from __future__ import annotations

import numpy as np
import pytest

from swlate.bounds import (
    BoundNuisance,
    OutcomeScale,
    auto_scale,
    bounds_report,
    compute_bounds,
    cross_fit_bounds,
    scale_outcome,
    swate_bound,
    v_variables,
)
from swlate.crossfit import CrossfitPlan, cross_fit
from swlate.dataset import StudySample
from swlate.errors import DataError, EstimationError
from swlate.learners import LearnerSpec
from tests.oracle import oracle_bound


def _sample(y, d=None, z=None, seed=0):
    y = np.asarray(y, dtype=float)
    n = y.size
    rng = np.random.default_rng(seed)
    if d is None:
        d = rng.integers(0, 2, n)
    if z is None:
        z = rng.integers(0, 2, n)
    return StudySample(covariates=rng.normal(size=(n, 2)), instrument=z, treatment=d, outcome=y)


def test_binary_outcome_scales_to_identity():
    sample = _sample([0.0, 1.0, 1.0, 0.0])
    scaled, scale = scale_outcome(sample)
    assert (scale.y_min, scale.y_max) == (0.0, 1.0)
    np.testing.assert_array_equal(scaled.outcome, sample.outcome)


def test_symmetric_range_maps_zero_to_half():
    sample = _sample([-2.0, 0.0, 2.0, 1.0])
    scaled, scale = scale_outcome(sample)
    assert scale.span == 4.0
    assert scaled.outcome[1] == pytest.approx(0.5)


def test_scale_round_trip():
    rng = np.random.default_rng(3)
    y = rng.normal(size=50) * 7 + 3
    sample = _sample(y, seed=3)
    scaled, scale = scale_outcome(sample)
    np.testing.assert_allclose(scale.invert(scaled.outcome), y, atol=1e-12)


def test_constant_outcome_rejected():
    with pytest.raises(DataError, match="constant"):
        auto_scale(_sample([1.0, 1.0, 1.0]))


def test_envelope_substitution_treated_unit():
    sample = _sample([0.5], d=[1.0], z=[1.0])
    v_u1, v_l1, v_u0, v_l0 = v_variables(sample)
    assert (v_u1[0], v_l1[0], v_u0[0], v_l0[0]) == (0.5, 0.5, 0.0, 1.0)


def test_envelope_substitution_untreated_unit():
    sample = _sample([0.5], d=[0.0], z=[0.0])
    v_u1, v_l1, v_u0, v_l0 = v_variables(sample)
    assert (v_u1[0], v_l1[0], v_u0[0], v_l0[0]) == (1.0, 0.0, 0.5, 0.5)


def test_envelopes_all_treated():
    sample = _sample([0.2, 0.9, 0.4], d=[1, 1, 1])
    v_u1, v_l1, v_u0, v_l0 = v_variables(sample)
    np.testing.assert_array_equal(v_u0, np.zeros(3))
    np.testing.assert_array_equal(v_l0, np.ones(3))


def test_unscaled_outcome_is_contract_error():
    with pytest.raises(ValueError, match="scaled"):
        v_variables(_sample([0.5, 1.5]))


def _bound_nuisances(seed, n=25):
    rng = np.random.default_rng(seed)
    e = rng.uniform(0.25, 0.75, n)
    eta = rng.uniform(0.25, 0.75, n)
    return BoundNuisance(
        v_u1=rng.uniform(0.1, 0.9, n),
        v_l1=rng.uniform(0.1, 0.9, n),
        v_u0=rng.uniform(0.1, 0.9, n),
        v_l0=rng.uniform(0.1, 0.9, n),
        e=e,
        eta=eta,
        w=(1 - eta) / eta,
        fold_index=rng.integers(1, 3, n),
    )


def _scaled_sample(seed, n=25):
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, n).astype(float)
    z[:2] = [0.0, 1.0]
    return StudySample(
        covariates=rng.normal(size=(n, 2)),
        instrument=z,
        treatment=rng.integers(0, 2, n),
        outcome=rng.random(n),
    )


@pytest.mark.parametrize("side", ["lower", "upper"])
def test_bound_matches_bruteforce_oracle(side):
    preds = _bound_nuisances(seed=2)
    b = _scaled_sample(seed=3)
    result = swate_bound(preds, b, side, alpha=0.05, weighted=True, scale=OutcomeScale(0.0, 1.0))
    vhat1 = preds.v_u1 if side == "upper" else preds.v_l1
    vhat0 = preds.v_u0 if side == "upper" else preds.v_l0
    point, se, ci = oracle_bound(
        b.instrument.tolist(), b.treatment.tolist(), b.outcome.tolist(),
        vhat1.tolist(), vhat0.tolist(), preds.e.tolist(), preds.w.tolist(), side,
    )
    assert abs(result.point - point) < 1e-10
    assert abs(result.se - se) < 1e-10
    assert abs(result.ci_lower - ci[0]) < 1e-10
    assert abs(result.ci_upper - ci[1]) < 1e-10


def test_bound_inverse_scaling_is_slope_only():
    preds = _bound_nuisances(seed=4)
    b = _scaled_sample(seed=5)
    scale = OutcomeScale(-3.0, 9.0)
    scaled_units = swate_bound(preds, b, "upper", scale=None)
    original_units = swate_bound(preds, b, "upper", scale=scale)
    assert original_units.point == pytest.approx(scaled_units.point * scale.span, abs=1e-12)
    assert original_units.se == pytest.approx(scaled_units.se * scale.span, abs=1e-12)


def test_bound_weight_scale_invariance():
    preds = _bound_nuisances(seed=6)
    b = _scaled_sample(seed=7)
    rescaled = BoundNuisance(
        v_u1=preds.v_u1, v_l1=preds.v_l1, v_u0=preds.v_u0, v_l0=preds.v_l0,
        e=preds.e, eta=preds.eta, w=11.0 * preds.w, fold_index=preds.fold_index,
    )
    a = swate_bound(preds, b, "lower")
    c = swate_bound(rescaled, b, "lower")
    assert abs(a.point - c.point) < 1e-12
    assert abs(a.se - c.se) < 1e-12


def test_crossed_bounds_raise_with_diagnostics_hint():
    preds = _bound_nuisances(seed=8)
    b = _scaled_sample(seed=9)
    crossed = BoundNuisance(
        v_u1=preds.v_u1 - 5.0, v_l1=preds.v_l1 + 5.0,
        v_u0=preds.v_u0 + 5.0, v_l0=preds.v_l0 - 5.0,
        e=preds.e, eta=preds.eta, w=preds.w, fold_index=preds.fold_index,
    )
    with pytest.raises(EstimationError, match="crossed bounds"):
        compute_bounds(crossed, b, OutcomeScale(0.0, 1.0))


def _compliant_studies(n=400, seed=11):
    rng = np.random.default_rng(seed)

    def one(label):
        x = rng.normal(size=(n, 2))
        z = rng.integers(0, 2, n).astype(float)
        z[:2] = [0.0, 1.0]
        d = z.copy()  # perfect compliance
        y = 1.0 * d + x[:, 0] + rng.normal(size=n)
        return StudySample(covariates=x, instrument=z, treatment=d, outcome=y, label=label)

    return one("A"), one("B")


def glm_plan(k=2, seed=0):
    return CrossfitPlan(
        outcome=LearnerSpec("linear"),
        treatment=LearnerSpec("logistic"),
        instrument=LearnerSpec("logistic"),
        sampling=LearnerSpec("logistic"),
        k=k,
        seed=seed,
    )


def test_bounds_collapse_under_perfect_compliance():
    a, b = _compliant_studies()
    scale = auto_scale(a, b)
    b_scaled, _ = scale_outcome(b, scale)
    preds = cross_fit_bounds(a, b_scaled, glm_plan(seed=3))
    report = compute_bounds(preds, b_scaled, scale)
    assert abs(report.upper - report.lower) < 1e-10


def test_bounds_share_base_nuisances():
    a, b = _compliant_studies(seed=13)
    plan = glm_plan(seed=5)
    scale = auto_scale(a, b)
    b_scaled, _ = scale_outcome(b, scale)
    base = cross_fit(a, b_scaled, plan)
    shared = cross_fit_bounds(a, b_scaled, plan, base=base)
    np.testing.assert_array_equal(shared.e, base.e)
    np.testing.assert_array_equal(shared.w, base.w)
    np.testing.assert_array_equal(shared.fold_index, base.fold_index)
    alone = cross_fit_bounds(a, b_scaled, plan)
    np.testing.assert_array_equal(alone.v_u1, shared.v_u1)


def test_bounds_report_end_to_end():
    a, b = _compliant_studies(seed=17)
    report = bounds_report(a, b, glm_plan(seed=7), alpha=0.05, weighted=True)
    assert report.lower <= report.upper
    assert report.lower_ci[0] <= report.lower <= report.lower_ci[1]
    assert report.upper_ci[0] <= report.upper <= report.upper_ci[1]
    assert report.scale.span > 0
    payload = report.to_dict()
    assert payload["width"] == pytest.approx(report.upper - report.lower)


def test_bound_side_validation():
    preds = _bound_nuisances(seed=20)
    b = _scaled_sample(seed=21)
    with pytest.raises(ValueError, match="side"):
        swate_bound(preds, b, "middle")
    with pytest.raises(ValueError, match="alpha"):
        swate_bound(preds, b, "lower", alpha=0.0)
