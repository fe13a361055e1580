from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swlate.dataset import (
    ColumnMapping,
    StudySample,
    default_mapping,
    load_csv,
    make_folds,
    parse_mapping,
    pool_for_weights,
    write_csv,
)
from swlate.errors import MappingError, ParseError, ValidationError

MAPPING = ColumnMapping(instrument="z", treatment="d", outcome="y", covariates=("x1", "x2"))


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


def test_load_minimal_file(tmp_path):
    path = tmp_path / "data.csv"
    write_lines(path, ["x1,x2,z,d,y", "0.1,1,0,0,1.5", "0.2,2,1,1,2.5",
                       "0.3,3,0,1,3.5", "0.4,4,1,0,4.5"])
    sample = load_csv(path, MAPPING)
    assert sample.n == 4
    assert sample.p == 2
    assert sample.covariate_names == ("x1", "x2")
    np.testing.assert_allclose(sample.covariates[:, 0], [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(sample.instrument, [0, 1, 0, 1])


def test_non_binary_treatment_names_row(tmp_path):
    path = tmp_path / "data.csv"
    write_lines(path, ["x1,x2,z,d,y", "0.1,1,0,0,1.0", "0.2,2,1,2,2.0"])
    with pytest.raises(ValidationError, match="row 1"):
        load_csv(path, MAPPING)


def test_non_numeric_cell_names_row(tmp_path):
    path = tmp_path / "data.csv"
    write_lines(path, ["x1,x2,z,d,y", "0.1,1,0,0,1.0", "oops,2,1,1,2.0"])
    with pytest.raises(ParseError, match="row 1"):
        load_csv(path, MAPPING)


def test_missing_value_rejected(tmp_path):
    path = tmp_path / "data.csv"
    write_lines(path, ["x1,x2,z,d,y", "0.1,1,0,0,1.0", ",2,1,1,2.0"])
    with pytest.raises(ValidationError, match="missing"):
        load_csv(path, MAPPING)


def test_missing_column_is_mapping_error(tmp_path):
    path = tmp_path / "data.csv"
    write_lines(path, ["x1,z,d,y", "0.1,0,0,1.0"])
    with pytest.raises(MappingError, match="x2"):
        load_csv(path, MAPPING)


def test_mapping_file_roundtrip(tmp_path):
    path = tmp_path / "mapping.txt"
    write_lines(path, ["# comment", "instrument = z", "treatment = d",
                       "outcome = y", "covariates = x1, x2"])
    mapping = parse_mapping(path)
    assert mapping == MAPPING


def test_mapping_file_missing_keys(tmp_path):
    path = tmp_path / "mapping.txt"
    write_lines(path, ["instrument = z"])
    with pytest.raises(MappingError, match="treatment"):
        parse_mapping(path)


def test_simulated_sample_roundtrips_losslessly(tmp_path):
    from swlate.simulation import DgmSpec, gen_cohorts

    cohorts = gen_cohorts(DgmSpec(n=1500, seed=3))
    path = tmp_path / "b.csv"
    write_csv(cohorts.b, path)
    back = load_csv(path, default_mapping(cohorts.b))
    np.testing.assert_array_equal(back.covariates, cohorts.b.covariates)
    np.testing.assert_array_equal(back.instrument, cohorts.b.instrument)
    np.testing.assert_array_equal(back.treatment, cohorts.b.treatment)
    np.testing.assert_array_equal(back.outcome, cohorts.b.outcome)


def _sample(n, p=2, seed=0):
    rng = np.random.default_rng(seed)
    return StudySample(
        covariates=rng.normal(size=(n, p)),
        instrument=rng.integers(0, 2, n),
        treatment=rng.integers(0, 2, n),
        outcome=rng.normal(size=n),
    )


def test_make_folds_even_split():
    folds = make_folds(_sample(10), k=2, seed=7)
    sizes = np.bincount(folds.fold_index)[1:]
    assert sorted(sizes) == [5, 5]


def test_make_folds_remainder_rule():
    folds = make_folds(_sample(11), k=2, seed=7)
    sizes = np.bincount(folds.fold_index)[1:]
    assert sorted(sizes) == [5, 6]


def test_make_folds_deterministic():
    sample = _sample(1500)
    a = make_folds(sample, k=4, seed=42)
    b = make_folds(sample, k=4, seed=42)
    np.testing.assert_array_equal(a.fold_index, b.fold_index)
    assert all(np.sum(a.fold_index == f) == 375 for f in range(1, 5))


def test_make_folds_bad_k():
    with pytest.raises(ValueError):
        make_folds(_sample(5), k=6, seed=0)
    with pytest.raises(ValueError):
        make_folds(_sample(5), k=1, seed=0)


@given(st.integers(min_value=2, max_value=60), st.integers(min_value=2, max_value=8),
       st.integers(min_value=0, max_value=10_000))
def test_folds_partition_property(n, k, seed):
    if k > n:
        return
    folds = make_folds(_sample(n), k=k, seed=seed)
    assert folds.fold_index.shape == (n,)
    assert set(np.unique(folds.fold_index)) == set(range(1, k + 1))
    sizes = np.bincount(folds.fold_index)[1:]
    assert sizes.max() - sizes.min() <= 1


def test_pool_stacking_order():
    a = _sample(3, seed=1)
    a = StudySample(covariates=a.covariates, instrument=a.instrument,
                    treatment=a.treatment, outcome=a.outcome, label="A")
    b_rows = np.arange(4).reshape(2, 2).astype(float)
    pooled = pool_for_weights(a, b_rows)
    np.testing.assert_array_equal(pooled.membership, [0, 0, 0, 1, 1])
    np.testing.assert_array_equal(pooled.covariates[:3], a.covariates)
    np.testing.assert_array_equal(pooled.covariates[3:], b_rows)


def test_pool_empty_subset_rejected():
    with pytest.raises(ValueError, match="empty"):
        pool_for_weights(_sample(3), np.empty((0, 2)))


def test_pool_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        pool_for_weights(_sample(3, p=2), np.zeros((2, 3)))


def test_pool_means_are_weighted_cohort_means():
    a = _sample(5, seed=2)
    b_rows = _sample(3, seed=3).covariates
    pooled = pool_for_weights(a, b_rows)
    expected = (a.covariates.sum(axis=0) + b_rows.sum(axis=0)) / 8
    np.testing.assert_allclose(pooled.covariates.mean(axis=0), expected, rtol=0, atol=1e-15)


def test_sample_vectors_are_immutable():
    sample = _sample(4)
    with pytest.raises(ValueError):
        sample.outcome[0] = 1.0


def test_length_mismatch_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError, match="length"):
        StudySample(covariates=rng.normal(size=(4, 2)), instrument=[0, 1, 0],
                    treatment=[0, 1, 0, 1], outcome=[1.0, 2.0, 3.0, 4.0])
