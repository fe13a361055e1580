"""Two-cohort tabular data: loading, validation, fold assignment, pooling.

A :class:`StudySample` holds one cohort's covariate matrix together with a
binary instrument, binary treatment and a real-valued outcome. Samples are
immutable after construction and validated eagerly: rows with missing or
non-numeric entries are rejected at load time rather than imputed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import MappingError, ParseError, ValidationError


def _frozen(values, dtype=np.float64) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StudySample:
    """One cohort: n x p covariates plus instrument Z, treatment D, outcome Y.

    Invariants enforced at construction: all vectors have length n, the
    instrument and treatment are exactly 0/1, and no entry is missing or
    non-finite.
    """

    covariates: np.ndarray
    instrument: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    label: str = "B"
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.covariates, dtype=np.float64))
        z = np.asarray(self.instrument, dtype=np.float64).ravel()
        d = np.asarray(self.treatment, dtype=np.float64).ravel()
        y = np.asarray(self.outcome, dtype=np.float64).ravel()
        n = x.shape[0]
        for name, vec in (("instrument", z), ("treatment", d), ("outcome", y)):
            if vec.shape[0] != n:
                raise ValidationError(
                    f"{name} has length {vec.shape[0]}, expected {n} to match covariates"
                )
        for name, arr in (("covariates", x), ("outcome", y)):
            if not np.isfinite(arr).all():
                row = int(np.argwhere(~np.isfinite(arr))[0][0])
                raise ValidationError(f"missing or non-finite {name} value at data row {row}")
        for name, vec in (("instrument", z), ("treatment", d)):
            bad = ~np.isin(vec, (0.0, 1.0))
            if bad.any():
                row = int(np.argmax(bad))
                raise ValidationError(
                    f"{name} must be 0 or 1; found {vec[row]!r} at data row {row}"
                )
        names = tuple(self.covariate_names) or tuple(f"x{i + 1}" for i in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValidationError(
                f"{len(names)} covariate names given for {x.shape[1]} columns"
            )
        object.__setattr__(self, "covariates", _frozen(x))
        object.__setattr__(self, "instrument", _frozen(z))
        object.__setattr__(self, "treatment", _frozen(d))
        object.__setattr__(self, "outcome", _frozen(y))
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def with_outcome(self, outcome: np.ndarray) -> "StudySample":
        """Copy of this sample with the outcome column replaced."""
        return StudySample(
            covariates=self.covariates,
            instrument=self.instrument,
            treatment=self.treatment,
            outcome=outcome,
            label=self.label,
            covariate_names=self.covariate_names,
        )

    def take(self, rows: np.ndarray) -> "StudySample":
        """Row subset (or resample, when indices repeat) of this sample."""
        rows = np.asarray(rows)
        return StudySample(
            covariates=self.covariates[rows],
            instrument=self.instrument[rows],
            treatment=self.treatment[rows],
            outcome=self.outcome[rows],
            label=self.label,
            covariate_names=self.covariate_names,
        )


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the instrument, treatment, outcome and covariate columns."""

    instrument: str
    treatment: str
    outcome: str
    covariates: tuple[str, ...]

    def __post_init__(self):
        if len(self.covariates) == 0:
            raise MappingError("mapping must name at least one covariate column")


def parse_mapping(path) -> ColumnMapping:
    """Read a plain-text ``key = value`` column-mapping file.

    Recognised keys: ``instrument``, ``treatment``, ``outcome`` and
    ``covariates`` (comma-separated list). Blank lines and ``#`` comments
    are ignored.
    """
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MappingError(f"line {lineno} of {path} is not 'key = value': {line!r}")
            key, _, value = line.partition("=")
            entries[key.strip().lower()] = value.strip()
    missing = [k for k in ("instrument", "treatment", "outcome", "covariates") if k not in entries]
    if missing:
        raise MappingError(f"mapping file {path} is missing keys: {', '.join(missing)}")
    covs = tuple(c.strip() for c in entries["covariates"].split(",") if c.strip())
    return ColumnMapping(
        instrument=entries["instrument"],
        treatment=entries["treatment"],
        outcome=entries["outcome"],
        covariates=covs,
    )


def _numeric_column(df: pd.DataFrame, col: str, path) -> np.ndarray:
    raw = df[col]
    if raw.isna().any():
        row = int(raw.index[raw.isna()][0])
        raise ValidationError(f"missing value in column {col!r} at data row {row} of {path}")
    values = pd.to_numeric(raw, errors="coerce")
    if values.isna().any():
        row = int(values.index[values.isna()][0])
        raise ParseError(
            f"non-numeric value {raw.iloc[row]!r} in column {col!r} at data row {row} of {path}"
        )
    return values.to_numpy(dtype=np.float64)


def load_csv(path, mapping: ColumnMapping, label: str = "B") -> StudySample:
    """Load one cohort from a headed CSV file using a column mapping.

    The covariate column order follows the mapping order. Missing columns,
    non-numeric cells and non-binary instrument/treatment values are all
    rejected with the offending column and row named.
    """
    df = pd.read_csv(path, float_precision="round_trip")
    needed = [mapping.instrument, mapping.treatment, mapping.outcome, *mapping.covariates]
    absent = [c for c in needed if c not in df.columns]
    if absent:
        raise MappingError(f"columns {absent} not found in {path}; have {list(df.columns)}")
    x = np.column_stack([_numeric_column(df, c, path) for c in mapping.covariates])
    return StudySample(
        covariates=x,
        instrument=_numeric_column(df, mapping.instrument, path),
        treatment=_numeric_column(df, mapping.treatment, path),
        outcome=_numeric_column(df, mapping.outcome, path),
        label=label,
        covariate_names=mapping.covariates,
    )


def default_mapping(sample: StudySample) -> ColumnMapping:
    """Mapping matching the column layout produced by :func:`write_csv`."""
    return ColumnMapping(
        instrument="z", treatment="d", outcome="y", covariates=sample.covariate_names
    )


def write_csv(sample: StudySample, path) -> None:
    """Write a sample as CSV, round-trippable through :func:`load_csv`.

    Floats are written with 17 significant digits so the read-back sample
    equals the original exactly.
    """
    df = pd.DataFrame(sample.covariates, columns=list(sample.covariate_names))
    df["z"] = sample.instrument.astype(np.int64)
    df["d"] = sample.treatment.astype(np.int64)
    df["y"] = sample.outcome
    df.to_csv(path, index=False, float_format="%.17g")


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index in 1..k for every row of a sample."""

    fold_index: np.ndarray
    k: int

    def __post_init__(self):
        object.__setattr__(self, "fold_index", _frozen(self.fold_index, dtype=np.int64))

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index != fold)


def make_folds(sample: StudySample, k: int, seed: int) -> FoldAssignment:
    """Randomly partition a sample's rows into k folds of near-equal size.

    Fold sizes differ by at most one and the assignment is a deterministic
    function of ``(n, k, seed)``.
    """
    n = sample.n
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"fold count {k} exceeds sample size {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    fold_index = np.empty(n, dtype=np.int64)
    start = 0
    for fold, size in enumerate(sizes, start=1):
        fold_index[order[start : start + size]] = fold
        start += size
    return FoldAssignment(fold_index=fold_index, k=k)


@dataclass(frozen=True)
class PooledSample:
    """Study A stacked above a subset of study B, with a membership column."""

    covariates: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "covariates", _frozen(self.covariates))
        object.__setattr__(self, "membership", _frozen(self.membership))


def pool_for_weights(a: StudySample, b_covariates: np.ndarray) -> PooledSample:
    """Stack study A's covariates above rows of study B for membership fitting.

    Membership is 0 for A rows and 1 for B rows, in stacking order.
    """
    b_covariates = np.atleast_2d(np.asarray(b_covariates, dtype=np.float64))
    if b_covariates.shape[0] == 0:
        raise ValueError("study B subset is empty; nothing to pool")
    if b_covariates.shape[1] != a.p:
        raise ValueError(
            f"covariate dimension mismatch: study A has {a.p}, B subset has {b_covariates.shape[1]}"
        )
    covariates = np.vstack([a.covariates, b_covariates])
    membership = np.concatenate([np.zeros(a.n), np.ones(b_covariates.shape[0])])
    return PooledSample(covariates=covariates, membership=membership)
