from __future__ import annotations

import numpy as np
import pytest

from swlate.crossfit import NuisancePredictions
from swlate.dataset import StudySample


def random_nuisances(seed: int, n: int = 30):
    """A study-B sample plus internally consistent random nuisance values.

    The treatment contrast is kept away from zero so ratio estimates are
    well defined; both instrument arms are guaranteed non-empty.
    """
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, n).astype(float)
    z[0], z[1] = 1.0, 0.0
    d = rng.integers(0, 2, n).astype(float)
    y = rng.normal(size=n)
    e = rng.uniform(0.2, 0.8, n)
    eta = rng.uniform(0.2, 0.8, n)
    m0 = rng.uniform(0.05, 0.45, n)
    m1 = m0 + rng.uniform(0.3, 0.5, n)
    preds = NuisancePredictions(
        mu1=rng.normal(size=n),
        mu0=rng.normal(size=n),
        m1=m1,
        m0=m0,
        e=e,
        eta=eta,
        w=(1.0 - eta) / eta,
        fold_index=rng.integers(1, 3, n),
        e_raw=e.copy(),
        eta_raw=eta.copy(),
    )
    sample = StudySample(
        covariates=rng.normal(size=(n, 3)),
        instrument=z,
        treatment=d,
        outcome=y,
        label="B",
    )
    return preds, sample


@pytest.fixture
def small_nuisances():
    return random_nuisances(seed=7, n=30)
