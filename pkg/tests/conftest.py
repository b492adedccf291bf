"""Shared fixtures: bundled datasets plus synthetic data generators.

The synthetic generators are deterministic so reference values frozen in
the tests stay valid.
"""
import numpy as np
import pytest
from scipy.special import expit

import hota


def make_linkage_data() -> hota.LinkageData:
    return hota.LinkageData(counts=(50, 12, 8, 30))


def make_censreg_data(seed: int = 11, n: int = 40) -> hota.CensoredRegData:
    """Censored-normal regression with ~30% right censoring."""
    rng = np.random.default_rng(seed)
    x = np.linspace(2.0, 2.4, n)
    y = -6.0 + 4.3 * x + 0.26 * rng.standard_normal(n)
    cut = float(np.quantile(y, 0.7))
    rows = tuple(
        (float(min(yi, cut)), float(xi), bool(yi > cut)) for yi, xi in zip(y, x)
    )
    return hota.CensoredRegData(rows=rows)


def make_logistic_data(seed: int = 7, n: int = 80) -> hota.LogisticData:
    """Binary response on a correlated six-covariate design (plus intercept)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 3))
    loadings = np.array([
        [0.9, 0.1, 0.0],
        [0.7, 0.5, 0.1],
        [0.2, 0.8, 0.3],
        [0.1, 0.6, 0.6],
        [0.4, 0.2, 0.8],
        [0.6, 0.3, 0.5],
    ])
    X = np.empty((n, 7))
    X[:, 0] = 1.0
    X[:, 1:] = z @ loadings.T + 0.4 * rng.standard_normal((n, 6))
    beta = np.array([0.5, -0.6, 0.4, 0.3, -0.25, 0.2, 0.8])
    y = (rng.random(n) < expit(X @ beta)).astype(int)
    return hota.LogisticData(X=X, y=y)


def write_logistic_csv(path, data: hota.LogisticData) -> None:
    """Dump a LogisticData object in the CSV schema the loader expects."""
    names = ("gravity", "ph", "osmo", "conduct", "urea", "calc")
    with open(path, "w") as fh:
        fh.write(",".join(names) + ",y\n")
        for row, yi in zip(data.X, data.y):
            fh.write(",".join(f"{v:.12g}" for v in row[1:]) + f",{int(yi)}\n")


@pytest.fixture(scope="session")
def linkage_paper() -> hota.LinkageData:
    return hota.resolve_dataset("linkage-paper", "linkage")


@pytest.fixture(scope="session")
def motorette() -> hota.CensoredRegData:
    return hota.resolve_dataset("motorette", "censreg")


@pytest.fixture(scope="session")
def syn_linkage() -> hota.LinkageData:
    return make_linkage_data()


@pytest.fixture(scope="session")
def syn_censreg() -> hota.CensoredRegData:
    return make_censreg_data()


@pytest.fixture(scope="session")
def syn_logistic() -> hota.LogisticData:
    return make_logistic_data()
