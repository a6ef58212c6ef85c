import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from trendkit import data

FIXTURES = Path(__file__).parent / "fixtures"

DEFAULT_GRID = [0.0, 0.001, 0.01, 0.1]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ar_matrix() -> data.FactorMatrix:
    """Factor matrix of the committed synthetic price fixture."""
    series = data.read_price_csv(FIXTURES / "ar_prices.csv")
    return data.compute_factors(series, data.default_factor_specs())


def make_linear_generator(seed: int = 3):
    """A contracting 3-factor affine recursion with a rotating block.

    Returns (A, b, states) where states holds 200 exact iterates; the
    rotation keeps the trajectory exciting all directions so the map is
    identifiable from the data.
    """
    theta = 0.12
    rot = np.array([
        [np.cos(theta), -np.sin(theta), 0.0],
        [np.sin(theta), np.cos(theta), 0.0],
        [0.0, 0.0, 0.97],
    ])
    A = 0.995 * rot
    b = np.array([0.5, -0.2, 0.3])
    x = np.array([5.0, 2.0, 1.0])
    states = [x]
    for _ in range(199):
        x = A @ x + b
        states.append(x)
    return A, b, np.array(states)


def generator_matrix(states: np.ndarray) -> data.FactorMatrix:
    dates = [dt.date(2021, 1, 1) + dt.timedelta(days=i) for i in range(len(states))]
    return data.FactorMatrix("generator", dates, ["f1", "f2", "f3"], states)


@pytest.fixture(scope="session")
def linear_generator():
    A, b, states = make_linear_generator()
    return A, b, generator_matrix(states)
