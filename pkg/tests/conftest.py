from datetime import date

import numpy as np
import pytest

from agriprice.core import FeatureFrame, Series, weekly_timestamps

START = date(2019, 1, 7)  # a Monday


def make_series(values, start=START) -> Series:
    values = np.asarray(values, dtype=float)
    return Series(weekly_timestamps(start, len(values)), values)


def make_frame(prices, start=START, **exogenous) -> FeatureFrame:
    return FeatureFrame(make_series(prices, start=start), {k: np.asarray(v, float) for k, v in exogenous.items()})


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
