import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from convexflow.sets import (CappedConcaveEdge, HalfLineEdge, LinearTickEdge,
                             PiecewiseLinearGain, ProductMarketEdge)


def builtin_families():
    """One representative per built-in edge-set family."""
    return {
        "capped_rational": CappedConcaveEdge(capacity=1.0),
        "capped_piecewise": CappedConcaveEdge(
            gain=PiecewiseLinearGain([(0.4, 0.5), (1.0, 0.8), (2.0, 1.0)]),
            capacity=2.0),
        "linear_tick": LinearTickEdge(price=0.9, cap=1.5),
        "product_market": ProductMarketEdge([2.0, 5.0]),
        "half_line": HalfLineEdge(3.0),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240913)


@pytest.fixture(params=list(builtin_families()))
def family_set(request):
    return builtin_families()[request.param]
