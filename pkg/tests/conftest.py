"""Shared fixtures: published design fixtures and cheap chart sets.

Chart sets are cached under .chartcache at the repository root so repeated
test runs skip the Monte-Carlo estimation.
"""

import os

import numpy as np
import pytest

from fecdesign.channel import SnrPoint, shannon_limit_snr
from fecdesign.ensemble import InnerEnsemble, StaircaseSpec
from fecdesign.optimizer import ChartProvider, DesignSpace

CACHE_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), ".chartcache")

# published rate-8/9 inner designs used as golden fixtures (coefficients
# rounded to 4 decimals at the source)
EX1_L = np.array([0.1556, 0.1389, 0.0, 0.2941, 0.4113])
EX1_DC = 24.0
EX1_GAP_DB = 1.27
EX1_ITERS = 9
EX1_ETA_I = 25.59

EX2_L = np.array([0.1480, 0.1111, 0.0, 0.4539, 0.0911, 0.0, 0.0973, 0.0985])
EX2_DC = 28.0
EX2_GAP_DB = 1.00
EX2_ITERS = 18
EX2_ETA_I = 60.24

R_CAT = 5.0 / 6.0
OUTER_15_16 = StaircaseSpec(name="staircase-15-16", r_sc=0.9375, p_sc=5.02e-3,
                            block_side=704)


@pytest.fixture(scope="session")
def ex1_ensemble():
    return InnerEnsemble.from_node(EX1_L, EX1_DC, tol=1e-3)


@pytest.fixture(scope="session")
def ex2_ensemble():
    return InnerEnsemble.from_node(EX2_L, EX2_DC, tol=1e-3)


@pytest.fixture(scope="session")
def shannon_limit():
    return shannon_limit_snr(R_CAT)


@pytest.fixture(scope="session")
def snr_ex1(shannon_limit):
    return SnrPoint.from_db(shannon_limit + EX1_GAP_DB)


@pytest.fixture(scope="session")
def snr_ex2(shannon_limit):
    return SnrPoint.from_db(shannon_limit + EX2_GAP_DB)


@pytest.fixture(scope="session")
def cheap_space():
    """Low-sample search space for solver unit tests."""
    return DesignSpace(d_v_max=8, chart_samples=50000, chart_grid_points=25,
                       dc_bar_candidates=(EX1_DC,), nu_values=(1.25,))


@pytest.fixture(scope="session")
def cheap_charts(cheap_space, snr_ex1):
    """Small chart set at the first published operating point."""
    provider = ChartProvider(cheap_space, seed=3, cache_dir=CACHE_DIR)
    return provider(snr_ex1, EX1_DC, 1.25)
