import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from bdhlab.sieves import build_factor_table  # noqa: E402

settings.register_profile(
    "lab", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def table():
    return build_factor_table(20000)


@pytest.fixture(scope="session")
def big_table():
    return build_factor_table(10**6)
