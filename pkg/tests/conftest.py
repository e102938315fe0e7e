import numpy as np
import pytest

from app.utils import cache_service
from app.utils.console import set_quiet
from app.utils.validators import ChannelParams


@pytest.fixture(autouse=True)
def quiet_console():
    set_quiet(True)
    yield
    set_quiet(False)


@pytest.fixture
def symmetric_params():
    return ChannelParams(p_i=0.2, p_d=0.2)


@pytest.fixture
def asymmetric_params():
    return ChannelParams(p_i=0.2, p_d=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fresh_caches():
    cache_service.flush_all()
    yield
    cache_service.flush_all()
