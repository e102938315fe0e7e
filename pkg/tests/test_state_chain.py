import math

import numpy as np
import pytest

from app.services.state import state_chain_service as chain
from app.services.state.state_chain_service import StateDist, TransitionMatrix
from app.utils.error_handler import DegenerateParametersError, DomainError
from app.utils.validators import ChannelParams

H2_02 = 0.7219280948873623
H2_025 = 0.8112781244591328


def test_stationary_distribution_values():
    d = chain.stationary_distribution(ChannelParams(p_i=0.3, p_d=0.1))
    assert d.p0 == pytest.approx(0.25)
    assert d.p1 == pytest.approx(0.75)

    d = chain.stationary_distribution(ChannelParams(p_i=0.2, p_d=0.2))
    assert (d.p0, d.p1) == pytest.approx((0.5, 0.5))


def test_stationary_distribution_degenerate():
    with pytest.raises(DegenerateParametersError):
        chain.stationary_distribution(ChannelParams(p_i=0.0, p_d=0.0))


@pytest.mark.parametrize("p_i,p_d", [(0.3, 0.1), (0.2, 0.3), (0.9, 0.05), (1.0, 1.0)])
def test_stationary_distribution_is_fixed_point(p_i, p_d):
    params = ChannelParams(p_i=p_i, p_d=p_d)
    pi = chain.stationary_distribution(params).as_array()
    M = chain.one_step_matrix(params).entries
    assert np.max(np.abs(M @ pi - pi)) < 1e-12


def test_one_step_matrix():
    M = chain.one_step_matrix(ChannelParams(p_i=0.2, p_d=0.3)).entries
    np.testing.assert_allclose(M, [[0.8, 0.3], [0.2, 0.7]])


def test_k_step_matrix_examples():
    params = ChannelParams(p_i=0.2, p_d=0.3)
    np.testing.assert_allclose(chain.k_step_matrix(params, 1).entries, [[0.8, 0.3], [0.2, 0.7]], atol=1e-15)
    two = chain.k_step_matrix(params, 2).entries
    assert two[0, 0] == pytest.approx(0.70, abs=1e-14)
    assert two[0, 1] == pytest.approx(0.45, abs=1e-14)

    half = chain.k_step_matrix(ChannelParams(p_i=0.5, p_d=0.5), 3).entries
    np.testing.assert_allclose(half, np.full((2, 2), 0.5), atol=1e-15)


@pytest.mark.parametrize("p_i,p_d", [(0.2, 0.3), (0.05, 0.05), (0.4, 0.1), (0.7, 0.6), (1.0, 0.3)])
def test_k_step_matrix_matches_repeated_product(p_i, p_d):
    params = ChannelParams(p_i=p_i, p_d=p_d)
    step = chain.one_step_matrix(params).entries
    power = np.eye(2)
    for k in range(1, 21):
        power = step @ power
        assert np.max(np.abs(chain.k_step_matrix(params, k).entries - power)) < 1e-12


def test_k_step_matrix_rejects_bad_k():
    with pytest.raises(DomainError):
        chain.k_step_matrix(ChannelParams(p_i=0.2, p_d=0.3), 0)


def test_cond_state_entropy_examples():
    assert chain.cond_state_entropy(ChannelParams(p_i=0.5, p_d=0.5), 1) == pytest.approx(1.0, abs=1e-15)
    assert chain.cond_state_entropy(ChannelParams(p_i=0.2, p_d=0.2), 1) == pytest.approx(H2_02, abs=1e-12)
    assert chain.cond_state_entropy(ChannelParams(p_i=0.3, p_d=0.1), 200) == pytest.approx(H2_025, abs=1e-9)


@pytest.mark.parametrize("p_i,p_d", [(0.3, 0.1), (0.2, 0.3), (0.02, 0.01), (0.005, 0.003), (0.6, 0.45)])
def test_cond_state_entropy_below_limit(p_i, p_d):
    params = ChannelParams(p_i=p_i, p_d=p_d)
    limit = chain.state_entropy_limit(params)
    # first k with |1 - p_i - p_d|^k below 1e-12
    k_mixed = math.ceil(math.log(1e-12) / math.log(abs(1.0 - params.total)))
    values = chain.cond_state_entropy_array(params, np.arange(1, k_mixed + 1))
    assert np.all(values <= limit + 1e-12)
    assert values[-1] == pytest.approx(limit, abs=1e-9)


def test_cond_state_entropy_tiny_noise_is_accurate():
    # 1 - (1 - 2e-12)^k must not cancel to zero
    params = ChannelParams(p_i=1e-12, p_d=1e-12)
    assert chain.cond_state_entropy(params, 1) > 0.0


def test_transition_matrix_validation():
    with pytest.raises(DomainError):
        TransitionMatrix(np.array([[0.5, 0.5], [0.6, 0.5]]))
    with pytest.raises(DomainError):
        StateDist(0.7, 0.4)


def test_sample_state_path_alternates_when_deterministic():
    z = chain.sample_state_path(ChannelParams(p_i=1.0, p_d=1.0), 50, seed=3)
    assert z.size == 50
    assert np.all(z[1:] != z[:-1])


def test_sample_state_path_stationary_fraction():
    n = 10 ** 6
    z = chain.sample_state_path(ChannelParams(p_i=0.2, p_d=0.2), n, seed=7)
    assert z.size == n
    # lag-one correlation 0.6 inflates the variance by (1 + 0.6) / (1 - 0.6)
    sigma = np.sqrt(0.25 * 4.0 / n)
    assert abs(z.mean() - 0.5) < 4 * sigma


def test_sample_state_path_transition_frequencies():
    z = chain.sample_state_path(ChannelParams(p_i=0.1, p_d=0.3), 200_000, seed=11).astype(np.int64)
    prev, cur = z[:-1], z[1:]
    assert np.mean(cur[prev == 0]) == pytest.approx(0.1, abs=0.01)
    assert np.mean(1 - cur[prev == 1]) == pytest.approx(0.3, abs=0.015)


def test_sample_state_path_is_seed_deterministic():
    params = ChannelParams(p_i=0.2, p_d=0.3)
    a = chain.sample_state_path(params, 1000, seed=42)
    b = chain.sample_state_path(params, 1000, seed=42)
    assert np.array_equal(a, b)


def test_sample_state_path_explicit_initial_state():
    z = chain.sample_state_path(ChannelParams(p_i=0.0, p_d=0.5), 20, seed=1, initial=StateDist(1.0, 0.0))
    # state 0 is absorbing once p_i = 0
    assert np.all(z == 0)


def test_sample_state_path_rejects_degenerate():
    with pytest.raises(DegenerateParametersError):
        chain.sample_state_path(ChannelParams(p_i=0.0, p_d=0.0), 10, seed=0)
