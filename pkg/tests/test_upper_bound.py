import itertools

import numpy as np
import pytest
from scipy.linalg import null_space

from app.services.bounds import lower_bound_service as lower
from app.services.bounds import upper_bound_service as upper
from app.services.info import info_kernel_service as kernel
from app.services.info.block_service import BlockDistribution
from app.services.info.entropy_service import entropy_of
from app.services.state import state_chain_service as chain
from app.utils.error_handler import DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams


def _objective_by_enumeration(params: ChannelParams, L: int, u: np.ndarray) -> float:
    """H(Y_L | Y^{L-1}) - H(Y_L | Y^{L-1}, X_0^L, Z_0) from the full (x, z-path) joint."""
    pi = chain.stationary_distribution(params).as_array()
    M = chain.one_step_matrix(params).entries
    m = L + 1
    joint = np.zeros((1 << L, 1 << m, 2))   # [y, x, z0]
    for x in range(1 << m):
        bits = (x >> np.arange(m)) & 1
        for path in itertools.product((0, 1), repeat=m):
            weight = u[x] * pi[path[0]]
            for prev, cur in zip(path, path[1:]):
                weight *= M[cur, prev]
            y = sum(int(bits[i - path[i]]) << (i - 1) for i in range(1, m))
            joint[y, x, path[0]] += weight
    half = 1 << (L - 1)
    y_full = joint.sum(axis=(1, 2))
    y_prefix = y_full[:half] + y_full[half:]
    given = joint[:half] + joint[half:]
    return (entropy_of(y_full) - entropy_of(y_prefix)) - (entropy_of(joint) - entropy_of(given))


def test_build_problem_smallest_window():
    prob = upper.build_problem(ChannelParams(p_i=0.2, p_d=0.3), 1, bitsym=False)
    assert prob.W.shape == (2, 4)
    assert prob.size == 4
    np.testing.assert_allclose(prob.W.sum(axis=0), np.ones(4), atol=1e-14)


@pytest.mark.parametrize("L", [2, 3, 5])
def test_build_problem_structure(asymmetric_params, L):
    prob = upper.build_problem(asymmetric_params, L)
    np.testing.assert_allclose(prob.W.sum(axis=0), np.ones(1 << (L + 1)), atol=1e-12)
    np.testing.assert_allclose(prob.W_prefix.sum(axis=0), np.ones(1 << (L + 1)), atol=1e-12)
    assert np.all(prob.c >= 0.0) and np.all(prob.c <= 1.0)
    assert prob.constraints.family_rows["stationarity"] == (1 << L) - 1


def test_build_problem_guards(asymmetric_params):
    with pytest.raises(DomainError):
        upper.build_problem(asymmetric_params, 0)
    with pytest.raises(EnumerationGuardError):
        upper.build_problem(asymmetric_params, 13)


def test_build_problem_is_cached(asymmetric_params):
    first = upper.build_problem(asymmetric_params, 3)
    assert upper.build_problem(asymmetric_params, 3) is first
    assert upper.build_problem(asymmetric_params, 3, bitsym=False) is not first


def test_large_window_builds():
    prob = upper.build_problem(ChannelParams(p_i=0.1, p_d=0.1), 7)
    assert prob.size == 256
    assert prob.W.shape[0] <= 128


@pytest.mark.parametrize("p_i,p_d,L", [(0.5, 0.5, 3), (0.2, 0.3, 3), (0.1, 0.4, 2)])
def test_objective_matches_enumeration(p_i, p_d, L):
    params = ChannelParams(p_i=p_i, p_d=p_d)
    prob = upper.build_problem(params, L, bitsym=False)
    for u in (kernel.iud_distribution(L + 1).probs, kernel.markov_block_distribution(0.3, L + 1).probs):
        assert upper.objective(prob, u) == pytest.approx(_objective_by_enumeration(params, L, u), abs=1e-12)


def test_objective_point_mass_is_zero(asymmetric_params):
    prob = upper.build_problem(asymmetric_params, 3, bitsym=False)
    value, grad = upper.objective_and_gradient(prob, BlockDistribution.point_mass(4, 0))
    assert value == pytest.approx(0.0, abs=1e-15)
    assert np.all(np.isfinite(grad))


def test_objective_iud_noiseless_limit():
    prob = upper.build_problem(ChannelParams(p_i=1e-9, p_d=1e-9), 3)
    assert upper.objective(prob, kernel.iud_distribution(4)) == pytest.approx(1.0, abs=1e-6)


def test_objective_rejects_infeasible(asymmetric_params):
    prob = upper.build_problem(asymmetric_params, 3)
    with pytest.raises(DomainError):
        upper.objective_and_gradient(prob, BlockDistribution.point_mass(4, "0100"))
    with pytest.raises(DomainError):
        upper.objective(prob, np.ones(8) / 8.0)


def test_gradient_matches_finite_differences(asymmetric_params, rng):
    prob = upper.build_problem(asymmetric_params, 3, bitsym=False)
    u = kernel.markov_block_distribution(0.3, 4).probs
    basis = null_space(prob.constraints.matrix)
    _, grad = upper.objective_and_gradient(prob, u)
    h = 1e-6
    for _ in range(5):
        d = basis @ rng.normal(size=basis.shape[1])
        d *= 0.01 / np.max(np.abs(d))
        numeric = (upper.objective(prob, u + h * d) - upper.objective(prob, u - h * d)) / (2.0 * h)
        assert grad @ d == pytest.approx(numeric, rel=1e-5, abs=1e-9)


def test_solve_sandwich_at_low_noise():
    params = ChannelParams(p_i=0.1, p_d=0.1)
    result = upper.upper_bound(params, 2)
    assert result.converged
    assert result.value >= lower.lower_bound(params).value - 1e-8
    assert result.feasibility_residual < 1e-10
    assert result.certified_value >= result.value
    assert result.duality_gap < 1e-6
    assert kernel.stationarity_residual(result.u_opt) < 1e-8


def test_solve_is_monotone_in_window():
    params = ChannelParams(p_i=0.1, p_d=0.1)
    rows = upper.upper_bound_sequence(params, [3, 2])
    assert [row["L"] for row in rows] == [2, 3]
    assert rows[1]["result"].value <= rows[0]["result"].value + 1e-9
    assert not any(row["nonmonotone"] for row in rows)


def test_solve_noiseless_limit():
    result = upper.upper_bound(ChannelParams(p_i=1e-4, p_d=1e-4), 2)
    assert result.value == pytest.approx(1.0, abs=5e-3)
    assert result.value <= 1.0 + 1e-9


def test_bit_symmetry_rows_do_not_move_the_optimum(asymmetric_params):
    with_rows = upper.upper_bound(asymmetric_params, 2, bitsym=True)
    without = upper.upper_bound(asymmetric_params, 2, bitsym=False)
    assert with_rows.value == pytest.approx(without.value, abs=1e-7)


def test_trivializing_input_symmetric():
    result = upper.trivializing_input(ChannelParams(p_i=0.3, p_d=0.3), 3)
    assert result.feasible
    assert sorted(result.input.support()) == [("0100", 0.5), ("1011", 0.5)]
    assert result.objective == pytest.approx(1.0, abs=1e-12)
    assert result.not_stationary


def test_trivializing_input_small_window():
    result = upper.trivializing_input(ChannelParams(p_i=0.1, p_d=0.1), 2)
    assert result.objective == pytest.approx(1.0, abs=1e-12)
    assert result.not_stationary


def test_trivializing_input_insertion_dominant():
    result = upper.trivializing_input(ChannelParams(p_i=0.4, p_d=0.1), 3)
    assert result.feasible
    assert result.objective == pytest.approx(1.0, abs=1e-6)
    assert result.residual < 1e-8
    last_two_equal = [s[-1] == s[-2] for s, p in result.input.support(1e-12)]
    assert all(last_two_equal)


def test_trivializing_input_rejects_short_window():
    with pytest.raises(DomainError):
        upper.trivializing_input(ChannelParams(p_i=0.3, p_d=0.3), 1)


def test_check_not_stationary():
    assert not upper.check_not_stationary(kernel.iud_distribution(4))
    assert not upper.check_not_stationary(kernel.markov_block_distribution(0.3, 4))
    assert upper.check_not_stationary(BlockDistribution.point_mass(4, "0100"))


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.1, 0.3])
def test_stationarity_prevents_trivialization(p):
    params = ChannelParams(p_i=p, p_d=p)
    for L in (2, 3, 4):
        assert upper.trivializing_input(params, L).objective == pytest.approx(1.0, abs=1e-12)
        assert upper.upper_bound(params, L).value < 0.999


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.02, 0.05, 0.1, 0.2, 0.3])
def test_sandwich_and_monotonicity(p):
    params = ChannelParams(p_i=p, p_d=p)
    floor = lower.lower_bound(params).value
    rows = upper.upper_bound_sequence(params, range(2, 7))
    values = [row["result"].value for row in rows]
    assert all(v >= floor - 1e-8 for v in values)
    assert all(b <= a + 1e-8 for a, b in zip(values, values[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("p,gap", [(0.02, 5e-3), (0.05, 2e-2)])
def test_tight_at_low_noise(p, gap):
    params = ChannelParams(p_i=p, p_d=p)
    assert upper.upper_bound(params, 2).value - lower.lower_bound(params).value < gap
