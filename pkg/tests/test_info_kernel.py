import numpy as np
import pytest
from scipy.linalg import null_space

from app.services.channel import did_channel_service as channel
from app.services.info import info_kernel_service as kernel
from app.services.info.block_service import BlockDistribution, block_bits
from app.utils.error_handler import DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams


def _joint_by_xz_enumeration(params: ChannelParams, input_dist: BlockDistribution) -> np.ndarray:
    """P(x, y) by summing over every z-path, independent of the forward DP."""
    n = input_dist.length - 1
    out = np.zeros((1 << (n + 1), 1 << n))
    for x in range(1 << (n + 1)):
        bits = ((x >> np.arange(n + 1)) & 1).astype(np.uint8)
        out[x] = input_dist.probs[x] * channel.channel_law_bruteforce(params, bits)
    return out


def test_mutual_information_point_mass_is_zero(asymmetric_params):
    assert kernel.mutual_information_bruteforce(asymmetric_params, BlockDistribution.point_mass(4, "0110")) \
        == pytest.approx(0.0, abs=1e-12)


def test_mutual_information_matches_independent_enumeration(asymmetric_params):
    iud = kernel.iud_distribution(5)
    expected = kernel.mutual_information_joint(_joint_by_xz_enumeration(asymmetric_params, iud))
    assert kernel.mutual_information_bruteforce(asymmetric_params, iud) == pytest.approx(expected, abs=1e-12)


def test_mutual_information_near_noiseless():
    # the state sticks to its stationary start: Y is X_1..X_3 or X_0..X_2 with
    # probability 1/2 each, which costs one bit except for the two constant blocks
    params = ChannelParams(p_i=1e-9, p_d=1e-9)
    value = kernel.mutual_information_bruteforce(params, kernel.iud_distribution(4))
    assert value == pytest.approx(3.0 - 14.0 / 16.0, abs=1e-6)


def test_mutual_information_guard(asymmetric_params):
    with pytest.raises(EnumerationGuardError):
        kernel.mutual_information_bruteforce(asymmetric_params, kernel.iud_distribution(12))


def test_mutual_information_joint_identity_channel():
    joint = np.diag([0.25, 0.25, 0.5])
    assert kernel.mutual_information_joint(joint) == pytest.approx(1.5)


def test_symmetrize_examples():
    sym = kernel.symmetrize(BlockDistribution.point_mass(3, "000"))
    assert sym.support() == [("000", 0.5), ("111", 0.5)]
    iud = kernel.iud_distribution(3)
    np.testing.assert_allclose(kernel.symmetrize(iud).probs, iud.probs)
    assert kernel.is_bit_symmetric(sym)
    assert not kernel.is_bit_symmetric(BlockDistribution.point_mass(2, "01"))


def test_symmetrize_idempotent_and_keeps_stationarity(rng):
    for _ in range(20):
        m = int(rng.integers(2, 6))
        base = BlockDistribution(2, rng.dirichlet(np.ones(4)))
        stationary = kernel.feinstein_shift_average(base, m)
        sym = kernel.symmetrize(stationary)
        np.testing.assert_allclose(kernel.symmetrize(sym).probs, sym.probs, atol=1e-15)
        assert sym.probs.sum() == pytest.approx(1.0)
        assert kernel.stationarity_residual(sym) < 1e-12


def test_symmetrization_does_not_lose_information(asymmetric_params):
    report = kernel.check_symmetrization(asymmetric_params, n_max=3, trials=30, seed=4)
    assert report["violations"] == 0
    assert report["idempotence_error"] < 1e-15


def test_stationarity_constraints_m2():
    system = kernel.stationarity_constraints(2)
    np.testing.assert_array_equal(system.matrix, [[0.0, 1.0, -1.0, 0.0]])


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_stationarity_constraints_shape_and_rank(m):
    system = kernel.stationarity_constraints(m)
    rows = (1 << (m - 1)) - 1
    assert system.matrix.shape == (rows, 1 << m)
    assert np.linalg.matrix_rank(system.matrix) == rows


def test_iid_and_markov_laws_are_stationary():
    bit = np.array([0.3, 0.7])
    product = bit
    for _ in range(2):
        product = np.kron(bit, product)
    system = kernel.stationarity_constraints(3)
    assert np.max(np.abs(system.matrix @ product)) < 1e-15
    for alpha in (0.1, 0.3, 0.5, 0.9):
        assert kernel.stationarity_residual(kernel.markov_block_distribution(alpha, 4)) < 1e-14


def test_shift_asymmetric_law_violates_a_row():
    # P(V_1 = 0) = 1 but P(V_2 = 0) = 0
    d = BlockDistribution.point_mass(4, "0111")
    assert kernel.stationarity_residual(d) > 0.5


def test_dropped_row_is_implied(rng):
    # any law satisfying the kept rows also satisfies the all-ones row
    system = kernel.build_constraint_system(4, stationarity=True, bitsym=False, unity=True)
    basis = null_space(system.matrix)
    particular = np.full(16, 1.0 / 16.0)
    for _ in range(5):
        v = particular + basis @ rng.normal(size=basis.shape[1])
        first = v.reshape(2, 8).sum(axis=0)
        later = v.reshape(8, 2).sum(axis=1)
        assert abs(first[7] - later[7]) < 1e-12


def test_build_constraint_system_families():
    system = kernel.build_constraint_system(3, stationarity=True, bitsym=True, unity=True)
    assert system.family_rows == {"stationarity": 3, "bitsym": 4, "unity": 1}
    assert system.matrix.shape == (8, 8)
    assert system.rhs[-1] == 1.0
    assert system.residual(kernel.iud_distribution(3).probs) < 1e-15
    free = kernel.build_constraint_system(3, stationarity=False, bitsym=False, unity=True)
    assert free.matrix.shape == (1, 8)


def test_bit_symmetry_rows():
    rows = kernel.bit_symmetry_constraints(2)
    np.testing.assert_array_equal(rows, [[1, 0, 0, -1], [0, 1, -1, 0]])


def test_markov_block_distribution():
    d = kernel.markov_block_distribution(0.3, 3)
    assert d.probs[0] == pytest.approx(0.5 * 0.7 * 0.7)
    assert d.probs[2] == pytest.approx(0.5 * 0.3 * 0.3)   # 010
    assert kernel.is_bit_symmetric(d)
    np.testing.assert_allclose(kernel.markov_block_distribution(0.5, 3).probs, np.full(8, 0.125))


def test_feinstein_examples():
    avg = kernel.feinstein_shift_average(kernel.iud_distribution(3), 4)
    np.testing.assert_allclose(avg.probs, np.full(16, 1.0 / 16.0), atol=1e-15)
    alt = kernel.feinstein_shift_average(BlockDistribution.point_mass(2, "01"), 1)
    np.testing.assert_allclose(alt.probs, [0.5, 0.5])


def test_feinstein_output_is_stationary(rng):
    base = BlockDistribution(3, rng.dirichlet(np.ones(8)))
    avg = kernel.feinstein_shift_average(base, 4)
    full_first = avg.probs.reshape(2, 8).sum(axis=0)
    full_later = avg.probs.reshape(8, 2).sum(axis=1)
    assert np.max(np.abs(full_first - full_later)) < 1e-12


def test_feinstein_check_and_guard():
    assert kernel.check_feinstein(trials=40, seed=3)["violations"] == 0
    with pytest.raises(DomainError):
        kernel.feinstein_shift_average(kernel.iud_distribution(2), 0)


def test_block_iid_product_order():
    first = BlockDistribution.point_mass(2, "01")
    product = kernel.block_iid_product(first, 2)
    assert product.support() == [("0101", 1.0)]
    mixed = kernel.block_iid_product(BlockDistribution(1, np.array([0.25, 0.75])), 3)
    bits = block_bits(3)
    expected = np.prod(np.where(bits == 1, 0.75, 0.25), axis=1)
    np.testing.assert_allclose(mixed.probs, expected)


def test_superadditivity():
    report = kernel.check_superadditivity(trials=200, seed=2)
    assert report["violations"] == 0


@pytest.mark.parametrize("r", [1, 2])
def test_block_rate_superadditive(asymmetric_params, r):
    report = kernel.check_block_rate(asymmetric_params, r, kernel.markov_block_distribution(0.3, r + 1))
    assert report["double"] >= 2.0 * report["single"] - 1e-10
    assert report["violation"] <= 1e-10
