"""Distribution container: bin coordinates, marginals, sampling."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borngen.distributions import DiscreteDistribution, marginal, sample


def test_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution(np.ones(3) / 3, (2,))  # wrong length
    with pytest.raises(ValueError):
        DiscreteDistribution(np.ones((2, 2)) / 4, (2,))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.ones(4) / 4, (1, 1), names=("a",))


def test_bin_tuple_feature_zero_in_low_bits():
    dist = DiscreteDistribution(np.ones(8) / 8, (1, 2))
    # flat index 5 = 0b101: feature 0 gets the low bit (1), feature 1 gets 0b10
    assert dist.bin_tuple(5) == (1, 2)


def test_bin_coordinates_match_bin_tuple():
    dist = DiscreteDistribution(np.ones(16) / 16, (2, 2))
    coords = dist.bin_coordinates()
    for flat in range(16):
        assert tuple(int(c) for c in coords[flat]) == dist.bin_tuple(flat)


def test_marginal_point_mass():
    probs = np.zeros(16)
    probs[0] = 1.0
    dist = DiscreteDistribution(probs, (2, 2))
    for j in range(2):
        m = marginal(dist, j)
        assert m.probs[0] == pytest.approx(1.0)


def test_marginal_of_product_distribution():
    p = np.array([0.7, 0.3])
    q = np.array([0.1, 0.2, 0.3, 0.4])
    # feature 0 in the low bit: joint[flat] = p[flat & 1] * q[flat >> 1]
    joint = np.array([p[f & 1] * q[f >> 1] for f in range(8)])
    dist = DiscreteDistribution(joint, (1, 2), names=("a", "b"))
    np.testing.assert_allclose(marginal(dist, "a").probs, p)
    np.testing.assert_allclose(marginal(dist, "b").probs, q)


def test_marginal_unknown_feature():
    dist = DiscreteDistribution(np.ones(4) / 4, (1, 1), names=("a", "b"))
    with pytest.raises(KeyError):
        marginal(dist, "c")
    with pytest.raises(KeyError):
        marginal(dist, 2)


@settings(deadline=None, max_examples=30)
@given(seed=st.integers(0, 10_000))
def test_marginals_of_random_joint_are_normalized(seed):
    rng = np.random.default_rng(seed)
    probs = rng.random(32)
    probs /= probs.sum()
    dist = DiscreteDistribution(probs, (2, 1, 2))
    for j in range(3):
        m = marginal(dist, j)
        assert m.probs.sum() == pytest.approx(1.0, abs=1e-10)
    # summing marginal 0 over its own axis reproduces a direct reduction
    direct = np.zeros(4)
    for flat, p in enumerate(probs):
        direct[flat & 3] += p
    np.testing.assert_allclose(marginal(dist, 0).probs, direct, atol=1e-12)


def test_sample_deterministic():
    dist = DiscreteDistribution(np.array([0.25, 0.75]), (1,))
    a = sample(dist, 100, 42)
    b = sample(dist, 100, 42)
    np.testing.assert_array_equal(a, b)


def test_sample_frequencies():
    dist = DiscreteDistribution(np.array([0.25, 0.75]), (1,))
    draws = sample(dist, 100_000, 0)
    assert np.mean(draws == 1) == pytest.approx(0.75, abs=0.01)


def test_sample_rejects_bad_shots():
    dist = DiscreteDistribution(np.array([1.0, 0.0]), (1,))
    with pytest.raises(ValueError):
        sample(dist, 0, 0)


def test_normalized():
    dist = DiscreteDistribution(np.array([2.0, 2.0]), (1,))
    assert dist.normalized().probs == pytest.approx([0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteDistribution(np.zeros(2), (1,)).normalized()
