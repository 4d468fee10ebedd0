import numpy as np

from simpgmg import SplitMix64, make_state


def test_same_seed_same_stream():
    a = SplitMix64(1234).uniform01(100)
    b = SplitMix64(1234).uniform01(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, SplitMix64(1235).uniform01(100))


def test_batching_independence():
    gen = SplitMix64(7)
    one = np.concatenate([gen.next_u64(1) for _ in range(20)])
    assert np.array_equal(one, SplitMix64(7).next_u64(20))


def test_uniform_range_and_spread():
    u = SplitMix64(42).uniform01(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_gaussian_moments():
    g = SplitMix64(3).gaussian(200_001)  # odd length exercises the pair split
    assert g.shape == (200_001,)
    assert abs(g.mean()) < 0.01
    assert abs(g.std() - 1.0) < 0.01


def test_binary_state_binomial_law():
    # solid count over many seeds follows Binomial(64, 0.5): check the mean
    # of the per-seed counts at three sigma of the sampling distribution
    n_seeds = 1000
    counts = np.array([
        (make_state("binary", 4, 4, 4, vf=0.5, seed=s).rho == 1.0).sum()
        for s in range(n_seeds)
    ])
    assert counts.min() >= 0 and counts.max() <= 64
    mean, sigma = 32.0, np.sqrt(64 * 0.25)  # per-seed std = 4
    assert abs(counts.mean() - mean) < 3 * sigma / np.sqrt(n_seeds)
