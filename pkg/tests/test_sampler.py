import numpy as np
import pytest

from qdtree import ModelParams, WeightedEnsemble, initial_ensemble, step_biased, step_compressed
from qdtree.errors import ConfigError
from qdtree.exact import evolve_exact
from qdtree.observables import purity
from qdtree.sampler import compress, expand, step_rng, systematic_indices, tilt_weights


def test_step_rng_is_keyed():
    a = step_rng(1, 2).random(4)
    assert np.array_equal(a, step_rng(1, 2).random(4))
    assert not np.array_equal(a, step_rng(1, 3).random(4))
    assert not np.array_equal(a, step_rng(1, 2, 1).random(4))


def test_systematic_counts_are_within_one(rng):
    w = rng.random(50)
    w /= w.sum()
    n = 1000
    idx = systematic_indices(w, n, rng)
    counts = np.bincount(idx, minlength=50)
    assert np.all(np.abs(counts - n * w) < 1.0 + 1e-9)


def test_compress_and_expand(rng):
    e = WeightedEnsemble([0.25, 0.75], [0.1, -0.2], [0.0, 0.3])
    c = compress(e, 8, rng)
    assert len(c) == 8 and c.total() == pytest.approx(1.0)
    assert np.sum(c.u == 0.1) == 2
    x = expand(e, 8, rng)
    assert np.sum(x.u == -0.2) == 6
    with pytest.raises(ConfigError):
        compress(e, 0, rng)
    with pytest.raises(ConfigError):
        compress(e, 4, rng, scheme="bogus")


def test_tilt_weights_zero_mean(rng):
    u = rng.uniform(-0.5, 0.9, 200)
    v = rng.uniform(-0.3, 0.6, 200)
    w = tilt_weights(np.full(200, 1 / 200), u, v)
    assert w.sum() == pytest.approx(1.0)
    assert abs(w @ u) < 1e-14 and abs(w @ v) < 1e-14
    assert np.all(w > 0)


def test_compressed_step_shape_and_mean():
    p = ModelParams(0.35, "deterministic", 2)
    e = initial_ensemble(p)
    for s in range(3):
        e = step_compressed(e, 40, p, step_rng(7, s))
    assert len(e) == 1600
    assert e.total() == pytest.approx(1.0)
    assert max(abs(m) for m in e.mean()) < 1e-13
    assert np.all(e.r2 <= 1.0 + 1e-12)


def test_compressed_reproducible_and_variant_checked():
    p = ModelParams(0.35, "deterministic", 1)
    a = step_compressed(initial_ensemble(p), 20, p, step_rng(3, 0))
    b = step_compressed(initial_ensemble(p), 20, p, step_rng(3, 0))
    assert np.array_equal(a.u, b.u) and np.array_equal(a.w, b.w)
    with pytest.raises(ConfigError):
        step_compressed(initial_ensemble(p), 1, p, step_rng(0, 0))
    q = ModelParams(0.35, "random", 1)
    with pytest.raises(ConfigError):
        step_compressed(initial_ensemble(q), 20, q, step_rng(0, 0))


def test_compressed_tracks_exact_purity():
    # deterministic k=3, t=3: exact has 256 peaks; the sampler must agree within noise
    p = ModelParams(0.45, "deterministic", 3)
    exact = purity(evolve_exact(initial_ensemble(p), p, 3)[-1])
    vals = []
    for seed in range(10):
        e = initial_ensemble(p)
        for s in range(3):
            e = step_compressed(e, 60, p, step_rng(seed, s))
        vals.append(purity(e))
    se = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - exact) < 4 * se + 1e-3


def test_biased_step_symmetry():
    p = ModelParams(0.4, "random", 2)
    e = initial_ensemble(p)
    for s in range(3):
        e = step_biased(e, 4000, p, step_rng(1, s))
    q = len(e) // 4
    assert len(e) == 4000
    assert np.array_equal(e.u[:q], -e.u[q:2 * q])
    assert np.array_equal(e.v[:q], -e.v[2 * q:3 * q])
    assert e.mean() == pytest.approx((0.0, 0.0), abs=1e-15)


def test_biased_validation():
    p = ModelParams(0.4, "random", 2)
    with pytest.raises(ConfigError):
        step_biased(initial_ensemble(p), 10, p, step_rng(0, 0))
    d = ModelParams(0.4, "deterministic", 2)
    with pytest.raises(ConfigError):
        step_biased(initial_ensemble(d), 8, d, step_rng(0, 0))
    with pytest.raises(ConfigError):
        step_biased(initial_ensemble(p), 8, p, step_rng(0, 0), scheme="x")


def test_biased_tracks_exact_purity():
    p = ModelParams(0.45, "random", 2)
    exact = purity(evolve_exact(initial_ensemble(p), p, 2)[-1])
    vals = []
    for seed in range(8):
        e = initial_ensemble(p)
        for s in range(2):
            e = step_biased(e, 20_000, p, step_rng(seed, s))
        vals.append(purity(e))
    se = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - exact) < 4 * se + 1e-3
