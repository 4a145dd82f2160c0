import numpy as np
import pytest

from qdtree import BlochPoint, ModelParams, WeightedEnsemble, branch_map, initial_ensemble, rotate
from qdtree.bloch import branch_arrays
from qdtree.errors import ConfigError, ForbiddenBranchError


def test_model_params_validation():
    with pytest.raises(ConfigError):
        ModelParams(0.0)
    with pytest.raises(ConfigError):
        ModelParams(1.0)
    with pytest.raises(ConfigError):
        ModelParams(0.3, "bogus")
    with pytest.raises(ConfigError):
        ModelParams(0.3, k=0)
    p = ModelParams(0.5, "deterministic", 2)
    assert p.theta == pytest.approx(np.pi / 4)
    assert p.c == pytest.approx(np.sqrt(0.5))
    assert p.heisenberg_angle == -p.theta
    assert not p.perfectly_qd and ModelParams(0.5).perfectly_qd
    assert p.with_(k=3).k == 3 and p.with_(k=3).J == 0.5


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


def test_bloch_point_bounds():
    BlochPoint(1.0, 0.0)
    with pytest.raises(ValueError):
        BlochPoint(1.0, 0.1)
    with pytest.raises(ValueError):
        BlochPoint(np.nan, 0.0)


def test_branch_map_examples():
    # perfect records of equal sign reinforce, opposite signs are forbidden
    assert branch_map(BlochPoint(1, 0), BlochPoint(1, 0)) == BlochPoint(1.0, 0.0)
    with pytest.raises(ForbiddenBranchError):
        branch_map(BlochPoint(1, 0), BlochPoint(-1, 0))
    # two maximally mixed children give a maximally mixed parent
    assert branch_map(BlochPoint(0, 0), BlochPoint(0, 0)) == BlochPoint(0.0, 0.0)
    # v is multiplicative
    out = branch_map(BlochPoint(0, 0.5), BlochPoint(0, 0.5))
    assert out.u == 0 and out.v == pytest.approx(0.25)


def test_rotate_preserves_norm(rng):
    for _ in range(100):
        a = rng.uniform(0, 2 * np.pi)
        p = BlochPoint(np.cos(a), np.sin(a))
        q = rotate(p, rng.uniform(-3, 3))
        assert q.r2 <= 1.0 + 1e-15
        assert q.r2 == pytest.approx(1.0, abs=1e-15)


def test_branch_arrays_forbidden_entries_are_zero():
    phi, mu, mv = branch_arrays(np.array([1.0, 0.5]), np.zeros(2), np.array([-1.0, 0.5]), np.zeros(2))
    assert phi[0] == 0.0 and mu[0] == 0.0 and mv[0] == 0.0
    assert mu[1] == pytest.approx(1.0 / 1.25)


def test_initial_ensemble():
    p = ModelParams(0.3, "deterministic", 3)
    e = initial_ensemble(p)
    assert e.total() == 1.0
    assert e.mean() == (0.0, 0.0)
    assert np.allclose(np.abs(e.u), p.c ** 2)


def test_weighted_ensemble_validation():
    with pytest.raises(ValueError):
        WeightedEnsemble([1.0], [1.0], [0.5])
    with pytest.raises(ValueError):
        WeightedEnsemble([-1.0], [0.0], [0.0])
    with pytest.raises(ValueError):
        WeightedEnsemble([], [], [])
    e = WeightedEnsemble.from_peaks([(1, (0.1, 0.2)), (3, BlochPoint(0.0, -0.5))], normalize=True)
    assert e.total() == pytest.approx(1.0)
    assert e.peaks[1][1] == BlochPoint(0.0, -0.5)
    assert WeightedEnsemble.delta(0.2, 0.1).mean() == (0.2, 0.1)
