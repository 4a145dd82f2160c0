import numpy as np
import pytest

from qdtree import ModelParams, WeightedEnsemble, initial_ensemble
from qdtree.errors import ConfigError
from qdtree.exact import evolve_exact
from qdtree.observables import (LN2, binary_entropy_gain, conditional_entropy, encoding_eigenvalue,
                                j_from_epsilon, loglog_slope, near_critical_purity_prediction,
                                purity, qd_lambda, qd_stability_eigenvalue, redundancy_exponent,
                                redundancy_prediction, scaling_collapse, time_average)


def test_purity_and_entropy_limits():
    pure = WeightedEnsemble([0.5, 0.5], [1.0, -1.0], [0.0, 0.0])
    mixed = WeightedEnsemble.delta()
    assert purity(pure) == 1.0 and purity(mixed) == 0.0
    assert conditional_entropy(pure) == pytest.approx(LN2)
    assert conditional_entropy(mixed) == 0.0


def test_binary_entropy_gain_is_smooth_near_one():
    r = np.array([1 - 1e-7, 1 - 2e-8, 1 - 1e-8, 1 - 5e-9, 1.0])
    g = binary_entropy_gain(r)
    assert np.all(np.diff(g) > 0)
    assert g[-1] == pytest.approx(LN2)
    # small r: gain ~ r^2 / 2
    assert binary_entropy_gain(np.array([1e-4]))[0] == pytest.approx(0.5e-8, rel=1e-6)


def test_encoding_eigenvalue():
    assert encoding_eigenvalue(0.5) == pytest.approx(1.0, abs=1e-15)
    assert encoding_eigenvalue(0.3) > 1.0 > encoding_eigenvalue(0.7)
    with pytest.raises(ConfigError):
        encoding_eigenvalue(1.0)


def test_near_critical_prediction():
    J = j_from_epsilon(0.01)
    assert np.cos(0.5 * np.pi * J) ** 2 - 0.5 == pytest.approx(0.01)
    assert near_critical_purity_prediction(J) == pytest.approx(0.08)


def test_qd_stability_eigenvalue_requires_circle():
    with pytest.raises(ConfigError):
        qd_stability_eigenvalue(WeightedEnsemble.delta(0.5, 0.0), ModelParams(0.3))


def test_qd_stability_deterministic_exact_small_t():
    p = ModelParams(0.3, "deterministic", 1)
    ens = evolve_exact(initial_ensemble(p), p, 3)[-1]
    lam = qd_stability_eigenvalue(ens, p)
    assert 0.0 < lam < 2.0


def test_qd_lambda_orders_with_J():
    lo, _ = qd_lambda(ModelParams(0.2, "random"), 8, size=20_000)
    hi, _ = qd_lambda(ModelParams(0.5, "random"), 8, size=20_000)
    assert lo < 1.0 < hi


def test_time_average_and_slope():
    s = np.arange(1, 101, dtype=float)
    assert time_average(s, 100) == pytest.approx(np.mean(s[89:100]), rel=0.02)
    t = np.arange(1, 200)
    assert loglog_slope(t, 3.0 / t, 10, 150) == pytest.approx(-1.0)


def test_redundancy_prediction_formula():
    R = redundancy_prediction(0.2, 0.2, 1e5, lambda_d=0.75)
    lc = encoding_eigenvalue(0.2)
    expect = 1e5 ** (np.log(lc) / LN2) * (0.2 / abs(np.log(0.2))) ** (np.log(lc) / abs(np.log(0.75)))
    assert R == pytest.approx(expect)
    assert redundancy_exponent(0.2) == pytest.approx(np.log2(lc))
    with pytest.raises(ConfigError):
        redundancy_prediction(0.2, 1.5, 1e5, lambda_d=0.75)


def test_scaling_collapse_perfect_data():
    J_d = 0.35
    curves = {}
    for t in (7, 8, 9, 10):
        Js = np.linspace(0.3, 0.4, 21)
        x = (Js - J_d) * t
        curves[t] = (Js, 1.0 - np.tanh(x) / t - 0.5 / t)
    res = scaling_collapse(curves, J_d)
    assert res["relative_spread"] < 1e-2
    with pytest.raises(ConfigError):
        scaling_collapse({7: ([0.0, 0.01], [1, 1]), 8: ([0.9, 0.95], [1, 1])}, 0.5, window=0.1)
