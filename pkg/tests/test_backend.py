import numpy as np
import pytest

from qdtree import ModelParams, _backend, initial_ensemble
from qdtree.coarse import coarse_evolve
from qdtree.sampler import step_compressed, step_rng

C = _backend.compiled_kernels
P = _backend.python_kernels
needs_ext = pytest.mark.skipif(C is None, reason="compiled extension not built")


def _cloud(rng, n):
    r = np.sqrt(rng.random(n))
    a = rng.uniform(0, 2 * np.pi, n)
    u, v = r * np.cos(a), r * np.sin(a)
    # a few exact perfect records to exercise the forbidden branch
    u[:2], v[:2] = 1.0, 0.0
    u[2:4], v[2:4] = -1.0, 0.0
    w = rng.random(n)
    return u, v, w / w.sum()


def test_backend_selection():
    assert _backend.BACKEND in ("cython", "python")
    for name in _backend.KERNEL_NAMES:
        assert callable(_backend.get(name))


@needs_ext
def test_pair_branch_equivalence(rng):
    u, v, w = _cloud(rng, 300)
    a = P.pair_branch(u, v, w, 1e-14)
    b = C.pair_branch(u, v, w, 1e-14)
    for x, y in zip(a[:3], b[:3]):
        assert np.allclose(x, y, rtol=1e-13, atol=1e-16)
    assert a[3] == pytest.approx(b[3], abs=1e-16)


@needs_ext
def test_stratified_and_rounds_equivalence(rng):
    u, v, w = _cloud(rng, 500)
    perm = rng.permutation(500).astype(np.intp)
    cum = np.cumsum(w[perm])
    off = rng.random(64)
    assert np.array_equal(P.stratified_pick(cum, off), C.stratified_pick(cum, off))
    os_, op_ = rng.random((16, 16)), rng.random((16, 16))
    a = P.compressed_rounds(u, v, cum, perm, os_, op_, 1e-14)
    b = C.compressed_rounds(u, v, cum, perm, os_, op_, 1e-14)
    assert np.allclose(a[0], b[0], atol=1e-14) and np.allclose(a[1], b[1], atol=1e-14)
    assert a[2] == pytest.approx(b[2], abs=1e-15)


@needs_ext
def test_branch_pairs_equivalence(rng):
    u, v, _ = _cloud(rng, 1000)
    a = P.branch_pairs(u[4:500], v[4:500], u[504:], v[504:])
    b = C.branch_pairs(u[4:500], v[4:500], u[504:], v[504:])
    assert np.allclose(a[0], b[0], atol=1e-15) and np.allclose(a[1], b[1], atol=1e-15)


@needs_ext
@pytest.mark.parametrize("L", [1, 2, 3, 8, 257])
def test_coarse_convolve_equivalence(rng, L):
    p = rng.random(L)
    a = rng.uniform(-1, 1, L) * p
    b = rng.uniform(-1, 1, L) * p
    p[: L // 4] = a[: L // 4] = b[: L // 4] = 0.0
    x = P.coarse_convolve(p, a, b)
    y = C.coarse_convolve(p, a, b)
    for s, t in zip(x, y):
        # signed inputs cancel, so compare on the scale of the array
        assert np.max(np.abs(s - t)) <= 1e-14 * max(1.0, np.abs(s).max())


def test_engines_agree_across_backends(monkeypatch):
    p = ModelParams(0.35, "deterministic", 2)

    def run():
        e = initial_ensemble(p)
        for s in range(3):
            e = step_compressed(e, 30, p, step_rng(5, s))
        return e, coarse_evolve(p, 8)

    ref_e, ref_tr = run()
    monkeypatch.setattr(_backend, "kernels", _backend._compose(False))
    e, tr = run()
    assert np.allclose(e.u, ref_e.u, atol=1e-13) and np.allclose(e.w, ref_e.w, atol=1e-13)
    assert np.allclose(tr.p, ref_tr.p, atol=1e-15)
