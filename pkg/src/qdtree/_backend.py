"""Kernel backend selection.

The compiled extension is used when importable; QDTREE_BACKEND=python forces
the numpy fallback.  numpy's vectorized convolution beats the compensated
compiled convolution on the coarse arrays, so the compiled set keeps it;
QDTREE_COARSE=compensated selects the compiled one.
"""
import os
from types import SimpleNamespace

from . import _pykernels

python_kernels = _pykernels
KERNEL_NAMES = ("pair_branch", "stratified_pick", "compressed_rounds", "branch_pairs",
                "coarse_convolve")

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None


def _compose(use_compiled: bool) -> SimpleNamespace:
    src = {n: getattr(python_kernels, n) for n in KERNEL_NAMES}
    if use_compiled:
        for n in KERNEL_NAMES:
            if n != "coarse_convolve":
                src[n] = getattr(compiled_kernels, n)
        if os.environ.get("QDTREE_COARSE", "").lower() == "compensated":
            src["coarse_convolve"] = compiled_kernels.coarse_convolve
    return SimpleNamespace(**src)


if compiled_kernels is not None and os.environ.get("QDTREE_BACKEND", "").lower() != "python":
    BACKEND = "cython"
else:
    BACKEND = "python"
kernels = _compose(BACKEND == "cython")


def get(name):
    """Look up a kernel at call time so tests can swap implementations."""
    return getattr(kernels, name)
