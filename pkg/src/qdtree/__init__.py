"""Recursion-map simulator for Quantum Darwinism on expanding tree circuits."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .bloch import (BlochPoint, ModelParams, WeightedEnsemble, branch_map,
                    branch_weight, initial_ensemble, rotate)
from .clifford import CliffordState, clifford_flow, clifford_step
from .coarse import (SpinResolvedTriple, TauResolvedArray, coarse_initial,
                     coarse_purity, coarse_step, fixed_point_moments,
                     moment_predictions, small_theta_deficits, tau_refined_step)
from .exact import merge_duplicates, step_exact
from .observables import (conditional_entropy, encoding_eigenvalue, estimate_jd,
                          near_critical_purity_prediction, purity,
                          qd_stability_eigenvalue, redundancy_prediction)
from .sampler import compress, step_biased, step_compressed

__all__ = [
    "BACKEND", "BlochPoint", "ModelParams", "WeightedEnsemble", "branch_map",
    "branch_weight", "initial_ensemble", "rotate", "CliffordState", "clifford_flow",
    "clifford_step", "SpinResolvedTriple", "TauResolvedArray", "coarse_initial",
    "coarse_purity", "coarse_step", "fixed_point_moments", "moment_predictions",
    "small_theta_deficits", "tau_refined_step", "merge_duplicates", "step_exact",
    "conditional_entropy", "encoding_eigenvalue", "estimate_jd",
    "near_critical_purity_prediction", "purity", "qd_stability_eigenvalue",
    "redundancy_prediction", "compress", "step_biased", "step_compressed",
]
