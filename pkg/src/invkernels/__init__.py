"""Group-invariant kernel and random-features regression."""
__version__ = "0.1.0"

from ._errors import NumericalError
from .augmentation import check_prop1_sandwich, check_prop2_equivalence, fit_augmented_krr, symmetrize
from .dataio import TargetSpec, eval_target, load_idx
from .features import design, sample_features
from .geometry import DomainSpec, GroupSpec, apply_group, group_inner_products, haar_average, sample_domain
from .kernels import NTK, KernelSpec, Poly, Spectral, cross_kernel, gram, kernel_value, ntk_recursion
from .orthopoly import activation_spectrum, build_gegenbauer, hermite_coeffs
from .regression import RidgeConfig, estimate_risk, fit_krr, fit_rfrr, krr, predict
from .spectra import estimate_degeneracy, exact_cyclic_degeneracy_hypercube, upsilon_statistics

__all__ = [
    "NumericalError", "DomainSpec", "GroupSpec", "KernelSpec", "NTK", "Poly", "Spectral", "RidgeConfig",
    "TargetSpec", "activation_spectrum", "apply_group", "build_gegenbauer", "check_prop1_sandwich",
    "check_prop2_equivalence", "cross_kernel", "design", "estimate_degeneracy", "estimate_risk",
    "eval_target", "exact_cyclic_degeneracy_hypercube", "fit_augmented_krr", "fit_krr", "fit_rfrr", "gram",
    "group_inner_products", "haar_average", "hermite_coeffs", "kernel_value", "krr", "load_idx",
    "ntk_recursion", "predict", "sample_domain", "sample_features", "symmetrize", "upsilon_statistics",
]
