"""Full data augmentation reproduces invariant KRR exactly.

Augmenting every sample over Cyc_d and fitting the plain kernel with ridge
|G| * lambda / d gives the same predictor as the group-averaged kernel with
ridge lambda / d.  Using the unscaled ridge breaks the match.

    python3 demos/augmentation_vs_invariance.py
"""
import numpy as np

from invkernels import augmentation, kernels, regression
from invkernels.dataio import TargetSpec
from invkernels.geometry import DomainSpec, GroupSpec, sample_domain

d, n, lam = 8, 12, 0.1
dom, group = DomainSpec.sphere(d), GroupSpec.cyc1d(d)
X, Xt = sample_domain(dom, n, 0), sample_domain(dom, 50, 1)
y = TargetSpec("quad", d)(X)

rep = augmentation.check_prop2_equivalence(X, y, kernels.NTK(3), group, lam, Xt)
print(f"matched ridge   lambda_aug={rep.lam_aug:.3f}  max gap {rep.max_gap:.2e}")

inv = regression.krr(kernels.KernelSpec(kernels.NTK(3), group), X, y, regression.RidgeConfig(lam, 1))
wrong = augmentation.fit_augmented_krr(X, y, kernels.NTK(3), group, lam / d)
gap = np.abs(regression.predict(wrong, Xt) - regression.predict(inv, Xt)).max()
print(f"unscaled ridge  lambda_aug={lam / d:.4f}  max gap {gap:.2e}")
