"""Dimension of the invariant degree-k subspace on the hypercube.

Compares the Monte-Carlo estimate with the exact necklace count and with
the full dimension C(d, k); the ratio d * D / C(d, k) stays near 1.

    python3 demos/degeneracy.py
"""
import math

from invkernels import spectra
from invkernels.geometry import DomainSpec, GroupSpec

for d in (12, 16, 20):
    for k in (2, 3):
        est, se = spectra.estimate_degeneracy(DomainSpec.hypercube(d), GroupSpec.cyc1d(d), k, n_mc=50_000)
        exact = spectra.exact_cyclic_degeneracy_hypercube(d, k)
        print(f"d={d:2d} k={k}  D_hat={est:8.3f} +- {se:.3f}  exact={exact:4d}  "
              f"C(d,k)={math.comb(d, k):5d}  d*D/C={exact * d / math.comb(d, k):.3f}")
