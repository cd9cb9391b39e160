"""Standard and invariant random-features maps.

Weight scaling: ``sqrt(d) * w_i`` is uniform on the
sphere ``S^{d-1}(sqrt d)`` (or on the hypercube), so ``w_i`` has unit norm and
``<w_i, x>`` is O(1) for ``x`` on the domain.  No extra ``1/sqrt(d)`` enters
the activation.  This is the same as writing ``sigma(<theta, x> / sqrt d)``
with ``theta = sqrt(d) w`` on ``S^{d-1}(sqrt d)``, the convention used by
:mod:`invkernels.orthopoly` for the coefficients ``xi_{d,k}``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._rng import as_generator
from .geometry import DomainSpec, GroupSpec


def relu(t):
    return np.maximum(t, 0.0)


@dataclass(frozen=True)
class FeatureBank:
    domain: DomainSpec
    W: np.ndarray = field(repr=False)
    sigma: object
    group: GroupSpec
    seed: int = 0

    @property
    def N(self):
        return self.W.shape[0]


def sample_features(domain: DomainSpec, N, sigma, group: GroupSpec, seed=0) -> FeatureBank:
    """Draw ``N`` first-layer weights, independent of any data."""
    if N < 1:
        raise ValueError("N must be at least 1")
    group.check_domain(domain)
    theta = geometry.sample_domain(domain, N, as_generator(seed, "features"))
    return FeatureBank(domain, theta / np.sqrt(domain.d), sigma, group, seed if isinstance(seed, int) else 0)


@dataclass(frozen=True)
class DesignMatrix:
    Z: np.ndarray = field(repr=False)
    bank: FeatureBank


def design(bank: FeatureBank, X, block=None) -> DesignMatrix:
    """``Z[i, j] = mean_g sigma(<w_j, g . x_i>)``, built in column blocks."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != bank.domain.d:
        raise ValueError(f"points have dimension {X.shape[1]}, features expect {bank.domain.d}")
    n, N = X.shape[0], bank.N
    m = bank.group.size
    if block is None:
        block = max(1, int(4e6 // max(1, n * m)))
    Z = np.empty((n, N))
    for lo in range(0, N, block):
        hi = min(lo + block, N)
        # <w, g.x> for all g: pairwise products with the roles (w, x)
        P = geometry.pairwise_group_inner_products(bank.group, bank.W[lo:hi], X)
        Z[:, lo:hi] = geometry.haar_average(bank.group, bank.sigma(P)).T
    return DesignMatrix(Z, bank)
