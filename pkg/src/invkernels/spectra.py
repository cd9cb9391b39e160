"""Degeneracy and concentration diagnostics.

``D(A_d; k)`` is the dimension of the invariant degree-``k`` subspace.  By
the convolution representation of the invariant projector,

    D(A_d; k) = B(A_d; k) * E_theta[ mean_g Q_k(<theta, g . theta>) ],

which gives an unbiased Monte-Carlo estimator.  On the hypercube with cyclic
shifts the exact value is a necklace count (Burnside's lemma).
"""
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry
from ._rng import as_generator
from .geometry import DomainSpec, GroupSpec
from .orthopoly import dim_harmonics, gegenbauer_values


def _self_products(group, theta):
    # <theta_i, g . theta_i> for every point and group element
    n = theta.shape[0]
    out = np.empty((n, group.size))
    step = max(1, int(2e6 // max(1, group.size * group.d)))
    for lo in range(0, n, step):
        T = theta[lo:lo + step]
        if group.kind == "shift_band":
            out[lo:lo + step] = np.stack([geometry.group_inner_products(group, t, t) for t in T])
            continue
        G = geometry.orbit(group, T)  # (|G|, b, d)
        out[lo:lo + step] = np.einsum("bd,gbd->bg", T, G)
    return out


def projector_diagonal(domain: DomainSpec, group: GroupSpec, k, theta):
    """``mean_g Q_k(<theta, g.theta>)`` for each row of ``theta``."""
    group.check_domain(domain)
    P = _self_products(group, np.atleast_2d(theta))
    return gegenbauer_values(domain, k, P)[k].mean(-1)


def estimate_degeneracy(domain: DomainSpec, group: GroupSpec, k, n_mc=100_000, seed=0, batch=20_000):
    """Monte-Carlo ``D(A_d; k)`` with its standard error."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    B = dim_harmonics(domain, k)
    rng = as_generator(seed, "degeneracy")
    vals = []
    for lo in range(0, n_mc, batch):
        theta = geometry.sample_domain(domain, min(batch, n_mc - lo), rng)
        vals.append(B * projector_diagonal(domain, group, k, theta))
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0


def _totient(n):
    out, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            out -= out // p
        p += 1
    if m > 1:
        out -= out // m
    return out


def exact_cyclic_degeneracy_hypercube(d, k):
    """Number of rotation orbits of ``k``-subsets of ``Z_d``.

    ``(1/d) sum_{c | gcd(d, k)} phi(c) C(d/c, k/c)``; ``k = 0`` gives 1.
    """
    if not 0 <= k <= d:
        raise ValueError("need 0 <= k <= d")
    if k == 0:
        return 1
    g = math.gcd(d, k)
    total = sum(_totient(c) * math.comb(d // c, k // c) for c in range(1, g + 1) if g % c == 0)
    assert total % d == 0
    return total // d


def upsilon_values(domain, group, k, n_points, seed=0, D=None):
    """``Upsilon_k(theta) = (B / D) mean_g Q_k(<theta, g.theta>)`` on sampled points."""
    B = dim_harmonics(domain, k)
    if D is None:
        if group.kind == "trivial":
            D = B
        elif group.kind == "cyc1d" and domain.kind == "hypercube":
            D = exact_cyclic_degeneracy_hypercube(domain.d, k)
        else:
            D = estimate_degeneracy(domain, group, k, seed=seed)[0]
    if D == 0:
        raise ValueError("degeneracy D is zero")
    theta = geometry.sample_domain(domain, n_points, as_generator(seed, "upsilon"))
    return B / D * projector_diagonal(domain, group, k, theta)


def upsilon_statistics(domain, group, k, n_points=1000, seed=0, D=None):
    """Sample mean, its standard error, and ``max_i |Upsilon_k(theta_i) - 1|``."""
    u = upsilon_values(domain, group, k, n_points, seed, D)
    se = float(u.std(ddof=1) / np.sqrt(len(u))) if len(u) > 1 else 0.0
    return float(u.mean()), se, float(np.abs(u - 1).max())


def f_k_mean(domain, group, k, n_mc=10_000, seed=0, measure=None):
    """Monte-Carlo ``E[F_k(z)]`` with ``F_k(z) = mean_g (<z, g.z> / d)^k``.

    ``measure`` is ``"gaussian"`` or the domain kind (default).  Returns
    ``(mean, stderr)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    measure = measure or domain.kind
    rng = as_generator(seed, "f_k")
    if measure == "gaussian":
        Z = rng.standard_normal((n_mc, domain.d))
    else:
        Z = geometry.sample_domain(DomainSpec(measure, domain.d), n_mc, rng)
    F = ((_self_products(group, Z) / domain.d) ** k).mean(-1)
    return float(F.mean()), float(F.std(ddof=1) / np.sqrt(n_mc))


@dataclass
class SpectrumReport:
    domain: DomainSpec
    group: GroupSpec
    degrees: list
    B: list
    D_estimate: list
    D_stderr: list
    D_exact: list = field(default_factory=list)
    upsilon_sup_dev: list = field(default_factory=list)
    upsilon_mean: list = field(default_factory=list)
    upsilon_stderr: list = field(default_factory=list)
    F_k_mean: list = field(default_factory=list)

    def to_dict(self):
        return {
            "d": self.domain.d,
            "domain": self.domain.kind,
            "group": self.group.to_dict(),
            "k": self.degrees,
            "B_k": self.B,
            "D_estimate": self.D_estimate,
            "D_stderr": self.D_stderr,
            "D_exact": self.D_exact,
            "upsilon_mean": self.upsilon_mean,
            "upsilon_stderr": self.upsilon_stderr,
            "upsilon_sup_dev": self.upsilon_sup_dev,
            "F_k_mean": self.F_k_mean,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def spectrum_report(domain, group, degrees, n_mc=100_000, n_points=1000, seed=0, f_k_samples=10_000):
    exact_ok = domain.kind == "hypercube" and group.kind in ("cyc1d", "trivial")
    rep = SpectrumReport(domain, group, list(degrees), [], [], [])
    for k in degrees:
        B = dim_harmonics(domain, k)
        est, se = estimate_degeneracy(domain, group, k, n_mc, seed)
        rep.B.append(B)
        rep.D_estimate.append(est)
        rep.D_stderr.append(se)
        exact: Optional[int] = None
        if exact_ok:
            exact = B if group.kind == "trivial" else exact_cyclic_degeneracy_hypercube(domain.d, k)
        rep.D_exact.append(exact)
        if k >= 1:
            m, use, sup = upsilon_statistics(domain, group, k, n_points, seed, D=exact if exact else est)
            rep.upsilon_mean.append(m)
            rep.upsilon_stderr.append(use)
            rep.upsilon_sup_dev.append(sup)
            rep.F_k_mean.append(f_k_mean(domain, group, k, f_k_samples, seed)[0])
        else:
            rep.upsilon_mean.append(1.0)
            rep.upsilon_stderr.append(0.0)
            rep.upsilon_sup_dev.append(0.0)
            rep.F_k_mean.append(1.0)
    return rep
