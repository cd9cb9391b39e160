"""Output symmetrization and full data augmentation.

Ridge convention for augmentation.  Replicating each sample over a finite
group ``G`` and fitting the non-averaged kernel ``h`` with ridge ``mu``
gives, by symmetry of the augmented system, dual weights that are constant
on orbits, ``c_(i,g) = c_i`` with ``(|G| H_inv + mu I) c = y``.  The
predictor is ``|G| H_inv(., X) c = H_inv(., X) (H_inv + mu/|G| I)^{-1} y``,
so augmented KRR with ``mu = |G| * r`` equals invariant KRR with ridge ``r``.
Here ``r`` is the effective invariant ridge ``lambda / d^alpha``.
"""
import json
from dataclasses import dataclass

import numpy as np

from . import geometry
from . import kernels as _kernels
from . import regression as _regression
from ._rng import as_generator
from .geometry import GroupSpec
from .regression import RidgeConfig

MAX_AUGMENTED_ROWS = 8000


@dataclass(frozen=True)
class SymmetrizedPredictor:
    """``(S f)(x) = mean_g f(g . x)`` for a callable ``f`` on point arrays."""

    inner: object
    group: GroupSpec

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        vals = [np.asarray(self.inner(geometry.apply_group(g, self.group, X)), dtype=float)
                for g in self.group.elements()]
        return np.mean(vals, axis=0)


def symmetrize(fit_or_function, group: GroupSpec) -> SymmetrizedPredictor:
    if isinstance(fit_or_function, _regression.RidgeFit):
        fit = fit_or_function
        return SymmetrizedPredictor(lambda X: _regression.predict(fit, X), group)
    return SymmetrizedPredictor(fit_or_function, group)


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    sym_risk: float
    risk: float
    upper: float
    eps: float
    proj_norm: float
    sym_risk_se: float
    risk_se: float
    eps_se: float
    holds: bool

    def to_dict(self):
        return self.__dict__.copy()


def check_prop1_sandwich(target, predictor, group, ell, domain, n_mc=2000, seed=0, tail_norm=None):
    """Check ``|P f|^2 - 2 eps |P f| <= |f - S f^|^2 <= |f - f^|^2 <= |P f|^2 + 2 eps |P f| + eps^2``.

    ``P = P_{>ell}``.  ``target`` must be a pure-degree unit-norm polynomial
    (``TargetSpec``) so ``|P_{>ell} f|`` is 1 when its degree exceeds ``ell``
    and 0 otherwise; ``eps = |f^ - P_{<=ell} f|`` is estimated on the same
    Monte-Carlo sample.  Each inequality is accepted within 3 standard errors.
    """
    if tail_norm is None:
        tail_norm = 1.0 if target.degree > ell else 0.0
    X = geometry.sample_domain(domain, n_mc, as_generator(seed, "sandwich"))
    f = np.asarray(target(X))
    fhat = np.asarray(predictor(X))
    sfhat = symmetrize(predictor, group)(X)
    low_part = f if target.degree <= ell else np.zeros_like(f)
    e_sym = (f - sfhat) ** 2
    e_raw = (f - fhat) ** 2
    e_eps = (fhat - low_part) ** 2
    se = lambda v: float(v.std(ddof=1) / np.sqrt(len(v)))
    eps = float(np.sqrt(e_eps.mean()))
    # delta method for the square root
    eps_se = se(e_eps) / (2 * eps) if eps > 0 else 0.0
    lower = tail_norm**2 - 2 * eps * tail_norm
    upper = tail_norm**2 + 2 * eps * tail_norm + eps**2
    d_sym = e_sym - e_raw
    # absolute floor so round-off in exact cases is not read as a violation
    tiny = 1e-12 * max(1.0, float(np.mean(f * f)))
    ok = (
        lower <= e_sym.mean() + 3 * (se(e_sym) + 2 * tail_norm * eps_se) + tiny
        and d_sym.mean() <= 3 * se(d_sym) + tiny
        and e_raw.mean() <= upper + 3 * (se(e_raw) + (2 * tail_norm + 2 * eps) * eps_se) + tiny
    )
    return SandwichReport(lower, float(e_sym.mean()), float(e_raw.mean()), upper, eps, tail_norm,
                          se(e_sym), se(e_raw), eps_se, bool(ok))


def augment(X, y, group: GroupSpec):
    """Replace each ``(x_i, y_i)`` by ``{(g . x_i, y_i) : g in G}`` (orbit-major per sample)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = geometry.orbit(group, X)  # (|G|, n, d)
    Xa = np.transpose(G, (1, 0, 2)).reshape(-1, X.shape[1])
    ya = np.repeat(np.asarray(y, dtype=float), group.size)
    return Xa, ya


def fit_augmented_krr(X, y, base, group: GroupSpec, lam, alpha=None, normalization="inner_over_d"):
    """Standard KRR on the fully augmented data set.

    ``lam`` is the invariant-KRR ridge level; the augmented problem uses the
    non-averaged kernel with ridge ``|G| * lam / d^alpha`` (``alpha``
    defaults to the group's).
    """
    if not group.is_discrete:
        raise ValueError("full augmentation needs a finite group")
    n = np.atleast_2d(X).shape[0]
    rows = n * group.size
    if rows > MAX_AUGMENTED_ROWS:
        raise MemoryError(f"augmented system has {rows} rows (> {MAX_AUGMENTED_ROWS}); "
                          "use invariant KRR with the group-averaged kernel instead")
    alpha = group.alpha if alpha is None else alpha
    Xa, ya = augment(X, y, group)
    spec = _kernels.KernelSpec(base, GroupSpec.trivial(group.d), normalization)
    lam_aug = group.size * lam / group.d**alpha
    return _regression.fit_krr(_kernels.gram(spec, Xa), ya, RidgeConfig(lam_aug, 0), X_train=Xa)


@dataclass(frozen=True)
class EquivalenceReport:
    max_gap: float
    max_abs_y: float
    lam: float
    lam_aug: float
    n: int
    d: int
    group: dict

    @property
    def relative_gap(self):
        return self.max_gap / self.max_abs_y if self.max_abs_y else self.max_gap

    def to_dict(self):
        return {"max_gap": self.max_gap, "lambda": self.lam, "lambda_aug": self.lam_aug,
                "n": self.n, "d": self.d, "group": self.group, "max_abs_y": self.max_abs_y}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def check_prop2_equivalence(X, y, base, group: GroupSpec, lam, X_test, alpha=None):
    """Max ``|augmented KRR - invariant KRR|`` over ``X_test``."""
    if lam <= 0:
        raise ValueError("equivalence check needs a positive ridge")
    alpha = group.alpha if alpha is None else alpha
    X = np.atleast_2d(np.asarray(X, dtype=float))
    aug = fit_augmented_krr(X, y, base, group, lam, alpha)
    inv = _regression.krr(_kernels.KernelSpec(base, group), X, y, RidgeConfig(lam, alpha))
    gap = np.abs(_regression.predict(aug, X_test) - _regression.predict(inv, X_test))
    return EquivalenceReport(float(gap.max()), float(np.abs(y).max()), float(lam),
                             float(group.size * lam / group.d**alpha), X.shape[0], group.d, group.to_dict())
