"""Inner-product kernels, their group averages, and Gram assembly.

A :class:`KernelSpec` pairs a base function ``h`` on ``[-1, 1]`` with a group.
Its value is the Haar average

    H(x, y) = mean_g h(u(x, g . y)),

where ``u = <x, g.y> / d`` (``inner_over_d``) or the cosine similarity
(``cosine``).  With the trivial group this is the plain inner-product kernel.
"""
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._errors import NumericalError
from ._rng import as_generator
from .geometry import GroupSpec
from .orthopoly import ActivationSpectrum

_EPS = 1e-15


def _arc0(u):
    # h_0(u) = (pi - arccos u) / pi
    return (np.pi - np.arccos(u)) / np.pi


def _arc1(u):
    # h_1(u) = u h_0(u) + sqrt(1 - u^2) / pi
    return u * _arc0(u) + np.sqrt(np.maximum(1.0 - u * u, 0.0)) / np.pi


def _clamp(u):
    u = np.asarray(u, dtype=float)
    c = np.clip(u, -1.0 + _EPS, 1.0 - _EPS)
    # keep exact endpoints exact; only interior round-off is clamped
    return np.where(u >= 1.0, 1.0, np.where(u <= -1.0, -1.0, c))


def ntk_recursion(L, u):
    """NTK of a depth-``L`` fully connected ReLU network at correlation ``u``.

    ``h^1 = h_NTK^1 = u``;  for ``k >= 2``:
    ``h^k = h_1(h^{k-1})`` and ``h_NTK^k = h_NTK^{k-1} h_0(h^{k-1}) + h^k``.
    """
    if L < 1:
        raise ValueError("NTK depth must be at least 1")
    u = _clamp(u)
    h = u
    ntk = u
    for _ in range(2, L + 1):
        h_prev = h
        h = _clamp(_arc1(h_prev))
        ntk = ntk * _arc0(h_prev) + h
    return ntk


@dataclass(frozen=True)
class NTK:
    depth: int

    def __call__(self, u):
        return ntk_recursion(self.depth, u)

    @property
    def degree(self):
        return None

    def to_dict(self):
        return {"kind": "ntk", "depth": self.depth}


@dataclass(frozen=True)
class Poly:
    """``h(u) = sum_k coeffs[k] u^k``."""

    coeffs: tuple

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(u, np.asarray(self.coeffs, dtype=float))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def to_dict(self):
        return {"kind": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Spectral:
    """Feature kernel of an activation, ``h(u) = sum_k xi_k^2 B_k Q_k(d u)``."""

    spectrum: ActivationSpectrum

    def __call__(self, u):
        return self.spectrum.kernel(self.spectrum.domain.d * np.asarray(u, dtype=float))

    @property
    def degree(self):
        return len(self.spectrum.xi) - 1

    def to_dict(self):
        return {"kind": "spectral", **self.spectrum.to_dict()}


def base_from_dict(obj):
    if obj["kind"] == "ntk":
        return NTK(int(obj["depth"]))
    if obj["kind"] == "poly":
        return Poly(tuple(obj["coeffs"]))
    raise ValueError(f"cannot rebuild base kernel {obj['kind']!r} from a dict")


@dataclass(frozen=True)
class KernelSpec:
    base: object
    group: GroupSpec
    normalization: str = "inner_over_d"

    def __post_init__(self):
        if self.normalization not in ("inner_over_d", "cosine"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def d(self):
        return self.group.d

    def h(self, u):
        return self.base(u)

    def with_group(self, group):
        return KernelSpec(self.base, group, self.normalization)

    def to_dict(self):
        return {"base": self.base.to_dict(), "group": self.group.to_dict(), "normalization": self.normalization}

    @classmethod
    def from_dict(cls, obj):
        return cls(base_from_dict(obj["base"]), GroupSpec.from_dict(obj["group"]), obj.get("normalization", "inner_over_d"))


def _normalize(spec, P, X, Y):
    if spec.normalization == "inner_over_d":
        return P / spec.d
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    if np.any(nx == 0) or np.any(ny == 0):
        raise ValueError("cosine normalization is undefined for a zero vector")
    return P / (nx[:, None, None] * ny[None, :, None])


def cross_kernel(spec: KernelSpec, X, Y, block=None):
    """Matrix ``K[a, b] = H(X[a], Y[b])``, assembled in row blocks."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if block is None:
        # bound the (block, m, |G|) scratch array to ~32 MB
        block = max(1, int(4e6 // max(1, Y.shape[0] * spec.group.size)))
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], block):
        _fill_block(spec, X, Y, out, start, min(start + block, X.shape[0]))
    return out


def _fill_block(spec, X, Y, out, lo, hi):
    Xb = X[lo:hi]
    P = geometry.pairwise_group_inner_products(spec.group, Xb, Y)
    U = _normalize(spec, P, Xb, Y)
    out[lo:hi] = geometry.haar_average(spec.group, spec.h(U))


def kernel_value(spec: KernelSpec, x, y):
    return float(cross_kernel(spec, np.asarray(x)[None], np.asarray(y)[None])[0, 0])


def fingerprint(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=float))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class GramMatrix:
    K: np.ndarray = field(repr=False)
    kernel: KernelSpec
    fingerprint: str


def gram(spec: KernelSpec, X, threads=1, block=None) -> GramMatrix:
    """Symmetric Gram matrix of ``spec`` on the rows of ``X``.

    Row blocks are independent, so ``threads > 1`` fills them concurrently;
    the result does not depend on the schedule.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 1:
        raise ValueError("empty point set")
    if block is None:
        block = max(1, int(4e6 // max(1, n * spec.group.size)))
    K = np.empty((n, n))
    starts = range(0, n, block)

    def upper(s):
        # rows s..e against columns s..n only; the lower triangle is mirrored
        e = min(s + block, n)
        P = geometry.pairwise_group_inner_products(spec.group, X[s:e], X[s:])
        r = np.arange(e - s)
        # identity-element self products: sorted summation is order-free, so
        # permuted copies of a point get bit-identical diagonals (h is steep at u=1)
        P[r, r, 0] = np.sort(X[s:e] ** 2, axis=1).sum(1)
        U = _normalize(spec, P, X[s:e], X[s:])
        if spec.normalization == "cosine":
            U[r, r, 0] = 1.0
        K[s:e, s:] = geometry.haar_average(spec.group, spec.h(U))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(upper, starts))
    else:
        for s in starts:
            upper(s)
    iu = np.triu_indices(n, 1)
    K[iu[1], iu[0]] = K[iu]
    bad = np.argwhere(~np.isfinite(K))
    if bad.size:
        i, j = bad[0]
        raise NumericalError(f"non-finite kernel entry at pair ({i}, {j})")
    return GramMatrix(K, spec, fingerprint(X))


# empirical convolutional NTK ------------------------------------------------

def empirical_cntk(width, group: GroupSpec, x, y, seed=0, chunk=4096):
    """Finite-width tangent kernel of the invariant two-layer ReLU network.

    The network is ``f(x) = sum_i a_i mean_g sigma(<theta_i, g.x> / sqrt d)``
    with ``a_i ~ N(0, 1)``, ``theta_i`` uniform on ``S^{d-1}(sqrt d)`` and
    ``sigma(t) = sqrt(2) max(t, 0)``.  Returns
    ``(<grad_a f(x), grad_a f(y)> + <grad_theta f(x), grad_theta f(y)>) / width``,
    which converges to the group-averaged depth-2 ``ntk_recursion``.
    """
    if width < 1:
        raise ValueError("width must be positive")
    if not group.is_discrete:
        raise ValueError("empirical CNTK needs a discrete group")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = group.d
    rng = as_generator(seed, "empirical_cntk")
    Gx = geometry.orbit(group, x)  # (|G|, d)
    Gy = geometry.orbit(group, y)
    M = Gx @ Gy.T  # <g.x, g'.y>
    m = group.size
    total_a = 0.0
    total_w = 0.0
    for start in range(0, width, chunk):
        n = min(chunk, width - start)
        W = rng.standard_normal((n, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)  # w = theta / sqrt(d), unit norm
        a = rng.standard_normal(n)
        Px, Py = W @ Gx.T, W @ Gy.T
        sx = np.sqrt(2) * np.maximum(Px, 0).mean(1)
        sy = np.sqrt(2) * np.maximum(Py, 0).mean(1)
        total_a += sx @ sy
        Dx = np.sqrt(2) * (Px > 0)
        Dy = np.sqrt(2) * (Py > 0)
        # grad_theta = a mean_g sigma'(.) g.x / sqrt(d)
        total_w += np.sum(a**2 * np.einsum("ng,gh,nh->n", Dx, M, Dy)) / (m * m * d)
    return (total_a + total_w) / width


def cntk_limit(group: GroupSpec, x, y):
    """Infinite-width limit of :func:`empirical_cntk`."""
    return kernel_value(KernelSpec(NTK(2), group), x, y)
