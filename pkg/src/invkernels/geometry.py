"""Domains, sampling and orthogonal group actions.

Two domains are supported: the sphere of radius ``sqrt(d)`` and the hypercube
``{-1, +1}^d``.  Groups act on points by orthogonal maps:

* ``trivial``     the identity only,
* ``cyc1d``       cyclic coordinate shifts, ``g_i . x = (x_{i+1}, ..., x_i)``,
* ``cyc2d``       cyclic shifts of a ``d1 x d2`` grid (row-major vectorised),
* ``shift_band``  translations of band-limited signals, acting on Fourier
                  coefficients by 2x2 rotations; Haar averages over ``u`` in
                  ``[0, 1)`` are taken on ``M`` equispaced nodes.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import as_generator

FFT_THRESHOLD = 64

SPHERE = "sphere"
HYPERCUBE = "hypercube"


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in (SPHERE, HYPERCUBE):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == SPHERE and self.d < 3:
            raise ValueError("sphere domain needs d >= 3")
        if self.d < 1:
            raise ValueError("dimension must be positive")

    @classmethod
    def sphere(cls, d):
        return cls(SPHERE, int(d))

    @classmethod
    def hypercube(cls, d):
        return cls(HYPERCUBE, int(d))

    def contains(self, X, tol=1e-10):
        X = np.atleast_2d(X)
        if X.shape[1] != self.d:
            return False
        if self.kind == SPHERE:
            return bool(np.all(np.abs((X**2).sum(1) - self.d) <= tol * self.d))
        return bool(np.all(np.abs(X) == 1.0))


@dataclass(frozen=True)
class GroupSpec:
    """A finite (or quadrature-discretised) group acting on ``R^d``.

    ``alpha`` is the degeneracy exponent used to scale ridge penalties:
    0 for the trivial group, 1 for the three shipped non-trivial groups.
    """

    kind: str
    d: int
    d1: Optional[int] = None
    d2: Optional[int] = None
    M: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("trivial", "cyc1d", "cyc2d", "shift_band"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "cyc2d" and (self.d1 is None or self.d2 is None or self.d1 * self.d2 != self.d):
            raise ValueError("cyc2d requires d == d1 * d2")
        if self.kind == "shift_band":
            if self.d % 2 == 0:
                raise ValueError("shift_band requires odd d")
            if self.M is None:
                object.__setattr__(self, "M", 4 * self.d)
            if self.M < 1:
                raise ValueError("shift_band needs M >= 1")

    # constructors -------------------------------------------------------
    @classmethod
    def trivial(cls, d):
        return cls("trivial", int(d))

    @classmethod
    def cyc1d(cls, d):
        return cls("cyc1d", int(d))

    @classmethod
    def cyc2d(cls, d1, d2):
        return cls("cyc2d", int(d1) * int(d2), int(d1), int(d2))

    @classmethod
    def shift_band(cls, d, M=None, degree=None):
        """Band-limited shift group.

        With a known polynomial kernel degree ``q`` the default node count
        ``q * (d // 2) + 1`` integrates ``u -> h(<x, g_u y>)`` exactly.
        """
        if M is None:
            M = degree * (d // 2) + 1 if degree is not None else 4 * d
        return cls("shift_band", int(d), M=int(M))

    # properties ---------------------------------------------------------
    @property
    def alpha(self):
        return 0 if self.kind == "trivial" else 1

    @property
    def size(self):
        """Number of elements (or quadrature nodes for ``shift_band``)."""
        if self.kind == "trivial":
            return 1
        if self.kind == "shift_band":
            return self.M
        return self.d

    @property
    def is_discrete(self):
        return self.kind != "shift_band"

    def check_domain(self, domain: DomainSpec):
        if domain.d != self.d:
            raise ValueError(f"group acts on R^{self.d}, domain is R^{domain.d}")
        if domain.kind == HYPERCUBE and self.kind == "shift_band":
            raise ValueError("shift_band does not preserve the hypercube")

    def elements(self):
        """Group indices: ints, ``(i, j)`` pairs, or ``u`` nodes."""
        if self.kind == "trivial":
            return [0]
        if self.kind == "cyc1d":
            return list(range(self.d))
        if self.kind == "cyc2d":
            return [(i, j) for i in range(self.d1) for j in range(self.d2)]
        return list(np.arange(self.M) / self.M)

    def to_dict(self):
        out = {"kind": self.kind, "d": self.d}
        if self.kind == "cyc2d":
            out.update(d1=self.d1, d2=self.d2)
        if self.kind == "shift_band":
            out["M"] = self.M
        return out

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["kind"], int(obj["d"]), obj.get("d1"), obj.get("d2"), obj.get("M"))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    noise_sd: float = 0.0
    seed: int = 0


def sample_domain(domain: DomainSpec, n, seed=0):
    """Draw ``n`` i.i.d. uniform points from ``domain``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = as_generator(seed, "sample_domain")
    if domain.kind == SPHERE:
        Z = rng.standard_normal((n, domain.d))
        return Z * (np.sqrt(domain.d) / np.linalg.norm(Z, axis=1, keepdims=True))
    return rng.choice(np.array([-1.0, 1.0]), size=(n, domain.d))


def make_dataset(domain, target, n, noise_sd=0.0, seed=0):
    """Sample inputs and noisy labels ``y = f(x) + eps``."""
    X = sample_domain(domain, n, as_generator(seed, "dataset.x"))
    y = np.asarray(target(X), dtype=float)
    if noise_sd > 0:
        y = y + noise_sd * as_generator(seed, "dataset.noise").standard_normal(n)
    return Dataset(X, y, noise_sd, seed if isinstance(seed, int) else 0)


# group actions ------------------------------------------------------------

def _rotation_blocks(d, u):
    p = np.arange(1, d // 2 + 1)
    ang = 2 * np.pi * p * u
    return np.cos(ang), np.sin(ang)


def apply_group(g, group: GroupSpec, x):
    """Apply group element ``g`` to a point (or rows of a 2-D array)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != group.d:
        raise ValueError(f"point has dimension {x.shape[-1]}, group acts on {group.d}")
    if group.kind == "trivial":
        if g != 0:
            raise IndexError("trivial group has only element 0")
        return x.copy()
    if group.kind == "cyc1d":
        if not 0 <= int(g) < group.d or int(g) != g:
            raise IndexError(f"shift {g} out of range for Cyc_{group.d}")
        return np.roll(x, -int(g), axis=-1)
    if group.kind == "cyc2d":
        i, j = g
        if not (0 <= i < group.d1 and 0 <= j < group.d2):
            raise IndexError(f"shift {(i, j)} out of range")
        grid = x.reshape(x.shape[:-1] + (group.d1, group.d2))
        return np.roll(grid, (-i, -j), axis=(-2, -1)).reshape(x.shape)
    u = float(g)
    if not 0.0 <= u < 1.0:
        raise IndexError("shift_band parameter must lie in [0, 1)")
    c, s = _rotation_blocks(group.d, u)
    out = x.copy()
    a, b = x[..., 1::2], x[..., 2::2]
    out[..., 1::2] = c * a + s * b
    out[..., 2::2] = -s * a + c * b
    return out


def orbit(group: GroupSpec, x):
    """All images ``g . x``, stacked along a new leading axis."""
    return np.stack([apply_group(g, group, x) for g in group.elements()])


def _shift_band_products(group, X, Y):
    d = group.d
    u = np.arange(group.M) / group.M
    p = np.arange(1, d // 2 + 1)
    C = np.cos(2 * np.pi * np.outer(p, u))
    S = np.sin(2 * np.pi * np.outer(p, u))
    xa, xb = X[:, 1::2], X[:, 2::2]
    ya, yb = Y[:, 1::2], Y[:, 2::2]
    # <x, g_u y> = x1 y1 + sum_p A_p cos(2 pi p u) + B_p sin(2 pi p u)
    A = xa[:, None, :] * ya[None] + xb[:, None, :] * yb[None]
    B = xa[:, None, :] * yb[None] - xb[:, None, :] * ya[None]
    return (X[:, :1] * Y[:, :1].T)[..., None] + A @ C + B @ S


def pairwise_group_inner_products(group: GroupSpec, X, Y, method="auto"):
    """Array ``P[a, b, g] = <X[a], g . Y[b]>`` over all group elements.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (FFT when ``d >= 64``).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != group.d or Y.shape[1] != group.d:
        raise ValueError(f"dimension mismatch: {X.shape[1]}, {Y.shape[1]} vs group d={group.d}")
    if group.kind == "trivial":
        return (X @ Y.T)[..., None]
    if group.kind == "shift_band":
        return _shift_band_products(group, X, Y)
    if method == "auto":
        method = "fft" if group.d >= FFT_THRESHOLD else "direct"
    if method == "direct":
        G = orbit(group, Y)  # (|G|, m, d)
        return np.einsum("ad,gbd->abg", X, G, optimize=True)
    if group.kind == "cyc1d":
        # sum_m x_m y_{m+i}: circular cross-correlation
        Xf = np.fft.rfft(X, axis=1)
        Yf = np.fft.rfft(Y, axis=1)
        return np.fft.irfft(np.conj(Xf)[:, None, :] * Yf[None], n=group.d, axis=-1)
    shape = (group.d1, group.d2)
    Xf = np.fft.rfft2(X.reshape(-1, *shape))
    Yf = np.fft.rfft2(Y.reshape(-1, *shape))
    P = np.fft.irfft2(np.conj(Xf)[:, None] * Yf[None], s=shape)
    return P.reshape(X.shape[0], Y.shape[0], group.d)


def group_inner_products(group: GroupSpec, x, y, method="auto"):
    """``[<x, g . y> for g in group]`` for a single pair of points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {y.shape}")
    return pairwise_group_inner_products(group, x[None], y[None], method)[0, 0]


def haar_average(group: GroupSpec, values_or_function):
    """Uniform average over the group.

    Accepts either per-element values (last axis indexes the group) or a
    callable ``f(g)`` evaluated on :meth:`GroupSpec.elements`.  For
    ``shift_band`` the equispaced rule is exact for trigonometric
    polynomials of degree below ``M``.
    """
    if callable(values_or_function):
        vals = np.array([values_or_function(g) for g in group.elements()], dtype=float)
        if vals.size == 0:
            raise ValueError("empty group")
        return vals.mean(axis=0)
    vals = np.asarray(values_or_function, dtype=float)
    if vals.size == 0 or vals.shape[-1] == 0:
        raise ValueError("cannot average an empty set of values")
    return vals.mean(axis=-1)
