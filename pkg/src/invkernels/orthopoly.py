"""Gegenbauer, hypercubic Gegenbauer and Hermite polynomials.

Conventions
-----------
``Q_k`` is a polynomial on inner products ``t = <x, y>`` in ``[-d, d]``,
normalised so that ``Q_k(d) = 1``.  On the sphere ``S^{d-1}(sqrt d)`` it is
the classical Gegenbauer polynomial with parameter ``(d - 2) / 2`` in the
variable ``t / d``; on the hypercube it is the Krawtchouk polynomial divided
by ``C(d, k)``, i.e. ``Q_k(<x, y>) = C(d, k)^{-1} sum_{|S|=k} x^S y^S``.

Both families satisfy ``B_k * E[Q_k(<x, w>) Q_j(<y, w>)] = delta_jk Q_k(<x, y>)``
where ``B_k`` is the dimension of the degree-``k`` harmonic subspace.

Recurrences (``s = t``)::

    sphere:     Q_{k+1} = ((2k + d - 2) (s/d) Q_k - k Q_{k-1}) / (k + d - 2)
    hypercube:  Q_{k+1} = (s Q_k - k Q_{k-1}) / (d - k)
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, linalg, special

from .geometry import HYPERCUBE, SPHERE, DomainSpec

MAX_DEGREE = 16


def dim_harmonics(domain: DomainSpec, k):
    """``B(A_d; k)``: dimension of the degree-``k`` subspace ``V_{d,k}``."""
    d = domain.d
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if domain.kind == HYPERCUBE:
        return math.comb(d, k)
    if k == 0:
        return 1
    return (2 * k + d - 2) * math.comb(k + d - 3, k) // (d - 2)


def _recurrence_step(domain, k, s, q_k, q_km1):
    d = domain.d
    if domain.kind == SPHERE:
        return ((2 * k + d - 2) * (s / d) * q_k - k * q_km1) / (k + d - 2)
    return (s * q_k - k * q_km1) / (d - k)


def gegenbauer_values(domain: DomainSpec, k_max, s):
    """Evaluate ``Q_0 .. Q_{k_max}`` at inner products ``s``.

    Returns an array of shape ``(k_max + 1,) + s.shape``.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty((k_max + 1,) + s.shape)
    out[0] = 1.0
    if k_max >= 1:
        out[1] = s / domain.d
    for k in range(1, k_max):
        out[k + 1] = _recurrence_step(domain, k, s, out[k], out[k - 1])
    return out


def _check_degree(domain, k_max):
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if k_max > MAX_DEGREE:
        raise ValueError(f"k_max capped at {MAX_DEGREE}")
    if domain.kind == HYPERCUBE and k_max > domain.d:
        raise ValueError(f"hypercube of dimension {domain.d} has no degree {k_max} polynomials")


@dataclass(frozen=True)
class GegenbauerBasis:
    """``Q_0 .. Q_{k_max}`` on a domain.

    ``coeff_table[k, m]`` is the coefficient of ``(t / d)^m`` in ``Q_k(t)``.
    Evaluation goes through the recurrence; the table is for inspection.
    """

    domain: DomainSpec
    max_degree: int
    coeff_table: np.ndarray = field(repr=False)

    def __call__(self, k, s):
        if not 0 <= k <= self.max_degree:
            raise ValueError(f"degree {k} outside basis range 0..{self.max_degree}")
        return gegenbauer_values(self.domain, k, s)[k]

    def all(self, s):
        return gegenbauer_values(self.domain, self.max_degree, s)

    def dims(self):
        return np.array([dim_harmonics(self.domain, k) for k in range(self.max_degree + 1)], dtype=float)


def build_gegenbauer(domain: DomainSpec, k_max) -> GegenbauerBasis:
    _check_degree(domain, k_max)
    d = domain.d
    table = np.zeros((k_max + 1, k_max + 1))
    prev, cur = np.zeros(1), np.array([1.0])
    table[0, 0] = 1.0
    # in the variable v = t / d the recurrences read
    #   sphere:    Q_{k+1} = ((2k+d-2) v Q_k - k Q_{k-1}) / (k+d-2)
    #   hypercube: Q_{k+1} = (d v Q_k - k Q_{k-1}) / (d-k)
    for k in range(k_max):
        if domain.kind == SPHERE:
            a, den = (2 * k + d - 2), (k + d - 2)
        else:
            a, den = d, (d - k)
        nxt = P.polysub(a * P.polymulx(cur), k * prev) / den
        prev, cur = cur, nxt
        table[k + 1, : len(cur)] = cur
    return GegenbauerBasis(domain, k_max, table)


# quadrature against the law of <e_1, x> ------------------------------------

def inner_product_law(domain: DomainSpec, n_points):
    """Nodes ``s`` (inner products ``<x, y>`` in [-d, d]) and probability weights.

    Sphere: Gauss-Jacobi rule for the density ``(1 - v^2)^((d-3)/2)`` of
    ``v = s / d``; exact for polynomials of degree ``< 2 n_points``.
    Hypercube: the exact law of ``<1, x>`` (``d + 1`` atoms).
    """
    d = domain.d
    if domain.kind == HYPERCUBE:
        m = np.arange(d + 1)
        s = (d - 2 * m).astype(float)
        logw = np.array([math.lgamma(d + 1) - math.lgamma(j + 1) - math.lgamma(d - j + 1) for j in m])
        w = np.exp(logw - d * math.log(2.0))
        return s, w / w.sum()
    v, w = gauss_gegenbauer((d - 2) / 2.0, int(n_points))
    return d * v, w


def gauss_gegenbauer(lam, n):
    """Gauss rule for the probability density prop. to ``(1 - v^2)^(lam - 1/2)``.

    Golub-Welsch on the symmetric Jacobi matrix; stays stable for the large
    parameters (``lam ~ d / 2``) where ``scipy.special.roots_jacobi`` fails.
    """
    k = np.arange(1, n, dtype=float)
    beta = k * (k + 2 * lam - 1) / (4 * (k + lam) * (k + lam - 1))
    v, vec = linalg.eigh_tridiagonal(np.zeros(n), np.sqrt(beta))
    w = vec[0] ** 2
    return v, w / w.sum()


@dataclass(frozen=True)
class ActivationSpectrum:
    domain: DomainSpec
    xi: np.ndarray
    dims: np.ndarray
    total_mass: float

    @property
    def degrees(self):
        return np.arange(len(self.xi))

    @property
    def cumulative_mass(self):
        return np.cumsum(self.xi**2 * self.dims)

    @property
    def residual_mass(self):
        return self.total_mass - self.cumulative_mass[-1]

    def kernel(self, s):
        """Feature kernel ``sum_k xi_k^2 B_k Q_k(s)`` at inner products ``s``."""
        Q = gegenbauer_values(self.domain, len(self.xi) - 1, s)
        coef = self.xi**2 * self.dims
        return np.tensordot(coef, Q, axes=1)

    def to_dict(self):
        return {
            "d": self.domain.d,
            "domain": self.domain.kind,
            "k": self.degrees.tolist(),
            "xi": self.xi.tolist(),
            "B_k": self.dims.tolist(),
            "cumulative_mass": self.cumulative_mass.tolist(),
        }


def activation_spectrum(sigma, domain: DomainSpec, k_max=8, quad_points=None, tol=1e-8):
    """Coefficients ``xi_{d,k}(sigma) = E[sigma(z) Q_k(sqrt(d) z)]``, ``z = <e_1, x>``.

    On the hypercube the argument of ``sigma`` is ``s / sqrt(d)`` with ``s``
    running over the exact law of ``<1, x>``.
    """
    _check_degree(domain, k_max)
    if quad_points is None:
        quad_points = max(2 * k_max + 8, 400)
    if domain.kind == SPHERE and quad_points < k_max + 1:
        raise ValueError("quad_points too small for the requested degree")
    s, w = inner_product_law(domain, quad_points)
    vals = np.asarray(sigma(s / np.sqrt(domain.d)), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("activation returned non-finite values on quadrature nodes")
    Q = gegenbauer_values(domain, k_max, s)
    xi = Q @ (w * vals)
    dims = np.array([dim_harmonics(domain, k) for k in range(k_max + 1)], dtype=float)
    total = float(w @ vals**2)
    spec = ActivationSpectrum(domain, xi, dims, total)
    if spec.residual_mass < -tol * max(1.0, total):
        raise ValueError(f"negative residual mass {spec.residual_mass:.3e}: quadrature under-resolved")
    return spec


# Hermite ------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteCoeffs:
    mu: np.ndarray

    @property
    def degrees(self):
        return np.arange(len(self.mu))


def hermite_he(k, x):
    """Probabilists' Hermite polynomial ``He_k`` (``E[He_k^2] = k!``)."""
    return special.eval_hermitenorm(k, x)


def hermite_coeffs(sigma, k_max, breakpoints=(0.0,)) -> HermiteCoeffs:
    """``mu_k = E[sigma(G) He_k(G)]`` by adaptive quadrature on the Gaussian line.

    The line is split at ``breakpoints`` so kinks (ReLU at 0) are resolved.
    """
    cuts = [-np.inf] + sorted(breakpoints) + [np.inf]
    norm = 1.0 / math.sqrt(2 * math.pi)
    mu = np.empty(k_max + 1)
    for k in range(k_max + 1):
        def f(x, k=k):
            return sigma(x) * hermite_he(k, x) * math.exp(-x * x / 2) * norm

        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            try:
                with warnings.catch_warnings():
                    # convergence is judged from the returned error estimate instead
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    val, err = integrate.quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11)
            except (OverflowError, FloatingPointError) as e:
                raise ValueError(f"Hermite integrand for degree {k} diverges ({e})") from None
            if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
                raise ValueError(f"Hermite integral for degree {k} did not converge")
            total += val
        mu[k] = total
    return HermiteCoeffs(mu)


def gegenbauer_hermite_limit_check(sigma, k, d_list, quad_points=None):
    """Rows ``(d, xi_{d,k} * sqrt(B_k * k!))``; compare with ``mu_k(sigma)``."""
    rows = []
    for d in d_list:
        dom = DomainSpec.sphere(d)
        spec = activation_spectrum(sigma, dom, k_max=k, quad_points=quad_points)
        rows.append((d, float(spec.xi[k] * math.sqrt(spec.dims[k] * math.factorial(k)))))
    return rows
