"""Ridge solvers for kernel and random-features regression.

Penalties carry the ``d^alpha`` scaling of the invariant objectives:

* KRR:   solve ``(K + (lambda / d^alpha) I) u = y``;
* RFRR:  solve ``(Z^T Z + (N lambda / d^alpha) I) a = Z^T y``.

``lambda = 0`` means the ridgeless (min-norm interpolation) limit.  For KRR
it is realised as a tiny ridge ``1e-10 * trace(K) / n`` with one tenfold
jitter escalation before falling back to an eigendecomposition pseudo-solve.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import features as _features
from . import kernels as _kernels
from ._errors import NumericalError
from ._rng import as_generator

log = logging.getLogger(__name__)

RIDGELESS_SCALE = 1e-10


@dataclass(frozen=True)
class RidgeConfig:
    lam: float = 0.0
    alpha: int = 0
    mode: str = "krr"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("ridge level must be nonnegative")
        if self.mode not in ("krr", "rfrr"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class RidgeFit:
    mode: str
    coef: np.ndarray = field(repr=False)
    effective_lambda: float
    train_mse: float
    X_train: Optional[np.ndarray] = field(default=None, repr=False)
    kernel: Optional[object] = None
    bank: Optional[object] = None
    input_hash: str = ""

    def to_dict(self):
        out = {
            "mode": self.mode,
            "coef": self.coef.tolist(),
            "effective_lambda": self.effective_lambda,
            "train_mse": self.train_mse,
            "input_hash": self.input_hash,
        }
        if self.kernel is not None:
            out["kernel"] = self.kernel.to_dict()
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    stderr: float
    n_test: int


def _spd_solve(A, b, ridge, allow_escalation):
    n = A.shape[0]
    for attempt in range(2 if allow_escalation else 1):
        r = ridge * 10**attempt
        try:
            c = linalg.cho_factor(A + r * np.eye(n), lower=True, check_finite=True)
            return linalg.cho_solve(c, b), r
        except linalg.LinAlgError:
            log.debug("cholesky failed at ridge %.3e", r)
    # eigendecomposition pseudo-solve
    vals, vecs = linalg.eigh(A)
    shifted = vals + ridge
    cut = max(abs(shifted).max(), 1e-300) * n * np.finfo(float).eps
    if not np.all(np.isfinite(vals)):
        raise NumericalError("matrix has non-finite eigenvalues")
    inv = np.where(np.abs(shifted) > cut, 1.0 / shifted, 0.0)
    cond = abs(shifted).max() / max(np.abs(shifted[np.abs(shifted) > cut]).min(), 1e-300)
    log.warning("falling back to pseudo-solve (condition estimate %.3e)", cond)
    return vecs @ (inv * (vecs.T @ b)), ridge


def fit_krr(K, y, cfg: RidgeConfig = RidgeConfig(), X_train=None) -> RidgeFit:
    """Kernel ridge regression in dual form.

    ``K`` is a :class:`~invkernels.kernels.GramMatrix` or a plain array.
    """
    if cfg.mode != "krr":
        raise ValueError("fit_krr needs mode='krr'")
    spec = getattr(K, "kernel", None)
    fp = getattr(K, "fingerprint", "")
    Km = np.asarray(getattr(K, "K", K), dtype=float)
    y = np.asarray(y, dtype=float)
    n = Km.shape[0]
    if Km.shape != (n, n) or y.shape[0] != n:
        raise ValueError("Gram matrix and labels disagree in size")
    d = spec.d if spec is not None else 1
    if cfg.lam > 0:
        ridge = cfg.lam / d**cfg.alpha
        u, ridge = _spd_solve(Km, y, ridge, allow_escalation=False)
    else:
        ridge = RIDGELESS_SCALE * np.trace(Km) / n
        u, ridge = _spd_solve(Km, y, ridge, allow_escalation=True)
    resid = Km @ u - y
    return RidgeFit("krr", u, float(ridge), float(np.mean(resid**2)), X_train, spec, None, fp)


def fit_rfrr(Z, y, cfg: RidgeConfig = RidgeConfig(mode="rfrr")) -> RidgeFit:
    """Random-features ridge regression (primal normal equations)."""
    if cfg.mode != "rfrr":
        raise ValueError("fit_rfrr needs mode='rfrr'")
    bank = getattr(Z, "bank", None)
    Zm = np.asarray(getattr(Z, "Z", Z), dtype=float)
    y = np.asarray(y, dtype=float)
    n, N = Zm.shape
    if y.shape[0] != n:
        raise ValueError("design matrix and labels disagree in size")
    d = bank.domain.d if bank is not None else 1
    if cfg.lam > 0:
        ridge = N * cfg.lam / d**cfg.alpha
        if N <= n:
            a, ridge = _spd_solve(Zm.T @ Zm, Zm.T @ y, ridge, allow_escalation=False)
        else:
            # dual form: a = Z^T (Z Z^T + r I)^{-1} y, same solution
            v, ridge = _spd_solve(Zm @ Zm.T, y, ridge, allow_escalation=False)
            a = Zm.T @ v
    else:
        ridge = 0.0
        a = linalg.lstsq(Zm, y, lapack_driver="gelsd")[0]
    resid = Zm @ a - y
    return RidgeFit("rfrr", a, float(ridge), float(np.mean(resid**2)), None, None, bank, _kernels.fingerprint(Zm))


def predict(fit: RidgeFit, X_new):
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    if fit.mode == "krr":
        if fit.X_train is None or fit.kernel is None:
            raise ValueError("KRR fit has no training points or kernel attached")
        if X_new.shape[1] != fit.X_train.shape[1]:
            raise ValueError("dimension mismatch between fit and new points")
        return _kernels.cross_kernel(fit.kernel, X_new, fit.X_train) @ fit.coef
    if fit.bank is None:
        raise ValueError("RFRR fit has no feature bank attached")
    return _features.design(fit.bank, X_new).Z @ fit.coef


def krr(spec, X, y, cfg=RidgeConfig(), threads=1) -> RidgeFit:
    """Gram assembly plus :func:`fit_krr` in one call."""
    return fit_krr(_kernels.gram(spec, X, threads=threads), y, cfg, X_train=np.asarray(X, dtype=float))


def estimate_risk(fit, target, domain, n_test=2000, seed=0, predictor=None) -> RiskEstimate:
    """Monte-Carlo test error against the noiseless target.

    ``fit`` may be ``None`` if ``predictor`` (a callable on point arrays) is
    given instead.
    """
    from .geometry import sample_domain

    if n_test < 2:
        raise ValueError("n_test must be at least 2")
    Xt = sample_domain(domain, n_test, as_generator(seed, "risk.test"))
    pred = predictor(Xt) if predictor is not None else predict(fit, Xt)
    err = (np.asarray(target(Xt)) - pred) ** 2
    return RiskEstimate(float(err.mean()), float(err.std(ddof=1) / np.sqrt(n_test)), n_test)
