import numpy as np
import pytest

from invkernels import NumericalError
from invkernels import features as ft
from invkernels import kernels as kr
from invkernels import regression as rg
from invkernels.dataio import TargetSpec
from invkernels.geometry import DomainSpec, GroupSpec, apply_group, sample_domain
from invkernels.regression import RidgeConfig

from test_features import HalfArcCosine

D = 10
DOM = DomainSpec.sphere(D)
CYC = GroupSpec.cyc1d(D)


def _problem(n=25, seed=0, group=CYC):
    X = sample_domain(DOM, n, seed)
    y = TargetSpec("quad", D)(X)
    return X, y, kr.gram(kr.KernelSpec(kr.NTK(3), group), X)


def test_config_validation():
    with pytest.raises(ValueError):
        RidgeConfig(-1.0)
    with pytest.raises(ValueError):
        RidgeConfig(0.1, mode="svm")


def test_single_point_scalar_solve():
    X, y, K = _problem(1)
    fit = rg.fit_krr(K, y, RidgeConfig(0.3, 1), X_train=X)
    assert fit.coef[0] == pytest.approx(y[0] / (K.K[0, 0] + 0.3 / D))


def test_huge_ridge_shrinks_to_zero():
    X, y, K = _problem()
    fit = rg.fit_krr(K, y, RidgeConfig(1e12, 0), X_train=X)
    assert np.linalg.norm(fit.coef) < 1e-9
    assert np.abs(rg.predict(fit, sample_domain(DOM, 5, 9))).max() < 1e-8


def test_ridgeless_interpolates():
    X, y, K = _problem()
    fit = rg.fit_krr(K, y, RidgeConfig(0.0, 1), X_train=X)
    assert fit.effective_lambda == pytest.approx(rg.RIDGELESS_SCALE * np.trace(K.K) / len(y))
    assert np.linalg.norm(rg.predict(fit, X) - y) <= 1e-6 * np.linalg.norm(y)


def test_ridgeless_singular_falls_back():
    X, y, _ = _problem(6)
    X = np.vstack([X, X])
    y = np.concatenate([y, y])
    K = kr.gram(kr.KernelSpec(kr.NTK(3), CYC), X)
    fit = rg.fit_krr(K, y, RidgeConfig(0.0, 1), X_train=X)
    assert np.all(np.isfinite(fit.coef))
    assert np.linalg.norm(rg.predict(fit, X) - y) <= 1e-5 * np.linalg.norm(y)


def test_nan_gram_is_numerical_error():
    K = np.full((3, 3), np.nan)
    with pytest.raises((NumericalError, ValueError)):
        rg.fit_krr(K, np.ones(3), RidgeConfig(0.1, 0))


def test_normal_equation_residual():
    X, y, K = _problem(40)
    for lam in (1e-3, 0.1, 10.0):
        fit = rg.fit_krr(K, y, RidgeConfig(lam, 1), X_train=X)
        res = (K.K + lam / D * np.eye(len(y))) @ fit.coef - y
        assert np.linalg.norm(res) <= 1e-8 * np.linalg.norm(y)


def test_training_mse_monotone_in_lambda():
    X, y, K = _problem(40)
    mses = [rg.fit_krr(K, y, RidgeConfig(lam, 1), X_train=X).train_mse for lam in np.logspace(-4, 3, 15)]
    assert np.all(np.diff(mses) >= -1e-14)


def test_label_equivariance():
    X, y, K = _problem(30)
    Xt = sample_domain(DOM, 7, 4)
    a = rg.predict(rg.fit_krr(K, y, RidgeConfig(0.05, 1), X_train=X), Xt)
    b = rg.predict(rg.fit_krr(K, -2.5 * y, RidgeConfig(0.05, 1), X_train=X), Xt)
    assert np.allclose(b, -2.5 * a, rtol=1e-12, atol=1e-13)


def test_prediction_at_training_point_and_zero_dual():
    X, y, K = _problem(15)
    fit = rg.fit_krr(K, y, RidgeConfig(0.2, 1), X_train=X)
    assert np.allclose(rg.predict(fit, X[3:4]), K.K[3] @ fit.coef, atol=1e-13)
    fit.coef[:] = 0.0
    assert np.all(rg.predict(fit, sample_domain(DOM, 4, 0)) == 0.0)


def test_invariant_fit_predicts_invariantly():
    X, y, K = _problem(20)
    fit = rg.fit_krr(K, y, RidgeConfig(0.0, 1), X_train=X)
    Xt = sample_domain(DOM, 5, 8)
    for s in (1, 6):
        assert np.abs(rg.predict(fit, apply_group(s, CYC, Xt)) - rg.predict(fit, Xt)).max() <= 1e-9


def test_predict_dimension_mismatch():
    X, y, K = _problem(5)
    fit = rg.fit_krr(K, y, RidgeConfig(0.1, 1), X_train=X)
    with pytest.raises(ValueError):
        rg.predict(fit, np.ones((2, D + 1)))


def test_fit_json():
    X, y, K = _problem(5)
    fit = rg.fit_krr(K, y, RidgeConfig(0.1, 1), X_train=X)
    d = fit.to_dict()
    assert d["input_hash"] == K.fingerprint and len(d["coef"]) == 5
    assert d["kernel"]["group"]["kind"] == "cyc1d"


# RFRR ----------------------------------------------------------------------------------

def test_rfrr_single_feature():
    bank = ft.sample_features(DOM, 1, ft.relu, CYC, seed=0)
    X = sample_domain(DOM, 12, 1)
    y = np.arange(12.0)
    Z = ft.design(bank, X)
    fit = rg.fit_rfrr(Z, y, RidgeConfig(0.4, 1, "rfrr"))
    z = Z.Z[:, 0]
    assert fit.coef[0] == pytest.approx(z @ y / (z @ z + 1 * 0.4 / D))


def test_rfrr_overparametrized_interpolates():
    bank = ft.sample_features(DOM, 200, ft.relu, GroupSpec.trivial(D), seed=0)
    X = sample_domain(DOM, 30, 1)
    y = TargetSpec("cube", D)(X)
    fit = rg.fit_rfrr(ft.design(bank, X), y, RidgeConfig(0.0, 0, "rfrr"))
    assert np.linalg.norm(ft.design(bank, X).Z @ fit.coef - y) <= 1e-6 * np.linalg.norm(y)


def test_rfrr_primal_and_dual_agree():
    bank = ft.sample_features(DOM, 40, ft.relu, CYC, seed=0)
    X = sample_domain(DOM, 25, 1)
    y = TargetSpec("lin", D)(X)
    Z = ft.design(bank, X)
    a = rg.fit_rfrr(Z, y, RidgeConfig(0.01, 1, "rfrr")).coef  # N > n: dual path
    Zm = Z.Z
    ref = np.linalg.solve(Zm.T @ Zm + 40 * 0.01 / D * np.eye(40), Zm.T @ y)
    assert np.allclose(a, ref, atol=1e-9)


def test_rfrr_matches_krr_for_wide_banks():
    g = CYC
    X = sample_domain(DOM, 30, 2)
    y = TargetSpec("quad", D)(X)
    Xt = sample_domain(DOM, 40, 3)
    lam = 0.05
    spec = kr.KernelSpec(HalfArcCosine(), g)
    krr_pred = rg.predict(rg.fit_krr(kr.gram(spec, X), y, RidgeConfig(lam, 1), X_train=X), Xt)
    bank = ft.sample_features(DOM, 2**15, ft.relu, g, seed=5)
    rf_fit = rg.fit_rfrr(ft.design(bank, X), y, RidgeConfig(lam, 1, "rfrr"))
    rf_pred = rg.predict(rf_fit, Xt)
    assert np.linalg.norm(rf_pred - krr_pred) <= 0.05 * np.linalg.norm(krr_pred)


# risk estimation -------------------------------------------------------------------------

def test_zero_predictor_risk_is_target_norm():
    d = 30
    dom = DomainSpec.sphere(d)
    est = rg.estimate_risk(None, TargetSpec("lin", d), dom, n_test=20_000, seed=0,
                           predictor=lambda X: np.zeros(len(X)))
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_zero_labels_give_zero_risk():
    X, _, K = _problem(10)
    fit = rg.fit_krr(K, np.zeros(10), RidgeConfig(0.1, 1), X_train=X)
    zero = lambda Z: np.zeros(len(Z))
    assert rg.estimate_risk(fit, zero, DOM, n_test=100).mean == 0.0


def test_perfect_predictor():
    f = TargetSpec("cube", D)
    est = rg.estimate_risk(None, f, DOM, n_test=50, predictor=f)
    assert est.mean == 0.0 and est.stderr == 0.0


def test_risk_stderr_definition():
    f = TargetSpec("quad", D)
    est = rg.estimate_risk(None, f, DOM, n_test=500, seed=1, predictor=lambda X: np.zeros(len(X)))
    vals = f(sample_domain(DOM, 500, rg.as_generator(1, "risk.test"))) ** 2
    assert est.stderr == pytest.approx(vals.std(ddof=1) / np.sqrt(500))
    with pytest.raises(ValueError):
        rg.estimate_risk(None, f, DOM, n_test=1, predictor=f)


def test_learning_direction_invariant_beats_standard():
    # fixed small instance: invariant kernel learns f_quad faster than the plain kernel
    X = sample_domain(DOM, 60, 0)
    f = TargetSpec("quad", D)
    risks = {}
    for g in (GroupSpec.trivial(D), CYC):
        fit = rg.krr(kr.KernelSpec(kr.NTK(3), g), X, f(X))
        risks[g.kind] = rg.estimate_risk(fit, f, DOM, n_test=2000, seed=1).mean
    assert risks["cyc1d"] < risks["trivial"]
