"""Config-driven experiment runners behind the command-line interface.

A config is a JSON object.  Every runner takes the parsed dict, fills in
defaults, and returns ``(text, extension)`` where ``text`` is the exact file
content (CSV or JSON).  Outputs depend only on the config, so identical
configs give byte-identical files; each file carries the config hash.
"""
import copy
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import augmentation, dataio, features, kernels, regression, spectra
from ._errors import NumericalError
from ._rng import child_seed, stream
from .geometry import DomainSpec, GroupSpec, sample_domain
from .orthopoly import activation_spectrum
from .serialization import config_hash, csv_text, dumps_report, read_points, write_matrix

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


ACTIVATIONS = {
    "relu": features.relu,
    "tanh": np.tanh,
    "identity": lambda t: t,
    "square": lambda t: t * t,
}

DEFAULTS = {
    "fit": {
        "domain": {"kind": "sphere", "d": 30},
        "group": {"kind": "cyc1d"},
        "kernel": {"kind": "ntk", "depth": 5, "normalization": "inner_over_d"},
        "model": "krr",
        "features": {"N": 1000, "activation": "relu"},
        "lambda": 0.0,
        "alpha": None,
        "data": {"target": "quad", "n": 100, "noise_sd": 0.0},
        "seed": 0,
    },
    "risk-curve": {
        "domain": {"kind": "sphere", "d": 30},
        "groups": [{"kind": "trivial"}, {"kind": "cyc1d"}],
        "kernel": {"kind": "ntk", "depth": 5, "normalization": "inner_over_d"},
        "model": "krr",
        "features": {"N": 1000, "activation": "relu"},
        "targets": ["lin", "quad", "cube"],
        "n_grid": [10, 30, 100, 300, 600],
        "lambda": 0.0,
        "alpha": None,
        "noise_sd": 0.0,
        "n_test": 1000,
        "reps": 10,
        "seed": 0,
    },
    "mnist": {
        "data": {},
        "T": [784],
        "n_grid": [2000],
        "n_test": 2000,
        "reps": 1,
        "kernel": {"kind": "ntk", "depth": 2, "normalization": "cosine"},
        "kernels": ["standard", "cyclic"],
        "cache_dir": None,
        "seed": 0,
    },
    "degeneracy": {
        "domain": {"kind": "hypercube", "d": 12},
        "group": {"kind": "cyc1d"},
        "degrees": [0, 1, 2, 3],
        "n_mc": 100000,
        "n_points": 1000,
        "f_k_samples": 10000,
        "seed": 0,
    },
    "concentration": {
        "domain": {"kind": "hypercube"},
        "group": {"kind": "cyc1d"},
        "k": 2,
        "d_list": [50, 100, 200],
        "n_points": 100,
        "runs": 3,
        "seed": 0,
    },
    "equivalence": {
        "domain": {"kind": "sphere", "d": 8},
        "group": {"kind": "cyc1d"},
        "kernel": {"kind": "ntk", "depth": 3},
        "n": 12,
        "n_test": 50,
        "lambda": 0.1,
        "seed": 0,
    },
}


# config plumbing ------------------------------------------------------------

def merge(base, override):
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(command, cfg):
    if command not in DEFAULTS:
        raise ConfigError(f"unknown experiment {command!r}")
    kind = cfg.get("experiment", command)
    if kind != command:
        raise ConfigError(f"config is for {kind!r}, command is {command!r}")
    out = merge(DEFAULTS[command], cfg)
    out["experiment"] = command
    _validate(out)
    return out


def _validate(cfg):
    grid = cfg.get("n_grid")
    if grid is not None:
        if not grid or any(int(b) <= int(a) for a, b in zip(grid, grid[1:])) or int(grid[0]) < 1:
            raise ConfigError("n_grid must be a non-empty strictly increasing list of positive integers")
    if "reps" in cfg and int(cfg["reps"]) < 1:
        raise ConfigError("reps must be at least 1")
    if "lambda" in cfg and float(cfg["lambda"]) < 0:
        raise ConfigError("lambda must be nonnegative")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")


def build_domain(obj, d=None):
    try:
        return DomainSpec(obj["kind"], int(d if d is not None else obj["d"]))
    except KeyError as e:
        raise ConfigError(f"domain needs key {e}") from None


def build_group(obj, d):
    kind = obj.get("kind", "trivial")
    if kind == "cyc2d":
        d1, d2 = int(obj["d1"]), int(obj["d2"])
        if d1 * d2 != d:
            raise ConfigError(f"cyc2d grid {d1}x{d2} does not match d={d}")
        return GroupSpec.cyc2d(d1, d2)
    if kind == "shift_band":
        return GroupSpec.shift_band(d, obj.get("M"), obj.get("degree"))
    return GroupSpec(kind, d)


def build_base(obj, domain=None):
    kind = obj.get("kind", "ntk")
    if kind == "ntk":
        return kernels.NTK(int(obj.get("depth", 2)))
    if kind == "poly":
        return kernels.Poly(tuple(float(c) for c in obj["coeffs"]))
    if kind == "spectral":
        if domain is None:
            raise ConfigError("spectral kernel needs a domain")
        sigma = _activation(obj.get("activation", "relu"))
        return kernels.Spectral(activation_spectrum(sigma, domain, int(obj.get("k_max", 8))))
    raise ConfigError(f"unknown kernel kind {kind!r}")


def _activation(name):
    if name not in ACTIVATIONS:
        raise ConfigError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}")
    return ACTIVATIONS[name]


def _kernel_spec(cfg, domain, group):
    k = cfg["kernel"]
    return kernels.KernelSpec(build_base(k, domain), group, k.get("normalization", "inner_over_d"))


def _ridge(cfg, group, mode):
    alpha = group.alpha if cfg.get("alpha") is None else int(cfg["alpha"])
    return regression.RidgeConfig(float(cfg["lambda"]), alpha, mode)


def _target(kind, domain):
    if isinstance(kind, dict):
        return dataio.TargetSpec(kind["kind"], domain.d, domain.kind, int(kind.get("degree", 0)))
    return dataio.TargetSpec(kind, domain.d, domain.kind)


def _header(cfg):
    return f"experiment={cfg['experiment']} config_hash={config_hash(cfg)} version={__version__}"


def _context(exc, where):
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError, FloatingPointError)):
        return NumericalError(f"{where}: {exc}")
    return ValueError(f"{where}: {exc}")


def _ordered_map(fn, items, threads):
    # results come back in input order whatever the completion order
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# fit --------------------------------------------------------------------------

def run_fit(cfg, threads=1):
    domain = build_domain(cfg["domain"])
    group = build_group(cfg["group"], domain.d)
    data = cfg["data"]
    if "points" in data:
        X = read_points(data["points"])
        y = read_points(data["labels"]).ravel()
    else:
        target = _target(data.get("target", "quad"), domain)
        X = sample_domain(domain, int(data.get("n", 100)), stream(cfg["seed"], "fit.train"))
        y = target(X)
        if float(data.get("noise_sd", 0)) > 0:
            y = y + float(data["noise_sd"]) * stream(cfg["seed"], "fit.noise").standard_normal(len(y))
    if X.shape[1] != domain.d:
        raise ConfigError(f"points have dimension {X.shape[1]}, domain has d={domain.d}")
    if cfg["model"] == "krr":
        spec = _kernel_spec(cfg, domain, group)
        K = kernels.gram(spec, X, threads=threads)
        if cfg.get("gram_out"):
            write_matrix(cfg["gram_out"], K.K)
        fit = regression.fit_krr(K, y, _ridge(cfg, group, "krr"), X_train=X)
    elif cfg["model"] == "rfrr":
        f = cfg["features"]
        bank = features.sample_features(domain, int(f["N"]), _activation(f["activation"]), group,
                                        stream(cfg["seed"], "fit.features"))
        Z = features.design(bank, X)
        if cfg.get("design_out"):
            write_matrix(cfg["design_out"], Z.Z)
        fit = regression.fit_rfrr(Z, y, _ridge(cfg, group, "rfrr"))
    else:
        raise ConfigError(f"unknown model {cfg['model']!r}")
    out = {"config_hash": config_hash(cfg), "version": __version__, "seed": cfg["seed"],
           "n": int(X.shape[0]), "d": domain.d, "group": group.to_dict(), "fit": fit.to_dict()}
    if "predict" in cfg:
        out["predictions"] = regression.predict(fit, read_points(cfg["predict"]["points"])).tolist()
    return dumps_report(out), "json"


# risk curves --------------------------------------------------------------------

RISK_COLUMNS = ["target", "group", "n", "reps", "mean_risk", "sd_risk", "mean_train_mse"]


def _risk_one(cfg, domain, group, targets, n, rep):
    seed = cfg["seed"]
    X = sample_domain(domain, n, stream(seed, f"risk.train/{n}/{rep}"))
    Xt = sample_domain(domain, int(cfg["n_test"]), stream(seed, f"risk.test/{n}/{rep}"))
    noise = float(cfg["noise_sd"])
    labels = []
    for t in targets:
        y = t(X)
        if noise > 0:
            y = y + noise * stream(seed, f"risk.noise/{t.kind}/{n}/{rep}").standard_normal(n)
        labels.append(y)
    out = []
    if cfg["model"] == "krr":
        spec = _kernel_spec(cfg, domain, group)
        K = kernels.gram(spec, X)
        Kt = kernels.cross_kernel(spec, Xt, X)
        for t, y in zip(targets, labels):
            fit = regression.fit_krr(K, y, _ridge(cfg, group, "krr"), X_train=X)
            out.append((float(np.mean((t(Xt) - Kt @ fit.coef) ** 2)), fit.train_mse))
    else:
        f = cfg["features"]
        bank = features.sample_features(domain, int(f["N"]), _activation(f["activation"]), group,
                                        stream(seed, f"risk.features/{n}/{rep}"))
        Z, Zt = features.design(bank, X), features.design(bank, Xt).Z
        for t, y in zip(targets, labels):
            fit = regression.fit_rfrr(Z, y, _ridge(cfg, group, "rfrr"))
            out.append((float(np.mean((t(Xt) - Zt @ fit.coef) ** 2)), fit.train_mse))
    return out


def risk_curve_rows(cfg, threads=1):
    domain = build_domain(cfg["domain"])
    groups = [build_group(g, domain.d) for g in cfg.get("groups") or [cfg["group"]]]
    targets = [_target(t, domain) for t in cfg["targets"]]
    reps = int(cfg["reps"])
    if cfg["model"] not in ("krr", "rfrr"):
        raise ConfigError(f"unknown model {cfg['model']!r}")
    rows = []
    for group in groups:
        for n in cfg["n_grid"]:
            def job(rep, n=int(n), group=group):
                try:
                    return _risk_one(cfg, domain, group, targets, n, rep)
                except ConfigError:
                    raise
                except Exception as e:  # noqa: BLE001 - re-raised with context
                    raise _context(e, f"group={group.kind} n={n} rep={rep}") from e
            res = np.array(_ordered_map(job, range(reps), threads))  # (reps, targets, 2)
            for j, t in enumerate(targets):
                r = res[:, j, 0]
                rows.append({
                    "target": t.kind if t.kind != "monomial" else f"monomial{t.degree}",
                    "group": group.kind,
                    "n": int(n),
                    "reps": reps,
                    "mean_risk": float(r.mean()),
                    "sd_risk": float(r.std(ddof=1)) if reps > 1 else 0.0,
                    "mean_train_mse": float(res[:, j, 1].mean()),
                })
                log.info("%s %s n=%d risk=%.4f", group.kind, rows[-1]["target"], n, r.mean())
    return rows


def run_risk_curve(cfg, threads=1):
    rows = risk_curve_rows(cfg, threads)
    return csv_text(RISK_COLUMNS, rows, _header(cfg)), "csv"


# MNIST --------------------------------------------------------------------------

MNIST_COLUMNS = ["T", "n", "kernel", "reps", "classification_error", "sd_error"]
_MNIST_KEYS = ("train_images", "train_labels", "test_images", "test_labels")


def _mnist_prepared(cfg, T, rep):
    data = cfg["data"]
    missing = [k for k in _MNIST_KEYS if k not in data]
    if missing:
        raise ConfigError(f"mnist config lacks data paths: {missing}")
    for k in _MNIST_KEYS:
        if not os.path.exists(data[k]):
            raise FileNotFoundError(f"MNIST file not found: {data[k]}")
    seed = child_seed(cfg["seed"], f"mnist/{rep}")
    mc = dataio.MnistConfig(*(data[k] for k in _MNIST_KEYS), T=int(T), n_train=int(cfg["n_grid"][-1]),
                            n_test=int(cfg["n_test"]), seed=seed)
    cache = cfg.get("cache_dir")
    stem = os.path.join(cache, f"cyclic_mnist_T{T}_seed{seed}") if cache else None
    if stem and os.path.exists(stem + ".json"):
        from .serialization import read_matrix
        Xtr, Xte = read_matrix(stem + ".train.bin"), read_matrix(stem + ".test.bin")
        side = json.load(open(stem + ".json"))
        return Xtr, np.array(side["train_digits"]), Xte, np.array(side["test_digits"])
    Xtr, ytr, Xte, yte, mask = dataio.prepare_cyclic_mnist(mc)
    if stem:
        os.makedirs(cache, exist_ok=True)
        write_matrix(stem + ".train.bin", Xtr)
        write_matrix(stem + ".test.bin", Xte)
        side = {"T": int(T), "omega": np.argwhere(mask).tolist(), "seed": seed,
                "train_digits": ytr.tolist(), "test_digits": yte.tolist()}
        with open(stem + ".json", "w") as f:
            f.write(dumps_report(side))
    return Xtr, ytr, Xte, yte


def mnist_rows(cfg, threads=1):
    kern = cfg["kernel"]
    groups = {"standard": GroupSpec.trivial(784), "cyclic": GroupSpec.cyc2d(28, 28)}
    for name in cfg["kernels"]:
        if name not in groups:
            raise ConfigError(f"unknown MNIST kernel {name!r}")
    reps = int(cfg["reps"])
    errs = {}
    for rep in range(reps):
        for T in cfg["T"]:
            Xtr, ytr, Xte, yte = _mnist_prepared(cfg, T, rep)
            order = stream(child_seed(cfg["seed"], f"mnist/{rep}"), "mnist.order").permutation(len(Xtr))
            for name in cfg["kernels"]:
                spec = kernels.KernelSpec(build_base(kern), groups[name], kern.get("normalization", "cosine"))
                # one cross-kernel against the largest training set; smaller n use its leading columns
                idx = order[: int(cfg["n_grid"][-1])]
                Kall = kernels.gram(spec, Xtr[idx], threads=threads).K
                Kt_all = kernels.cross_kernel(spec, Xte, Xtr[idx])
                for n in cfg["n_grid"]:
                    n = int(n)
                    K = kernels.GramMatrix(Kall[:n, :n], spec, "")
                    fit = regression.fit_krr(K, dataio.encode_labels(ytr[idx[:n]]), regression.RidgeConfig(0.0, 0))
                    e = dataio.classification_error(Kt_all[:, :n] @ fit.coef, yte)
                    errs.setdefault((int(T), n, name), []).append(e)
                    log.info("mnist rep=%d T=%d n=%d %s error=%.4f", rep, T, n, name, e)
    rows = []
    for T in cfg["T"]:
        for n in cfg["n_grid"]:
            for name in cfg["kernels"]:
                v = np.array(errs[(int(T), int(n), name)])
                rows.append({"T": int(T), "n": int(n), "kernel": name, "reps": reps,
                             "classification_error": float(v.mean()),
                             "sd_error": float(v.std(ddof=1)) if reps > 1 else 0.0})
    return rows


def run_mnist(cfg, threads=1):
    return csv_text(MNIST_COLUMNS, mnist_rows(cfg, threads), _header(cfg)), "csv"


# reports ------------------------------------------------------------------------

def _meta(cfg):
    return {"config_hash": config_hash(cfg), "version": __version__, "seed": cfg["seed"], "experiment": cfg["experiment"]}


def degeneracy_report(cfg):
    domain = build_domain(cfg["domain"])
    group = build_group(cfg["group"], domain.d)
    group.check_domain(domain)
    rep = spectra.spectrum_report(domain, group, [int(k) for k in cfg["degrees"]], int(cfg["n_mc"]),
                                  int(cfg["n_points"]), cfg["seed"], int(cfg["f_k_samples"]))
    return {**_meta(cfg), **rep.to_dict()}


def concentration_report(cfg):
    k = int(cfg["k"])
    per_d = []
    for d in cfg["d_list"]:
        domain = build_domain(cfg["domain"], d=int(d))
        group = build_group(cfg["group"], domain.d)
        group.check_domain(domain)
        runs = []
        for r in range(int(cfg["runs"])):
            mean, se, sup = spectra.upsilon_statistics(domain, group, k, int(cfg["n_points"]),
                                                       child_seed(cfg["seed"], f"concentration/{d}/{r}"))
            runs.append({"mean": mean, "stderr": se, "sup_dev": sup})
        sups = [r["sup_dev"] for r in runs]
        per_d.append({"d": int(d), "runs": runs, "sup_dev": float(np.median(sups))})
    return {**_meta(cfg), "domain": cfg["domain"]["kind"], "group": cfg["group"], "k": k, "results": per_d}


def equivalence_report(cfg):
    domain = build_domain(cfg["domain"])
    group = build_group(cfg["group"], domain.d)
    group.check_domain(domain)
    X = sample_domain(domain, int(cfg["n"]), stream(cfg["seed"], "equivalence.train"))
    y = stream(cfg["seed"], "equivalence.labels").standard_normal(len(X))
    Xt = sample_domain(domain, int(cfg["n_test"]), stream(cfg["seed"], "equivalence.test"))
    rep = augmentation.check_prop2_equivalence(X, y, build_base(cfg["kernel"], domain), group, float(cfg["lambda"]), Xt)
    return {**_meta(cfg), **rep.to_dict(), "relative_gap": rep.relative_gap}


def run_report(cfg, threads=1):
    fn = {"degeneracy": degeneracy_report, "concentration": concentration_report,
          "equivalence": equivalence_report}[cfg["experiment"]]
    return dumps_report(fn(cfg)), "json"


RUNNERS = {
    "fit": run_fit,
    "risk-curve": run_risk_curve,
    "mnist": run_mnist,
    "degeneracy": run_report,
    "concentration": run_report,
    "equivalence": run_report,
}


def run(command, cfg, threads=1):
    """Resolve ``cfg`` for ``command`` and return ``(text, extension)``."""
    return RUNNERS[command](resolve(command, cfg), threads)
