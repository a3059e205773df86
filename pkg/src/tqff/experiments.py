"""Experiment suites: sweeps, toy fits, 2-d synthetic study, holdout
uncertainty, and regression benchmarks, all emitting CSV/SVG bundles.

Every suite is deterministic given its config (RFF and data seeds are
explicit), so reruns of the same config hash reproduce tables
bit-identically.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__ as _pkg_version
from .data import Dataset, gen_gp2d, gen_schaffer, gen_toy, ingest_csv, split, toy_test_grid
from .errors import ConfigError
from .features import (
    approx_error_curve,
    approx_error_sweep,
    build_feature_map,
    nodes_for_features,
)
from .gp import (
    OptConfig,
    ff_fit,
    ff_make_model,
    ff_predict,
    full_gp_fit,
    full_gp_predict,
    kl_gaussian,
    metrics,
)
from .kernels import Hyperparams, KernelSpec, truncation_tail
from .report import ReportBundle, config_hash, svg_line_plot

SUITES = ("toy", "kernel-sweep", "gamma-sweep", "synthetic-2d",
          "holdout-uncertainty", "benchmark")

_DEFAULT_TOY_SIZES = {"tqff": 70, "glff": 70, "ghff": 30, "rff": 300}


@dataclass
class ExperimentConfig:
    experiment: str
    methods: list = field(default_factory=lambda: ["tqff", "glff", "ghff", "rff"])
    sizes: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    lengthscales: list = field(default_factory=lambda: [0.05])
    gamma: float = 1.15
    gammas: list = field(default_factory=lambda: [0.5, 0.8, 1.0, 1.15, 1.5])
    theta: float = 0.05          # generator lengthscale (gp2d)
    n_train: int = 2000
    n_test: int = 1000
    tau_grid_n: int = 100
    data: str | None = None      # CSV path for benchmark/holdout
    iters: int = 150
    lr: float = 0.05
    sizes_by_method: dict = field(default_factory=dict)
    outdir: str = "reports"
    figures: bool = True

    def __post_init__(self):
        if self.experiment not in SUITES:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; pick one of {SUITES}")
        if not self.methods:
            raise ConfigError("methods must be nonempty")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown config fields: {sorted(bad)}")
        return cls(**d)


def _manifest(config: ExperimentConfig) -> dict:
    cd = config.to_dict()
    return {
        "config": cd,
        "config_hash": config_hash(cd),
        "seeds": list(config.seeds),
        "versions": {"tqff": _pkg_version, "numpy": np.__version__},
        "backend": __import__("tqff.accel", fromlist=["backend_name"]).backend_name(),
        "status": "ok",
    }


def _map_cells(fn, items):
    workers = int(os.environ.get("TQFF_THREADS", "1") or "1")
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _tau_grid(dim: int, n: int, seed: int = 0):
    if dim == 1:
        return np.linspace(0.0, 1.0, n)[:, None]
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, (n, dim))


def _spec_for(theta, gamma, dim=1, scale=1.0, noise=0.01):
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if theta.size == 1 and dim > 1:
        theta = np.full(dim, theta[0])
    return KernelSpec("se", Hyperparams(theta, scale, noise), gamma, theta.size)


def _tau_label(t):
    if len(t) == 1:
        return float(t[0])
    return ";".join(f"{v:.17g}" for v in t)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _run_kernel_sweep(config: ExperimentConfig, bundle: ReportBundle):
    sizes = config.sizes or list(range(10, 201, 10))
    taus = _tau_grid(1, config.tau_grid_n)
    summary, raw = [], []
    for theta in config.lengthscales:
        spec = _spec_for(theta, config.gamma)
        recs = approx_error_sweep(config.methods, spec, sizes, taus,
                                  seeds=config.seeds)
        for r in recs:
            summary.append([r["method"], theta, r["S"], r["mean_abs_error"],
                            r["max_abs_error"]])
            for t, e in zip(taus, r["errors"]):
                raw.append([r["method"], theta, r["S"], _tau_label(t), e])
        if config.figures:
            series = []
            for m in config.methods:
                pts = [(r["S"], r["mean_abs_error"]) for r in recs
                       if r["method"] == m]
                series.append((m, [p[0] for p in pts], [p[1] for p in pts]))
            bundle.add_figure(
                f"kernel_sweep_theta_{theta:g}",
                svg_line_plot(series, title=f"mean |k - approx|, theta={theta:g}",
                              xlabel="features S", ylabel="mean abs error",
                              logy=True))
    bundle.add_table("kernel_sweep_summary",
                     ["method", "theta", "S", "mean_abs_error", "max_abs_error"],
                     summary)
    bundle.add_table("kernel_sweep_errors",
                     ["method", "theta", "S", "tau", "abs_error"], raw)


def _run_gamma_sweep(config: ExperimentConfig, bundle: ReportBundle):
    methods = [m for m in config.methods if m in ("tqff", "glff")] or ["tqff", "glff"]
    sizes = config.sizes or [4, 8, 12, 16, 24, 32, 48, 64, 80]
    theta = config.lengthscales[0]
    taus = _tau_grid(1, config.tau_grid_n)
    rows = []
    for gamma in config.gammas:
        spec = _spec_for(theta, gamma)
        tail = truncation_tail(spec)
        recs = approx_error_sweep(methods, spec, sizes, taus)
        for r in recs:
            rows.append([r["method"], gamma, r["S"], r["mean_abs_error"],
                         r["max_abs_error"], tail])
        if config.figures:
            series = [(m, [r["S"] for r in recs if r["method"] == m],
                       [r["mean_abs_error"] for r in recs if r["method"] == m])
                      for m in methods]
            bundle.add_figure(
                f"gamma_sweep_{gamma:g}",
                svg_line_plot(series, title=f"gamma={gamma:g}, theta={theta:g}",
                              xlabel="features S", ylabel="mean abs error",
                              logy=True))
    bundle.add_table(
        "gamma_sweep",
        ["method", "gamma", "S", "mean_abs_error", "max_abs_error",
         "truncation_tail"], rows)


def toy_reference_fit(config: ExperimentConfig, data: Dataset):
    """Full-GP hyperparameters for the toy series (shared by all methods)."""
    opt = OptConfig(lr=config.lr, iters=config.iters,
                    init_lengthscales=np.array([0.1]))
    spec0 = _spec_for(0.1, config.gamma)
    spec, history = full_gp_fit(spec0, data.X, data.y, opt)
    return spec, history


def _run_toy(config: ExperimentConfig, bundle: ReportBundle):
    seed = config.seeds[0]
    data = gen_toy(config.n_train, seed)
    grid = toy_test_grid(config.n_test)
    spec, history = toy_reference_fit(config, data)
    full_pred = full_gp_predict(spec, data.X, data.y, grid)

    sizes = dict(_DEFAULT_TOY_SIZES)
    sizes.update({k: int(v) for k, v in config.sizes_by_method.items()})
    pred_rows = [[float(grid[i, 0]), "full", float(full_pred.means[i]),
                  float(full_pred.sd_obs[i]), float(full_pred.sd_latent[i])]
                 for i in range(len(grid))]
    curve_rows = []
    taus = np.linspace(-1.0, 1.0, 2 * config.tau_grid_n + 1)[:, None]
    from .kernels import kernel_eval
    from .features import gram_against_origin

    series = [("full", grid[:, 0], full_pred.means)]
    for method in config.methods:
        S = sizes.get(method, 70)
        size = S if method == "rff" else nodes_for_features(1, S)
        fmap = build_feature_map(method, spec, size,
                                 seed=seed if method == "rff" else None)
        model = ff_make_model(fmap, spec.hyper, data.X, data.y)
        pred = ff_predict(model, grid)
        label = f"{method}-S{fmap.n_frequencies}"
        series.append((label, grid[:, 0], pred.means))
        for i in range(len(grid)):
            pred_rows.append([float(grid[i, 0]), label, float(pred.means[i]),
                              float(pred.sd_obs[i]), float(pred.sd_latent[i])])
        approx = gram_against_origin(fmap, taus, spec.hyper)
        for t, a in zip(taus[:, 0], approx):
            curve_rows.append([label, float(t), kernel_eval(spec, [t]), float(a)])
    bundle.add_table("toy_predictions",
                     ["x", "method", "mean", "sd_obs", "sd_latent"], pred_rows)
    bundle.add_table("toy_kernel_curve", ["method", "tau", "kernel", "approx"],
                     curve_rows)
    bundle.manifest["toy_hyper"] = spec.hyper.to_dict()
    bundle.manifest["toy_final_nll"] = history[-1] if history else None
    if config.figures:
        bundle.add_figure("toy_predictions",
                          svg_line_plot(series, title="toy predictions",
                                        xlabel="x", ylabel="mean",
                                        markers=False))


def _run_synthetic_2d(config: ExperimentConfig, bundle: ReportBundle):
    methods = [m for m in config.methods if m != "ghff"] or ["tqff", "glff", "rff"]
    sizes = config.sizes or [128, 200]
    rows = []
    for seed in config.seeds:
        data = gen_gp2d(config.n_train + config.n_test, config.theta, seed)
        Xtr, ytr = data.X[:config.n_train], data.y[:config.n_train]
        Xte, yte = data.X[config.n_train:], data.y[config.n_train:]
        truth = _spec_for(config.theta, config.gamma, dim=2)
        ref = full_gp_predict(truth, Xtr, ytr, Xte)
        ref_metrics = metrics(ref, yte)
        rows.append(["full", 0, seed, ref_metrics["rmse"], ref_metrics["nll"]])

        def run_cell(cell):
            method, S = cell
            size = S if method == "rff" else nodes_for_features(2, S)
            spec0 = _spec_for(config.theta, config.gamma, dim=2)
            fmap = build_feature_map(method, spec0, size,
                                     seed=seed if method == "rff" else None)
            opt = OptConfig(lr=config.lr, iters=config.iters)
            model = ff_fit(fmap, Xtr, ytr, opt)
            pred = ff_predict(model, Xte)
            got = metrics(pred, yte)
            return [method, fmap.n_frequencies, seed, got["rmse"], got["nll"]]

        cells = [(m, S) for m in methods for S in sizes]
        rows.extend(_map_cells(run_cell, cells))
    bundle.add_table("synthetic2d_metrics",
                     ["method", "S", "seed", "rmse", "nll"], rows)
    if config.figures:
        series = []
        for m in methods:
            pts = {}
            for r in rows:
                if r[0] == m:
                    pts.setdefault(r[1], []).append(r[4])
            Ss = sorted(pts)
            series.append((m, Ss, [float(np.mean(pts[S])) for S in Ss]))
        bundle.add_figure("synthetic2d_nll",
                          svg_line_plot(series, title="2-d GP draws: test NLL",
                                        xlabel="features S", ylabel="NLL"))


def holdout_series(config: ExperimentConfig, seed: int):
    """Toy-style series with 5 contiguous segments (about 20% of the span)
    held out; seeded segment placement."""
    rng = np.random.default_rng(seed)
    n = config.n_train
    x = np.sort(rng.uniform(0.0, 1.0, n))
    from .data import toy_function

    y = toy_function(x) + 0.1 * rng.standard_normal(n)
    y = (y - y.mean()) / y.std()
    # one segment per fifth of the domain, each 4% of the span (20% total)
    seg_len = 0.04
    starts = [i / 5.0 + rng.uniform(0.02, 0.2 - seg_len - 0.02)
              for i in range(5)]
    mask_hold = np.zeros(n, dtype=bool)
    for s in starts:
        mask_hold |= (x >= s) & (x < s + seg_len)
    return x[:, None], y, mask_hold, starts


def _run_holdout(config: ExperimentConfig, bundle: ReportBundle):
    seed = config.seeds[0]
    X, y, hold, starts = holdout_series(config, seed)
    Xtr, ytr = X[~hold], y[~hold]
    Xho, yho = X[hold], y[hold]
    opt = OptConfig(lr=config.lr, iters=config.iters,
                    init_lengthscales=np.array([0.1]))
    spec, _ = full_gp_fit(_spec_for(0.1, config.gamma), Xtr, ytr, opt)
    full_pred = full_gp_predict(spec, Xtr, ytr, Xho)

    sizes = config.sizes or [10, 20, 40, 70, 100, 140]
    rows, kl_rows = [], []
    for method in config.methods:
        for S in sizes:
            size = S if method == "rff" else nodes_for_features(1, S)
            fmap = build_feature_map(method, spec, size,
                                     seed=seed if method == "rff" else None)
            model = ff_make_model(fmap, spec.hyper, Xtr, ytr)
            pred = ff_predict(model, Xho)
            kl = kl_gaussian(full_pred, pred)
            got = metrics(pred, yho)
            rows.append([method, fmap.n_frequencies, float(np.mean(kl)),
                         float(np.max(kl)), got["rmse"], got["nll"]])
            for i in range(len(yho)):
                kl_rows.append([method, fmap.n_frequencies, float(Xho[i, 0]),
                                float(kl[i])])
    bundle.add_table("holdout_kl_vs_s",
                     ["method", "S", "mean_kl", "max_kl", "rmse", "nll"], rows)
    bundle.add_table("holdout_pointwise_kl", ["method", "S", "x", "kl"], kl_rows)
    bundle.manifest["holdout_segments"] = [float(s) for s in starts]
    bundle.manifest["holdout_hyper"] = spec.hyper.to_dict()
    if config.figures:
        series = []
        for m in config.methods:
            pts = [(r[1], r[2]) for r in rows if r[0] == m]
            series.append((m, [p[0] for p in pts], [p[1] for p in pts]))
        bundle.add_figure("holdout_kl",
                          svg_line_plot(series, title="mean KL from full GP",
                                        xlabel="features S", ylabel="KL",
                                        logy=True))


def _run_benchmark(config: ExperimentConfig, bundle: ReportBundle):
    if config.data:
        base = ingest_csv(config.data)
    else:
        base = gen_schaffer(config.n_train + config.n_test,
                            config.seeds[0]).normalized()
    sizes = config.sizes or [32, 72, 128]
    rows = []
    for seed in config.seeds:
        train, test = split(base, 0.8, seed)
        for method in config.methods:
            for S in sizes:
                size = S if method == "rff" else nodes_for_features(base.dim, S)
                spec0 = _spec_for([0.5] * base.dim, config.gamma, dim=base.dim)
                fmap = build_feature_map(method, spec0, size,
                                         seed=seed if method == "rff" else None)
                opt = OptConfig(lr=config.lr, iters=config.iters)
                model = ff_fit(fmap, train.X, train.y, opt)
                pred = ff_predict(model, test.X)
                got = metrics(pred, test.y)
                rows.append([method, fmap.n_frequencies, seed, got["rmse"],
                             got["nll"]])
    bundle.add_table("benchmark_metrics",
                     ["method", "S", "seed", "rmse", "nll"], rows)
    if config.figures:
        series = []
        for m in config.methods:
            pts = {}
            for r in rows:
                if r[0] == m:
                    pts.setdefault(r[1], []).append(r[4])
            Ss = sorted(pts)
            series.append((m, Ss, [float(np.mean(pts[S])) for S in Ss]))
        bundle.add_figure("benchmark_nll",
                          svg_line_plot(series, title="benchmark test NLL",
                                        xlabel="features S", ylabel="NLL"))


_RUNNERS = {
    "toy": _run_toy,
    "kernel-sweep": _run_kernel_sweep,
    "gamma-sweep": _run_gamma_sweep,
    "synthetic-2d": _run_synthetic_2d,
    "holdout-uncertainty": _run_holdout,
    "benchmark": _run_benchmark,
}


def run_experiment(config: ExperimentConfig) -> ReportBundle:
    """Execute a suite; on failure, flush whatever tables exist along with
    a failure manifest, then re-raise."""
    bundle = ReportBundle(_manifest(config))
    try:
        _RUNNERS[config.experiment](config, bundle)
    except Exception as exc:
        bundle.manifest["status"] = f"failed: {type(exc).__name__}: {exc}"
        bundle.write(config.outdir)
        raise
    return bundle
