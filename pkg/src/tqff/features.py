"""Fourier feature maps: TQFF, GLFF, GHFF, and RFF.

A map stores S standardized frequencies (hyperparameter-free for the
quadrature methods) and the square roots of its quadrature weights; the
output-scale factor and per-dimension frequency scaling are applied at
evaluation time, so one map serves every hyperparameter setting during
training.  Feature vectors are 2S-dimensional: cosine block then sine
block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .accel import design_blocks
from .errors import ConfigError, SeedRequired, UnsupportedFamily
from .kernels import KernelSpec, Hyperparams, kernel_eval

METHODS = ("tqff", "glff", "ghff", "rff")


@dataclass(frozen=True)
class FeatureMap:
    method: str
    frequencies: np.ndarray   # (S, d), standardized radians
    sqrt_weights: np.ndarray  # (S,), sqrt of quadrature weights (no output scale)
    spec: KernelSpec
    seed: int | None = None

    def __post_init__(self):
        freqs = np.atleast_2d(np.asarray(self.frequencies, dtype=np.float64))
        sw = np.asarray(self.sqrt_weights, dtype=np.float64)
        freqs.setflags(write=False)
        sw.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "sqrt_weights", sw)
        if self.method not in METHODS:
            raise ConfigError(f"unknown feature method {self.method!r}")
        if freqs.shape != (sw.size, self.spec.dim):
            raise ConfigError("frequencies/sqrt_weights shapes inconsistent")

    @property
    def n_frequencies(self) -> int:
        return self.sqrt_weights.size

    @property
    def feature_dim(self) -> int:
        return 2 * self.sqrt_weights.size

    @property
    def dim(self) -> int:
        return self.spec.dim

    def input_scale(self, hyper: Hyperparams | None = None) -> np.ndarray:
        """Per-dimension multiplier applied to inputs before the frequency
        dot product.  TQFF frequencies live on the gamma-compressed window,
        so they carry an extra gamma."""
        hyper = hyper or self.spec.hyper
        scale = 1.0 / hyper.lengthscales
        if self.method == "tqff":
            scale = scale * self.spec.gamma
        return scale

    def weight_sum(self) -> float:
        """Sum of quadrature weights (the truncated zeroth moment)."""
        return float(np.dot(self.sqrt_weights, self.sqrt_weights))

    def to_dict(self):
        return {
            "method": self.method,
            "S": int(self.n_frequencies),
            "dim": int(self.spec.dim),
            "gamma": float(self.spec.gamma),
            "seed": self.seed,
            "frequencies": [float(v) for v in self.frequencies.ravel()],
            "sqrt_weights": [float(v) for v in self.sqrt_weights],
        }

    @classmethod
    def from_dict(cls, d, spec: KernelSpec) -> "FeatureMap":
        S = int(d["S"])
        dim = int(d["dim"])
        freqs = np.asarray(d["frequencies"], dtype=np.float64).reshape(S, dim)
        return cls(d["method"], freqs, np.asarray(d["sqrt_weights"]), spec,
                   d.get("seed"))


def quadrature_feature_count(dim: int, L: int) -> int:
    """Features produced by an L-node-per-dimension quadrature map."""
    return (2 * L) ** dim // 2


def nodes_for_features(dim: int, S: int) -> int:
    """Smallest per-dimension node count whose map has at least S features."""
    if S < 1:
        raise ConfigError("feature count must be >= 1")
    L = max(1, math.ceil((2 * S) ** (1.0 / dim) / 2.0))
    while quadrature_feature_count(dim, L) < S:
        L += 1
    return L


# Quadrature rules depend only on (density, gamma, L), never on
# hyperparameters, so sweeps across lengthscales can share them.
_TRIG_RULE_CACHE: dict = {}


def _trig_rule_cached(density, gamma: float, L: int):
    key = (density.name, float(gamma), int(L))
    rule = _TRIG_RULE_CACHE.get(key)
    if rule is None:
        rule = quad.trig_rule(density, gamma, L)
        _TRIG_RULE_CACHE[key] = rule
    return rule


def _tqff_arrays(spec: KernelSpec, L: int):
    rules = [_trig_rule_cached(d, spec.gamma, L) for d in spec.densities()]
    tensor = quad.tensor_product(rules)
    return tensor.frequencies, tensor.weights


def _glff_arrays(spec: KernelSpec, L: int):
    densities = spec.densities()
    window = spec.gamma * math.pi
    base = quad.halve_symmetric(quad.gauss_legendre_rule(2 * L, (-window, window)))
    nodes_list, weights_list = [], []
    for density in densities:
        dens_at = np.asarray(density.pdf(base.nodes), dtype=np.float64)
        # nodes back in standardized units; weights absorb the density values
        nodes_list.append(base.nodes / spec.gamma)
        weights_list.append(base.weights * dens_at)
    return quad.mirror_halfspace_tensor(nodes_list, weights_list)


def _ghff_arrays(spec: KernelSpec, L: int):
    densities = spec.densities()
    if any(d.name != "standard_normal" for d in densities):
        raise UnsupportedFamily("GHFF requires the squared-exponential kernel")
    base = quad.halve_symmetric(quad.gauss_hermite_rule(2 * L))
    # change of variables from weight exp(-w^2) to the standard normal
    nodes = base.nodes * math.sqrt(2.0)
    weights = base.weights / math.sqrt(math.pi)
    return quad.mirror_halfspace_tensor([nodes] * spec.dim, [weights] * spec.dim)


def build_feature_map(method: str, spec: KernelSpec, size: int,
                      seed: int | None = None) -> FeatureMap:
    """Construct a feature map.

    For the quadrature methods (tqff/glff/ghff), ``size`` is the
    per-dimension node count L; the map has (2L)^d / 2 frequencies.  For
    rff, ``size`` is the frequency count S directly and ``seed`` is
    required (counter-based generator, recorded in the map).
    """
    if size < 1:
        raise ConfigError(f"size must be >= 1, got {size}")
    method = method.lower()
    if method == "rff":
        if seed is None:
            raise SeedRequired("rff maps require an explicit seed")
        rng = np.random.Generator(np.random.Philox(seed))
        freqs = rng.standard_normal((size, spec.dim))
        sqrtw = np.full(size, 1.0 / math.sqrt(size))
        return FeatureMap("rff", freqs, sqrtw, spec, seed)
    if method == "tqff":
        freqs, weights = _tqff_arrays(spec, size)
    elif method == "glff":
        freqs, weights = _glff_arrays(spec, size)
    elif method == "ghff":
        freqs, weights = _ghff_arrays(spec, size)
    else:
        raise ConfigError(f"unknown feature method {method!r}")
    return FeatureMap(method, freqs, np.sqrt(weights), spec)


def design_matrix(fmap: FeatureMap, X, hyper: Hyperparams | None = None):
    """2S x n design matrix; column i is the feature vector of x_i."""
    hyper = hyper or fmap.spec.hyper
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != fmap.dim:
        raise ConfigError(f"X must be (n, {fmap.dim})")
    Xs = X * fmap.input_scale(hyper)[None, :]
    sw = fmap.sqrt_weights * math.sqrt(hyper.scale)
    return design_blocks(Xs, fmap.frequencies, sw)


def feature_vector(fmap: FeatureMap, x, hyper: Hyperparams | None = None):
    """The 2S feature vector of a single input point."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return design_matrix(fmap, x[None, :], hyper)[:, 0]


def gram_against_origin(fmap: FeatureMap, taus, hyper: Hyperparams | None = None):
    """Phi(0)^T Phi(tau) for a grid of lags — the approximated kernel curve."""
    hyper = hyper or fmap.spec.hyper
    taus = np.atleast_2d(np.asarray(taus, dtype=np.float64))
    args = fmap.frequencies @ (taus * fmap.input_scale(hyper)[None, :]).T
    weights = fmap.sqrt_weights**2
    return hyper.scale * (weights @ np.cos(args))


def approx_error_curve(fmap: FeatureMap, taus, hyper: Hyperparams | None = None):
    """|k(tau) - Phi(0)^T Phi(tau)| over a lag grid."""
    hyper = hyper or fmap.spec.hyper
    spec = fmap.spec.with_hyper(hyper)
    taus = np.atleast_2d(np.asarray(taus, dtype=np.float64))
    approx = gram_against_origin(fmap, taus, hyper)
    exact = np.array([kernel_eval(spec, t) for t in taus])
    return np.abs(exact - approx)


def approx_error_sweep(methods, spec: KernelSpec, sizes, taus, seeds=(0,)):
    """Absolute kernel-approximation errors per (method, feature count).

    ``sizes`` are feature counts S; quadrature methods use the smallest
    per-dimension L reaching S (and report the realized S).  RFF errors
    are averaged pointwise over ``seeds``.  Returns a list of records
    with mean/max error and the raw per-lag error vector.
    """
    taus = np.atleast_2d(np.asarray(taus, dtype=np.float64))
    records = []
    for method in methods:
        method = method.lower()
        for S in sizes:
            if method == "rff":
                errs = np.zeros(taus.shape[0])
                for seed in seeds:
                    fmap = build_feature_map("rff", spec, S, seed=seed)
                    errs += approx_error_curve(fmap, taus)
                errs /= len(seeds)
                realized = S
            else:
                L = nodes_for_features(spec.dim, S)
                fmap = build_feature_map(method, spec, L)
                errs = approx_error_curve(fmap, taus)
                realized = fmap.n_frequencies
            records.append({
                "method": method,
                "S": int(realized),
                "requested_S": int(S),
                "mean_abs_error": float(np.mean(errs)),
                "max_abs_error": float(np.max(errs)),
                "errors": errs,
            })
    return records
