"""Gaussian-process regression, exact and feature-space.

The exact path forms the dense n x n covariance and is capped at desk
scale; the feature-space path never materializes an n x n matrix and works
through the 2S x 2S system A = Lambda Lambda^T + sigma^2 I (matrix
inversion / determinant lemmas), giving O(S^3 + S^2 n) training and
prediction.  Hyperparameters are optimized in log space with Adam and
analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotri


def _chol_inverse(L):
    """Full inverse from a lower Cholesky factor (LAPACK potri)."""
    inv, info = dpotri(L, lower=1)
    if info != 0:
        raise CholeskyFailure(f"potri failed with info={info}")
    return inv + np.tril(inv, -1).T

from .accel import se_gram
from .errors import (
    CapExceeded,
    CholeskyFailure,
    LengthMismatch,
    NonFiniteLoss,
)
from .features import FeatureMap, design_matrix
from .kernels import Hyperparams, KernelSpec

FULL_GP_CAP = 6000
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PredictiveDistribution:
    means: np.ndarray
    variances: np.ndarray         # observation level (includes noise)
    latent_variances: np.ndarray  # function values only

    def __post_init__(self):
        for name in ("means", "variances", "latent_variances"):
            object.__setattr__(self, name, np.asarray(getattr(self, name),
                                                      dtype=np.float64))

    @property
    def sd_obs(self):
        return np.sqrt(np.maximum(self.variances, 0.0))

    @property
    def sd_latent(self):
        return np.sqrt(np.maximum(self.latent_variances, 0.0))


@dataclass
class OptConfig:
    lr: float = 0.01
    iters: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_lengthscales: np.ndarray | None = None
    init_scale: float | None = None
    init_noise: float | None = None

    def to_dict(self):
        return {"lr": self.lr, "iters": self.iters}


def default_init(X, y, config: OptConfig) -> Hyperparams:
    """Initialization: half the per-dimension input range, output variance,
    and a tenth of it as noise, unless overridden."""
    X = np.atleast_2d(X)
    vary = float(np.var(y)) if len(y) > 1 else 1.0
    vary = max(vary, 1e-12)
    if config.init_lengthscales is not None:
        ls = np.atleast_1d(np.asarray(config.init_lengthscales, dtype=np.float64))
        if ls.size == 1:
            ls = np.full(X.shape[1], ls[0])
    else:
        spans = np.maximum(X.max(axis=0) - X.min(axis=0), 1e-3)
        ls = 0.5 * spans
    scale = config.init_scale if config.init_scale is not None else vary
    noise = config.init_noise if config.init_noise is not None else 0.1 * vary
    return Hyperparams(ls, float(scale), float(noise))


def adam_minimize(fun, x0, config: OptConfig):
    """Plain Adam loop; ``fun`` returns (loss, grad).  Returns the final
    parameter vector and the recorded loss history."""
    x = np.asarray(x0, dtype=np.float64).copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history = []
    for t in range(1, config.iters + 1):
        loss, grad = fun(x)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(t)
        history.append(float(loss))
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        mhat = m / (1.0 - config.beta1**t)
        vhat = v / (1.0 - config.beta2**t)
        x = x - config.lr * mhat / (np.sqrt(vhat) + config.eps)
    return x, history


# ---------------------------------------------------------------------------
# Exact full GP
# ---------------------------------------------------------------------------

def _full_cov_chol(spec: KernelSpec, X):
    """Cholesky of K + (noise + jitter) I with escalating jitter."""
    n = X.shape[0]
    K = se_gram(X, X, spec.frequency_scaling(), spec.hyper.scale)
    base = K + spec.hyper.noise * np.eye(n)
    jitter = 1e-8 * spec.hyper.scale
    while jitter <= 1e-4 * spec.hyper.scale * (1.0 + 1e-9):
        try:
            L = cholesky(base + jitter * np.eye(n), lower=True)
            return K, L
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise CholeskyFailure("covariance not positive definite after max jitter")


def _check_cap(n: int):
    if n > FULL_GP_CAP:
        raise CapExceeded(f"exact GP capped at n <= {FULL_GP_CAP}, got {n}")


def full_gp_loglik(spec: KernelSpec, X, y) -> float:
    """Exact Gaussian log marginal likelihood of y under the kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    _check_cap(X.shape[0])
    _, L = _full_cov_chol(spec, X)
    alpha = cho_solve((L, True), y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (float(y @ alpha) + logdet + len(y) * _LOG_2PI)


def full_gp_predict(spec: KernelSpec, X, y, Xtest) -> PredictiveDistribution:
    """Exact conditional-Gaussian prediction."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xtest = np.atleast_2d(np.asarray(Xtest, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    _check_cap(X.shape[0])
    _, L = _full_cov_chol(spec, X)
    alpha = cho_solve((L, True), y)
    Ks = se_gram(Xtest, X, spec.frequency_scaling(), spec.hyper.scale)
    means = Ks @ alpha
    V = solve_triangular(L, Ks.T, lower=True)
    latent = spec.hyper.scale - np.sum(V * V, axis=0)
    latent = np.maximum(latent, 0.0)
    return PredictiveDistribution(means, latent + spec.hyper.noise, latent)


def full_gp_fit(spec: KernelSpec, X, y, config: OptConfig | None = None):
    """Adam maximization of the exact log marginal likelihood.

    Returns (fitted spec, loss history).  O(n^3) per iteration; intended
    for desk-scale baselines only.
    """
    config = config or OptConfig()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    _check_cap(n)
    eye = np.eye(n)
    dsq = [np.subtract.outer(X[:, j], X[:, j]) ** 2 for j in range(d)]

    def nll_grad(params):
        hyper = _params_to_hyper(params, d)
        sp = spec.with_hyper(hyper)
        K = se_gram(X, X, sp.frequency_scaling(), hyper.scale)
        base = K + hyper.noise * eye
        jitter = 1e-8 * hyper.scale
        L = None
        while jitter <= 1e-4 * hyper.scale * (1.0 + 1e-9):
            try:
                L = cholesky(base + jitter * eye, lower=True)
                break
            except np.linalg.LinAlgError:
                jitter *= 10.0
        if L is None:
            raise CholeskyFailure("covariance not positive definite in fit")
        alpha = cho_solve((L, True), y)
        Kinv = _chol_inverse(L)
        nll = 0.5 * (float(y @ alpha) + 2.0 * float(np.sum(np.log(np.diag(L))))
                     + n * _LOG_2PI)
        W = Kinv - np.outer(alpha, alpha)
        grad = np.empty(d + 2)
        for j in range(d):
            dK = K * dsq[j] / hyper.lengthscales[j] ** 2
            grad[j] = 0.5 * float(np.sum(W * dK))
        grad[d] = 0.5 * float(np.sum(W * K))
        grad[d + 1] = 0.5 * hyper.noise * float(np.trace(W))
        return nll, grad

    x0 = _hyper_to_params(default_init(X, y, config))
    xf, history = adam_minimize(nll_grad, x0, config)
    return spec.with_hyper(_params_to_hyper(xf, d)), history


# ---------------------------------------------------------------------------
# Feature-space GP
# ---------------------------------------------------------------------------

def _params_to_hyper(params, d) -> Hyperparams:
    return Hyperparams(np.exp(params[:d]), math.exp(params[d]),
                       math.exp(params[d + 1]))


def _hyper_to_params(hyper: Hyperparams):
    return np.concatenate((np.log(hyper.lengthscales),
                           [math.log(hyper.scale), math.log(hyper.noise)]))


def _ff_factorize(fmap: FeatureMap, hyper: Hyperparams, X, y):
    """Design matrix, Cholesky of A = Lam Lam^T + noise I, and A^{-1} Lam y."""
    lam = design_matrix(fmap, X, hyper)
    twoS = lam.shape[0]
    A = lam @ lam.T + hyper.noise * np.eye(twoS)
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"feature-space system not positive definite: {exc}")
    v = lam @ y
    w = cho_solve((L, True), v)
    return lam, L, v, w


def ff_loglik(fmap: FeatureMap, hyper: Hyperparams, X, y) -> float:
    """log N(y; 0, Lam^T Lam + noise I) without forming any n x n matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    _, L, v, w = _ff_factorize(fmap, hyper, X, y)
    twoS = L.shape[0]
    quad = (float(y @ y) - float(v @ w)) / hyper.noise
    logdet = 2.0 * float(np.sum(np.log(np.diag(L)))) \
        + (n - twoS) * math.log(hyper.noise)
    return -0.5 * (quad + logdet + n * _LOG_2PI)


def ff_nll_grad(fmap: FeatureMap, hyper: Hyperparams, X, y):
    """Negative ff_loglik and its gradient in (log theta_j, log scale,
    log noise), computed through the 2S x 2S factorization."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    sigma2 = hyper.noise
    lam, L, v, w = _ff_factorize(fmap, hyper, X, y)
    twoS = lam.shape[0]
    S = twoS // 2
    Ainv = _chol_inverse(L)
    tr_ainv = float(np.trace(Ainv))
    yy = float(y @ y)
    vw = float(v @ w)
    ww = float(w @ w)
    nll = 0.5 * ((yy - vw) / sigma2
                 + 2.0 * float(np.sum(np.log(np.diag(L))))
                 + (n - twoS) * math.log(sigma2) + n * _LOG_2PI)

    grad = np.empty(d + 2)
    scale_vec = fmap.input_scale(hyper)
    lam_cos, lam_sin = lam[:S], lam[S:]
    lam_w = lam.T @ w
    for j in range(d):
        G = np.outer(fmap.frequencies[:, j] * scale_vec[j], X[:, j])
        B = np.concatenate((lam_sin * G, -(lam_cos * G)), axis=0)
        by_w = float((B @ y) @ w)
        bw_lw = float((B.T @ w) @ lam_w)
        dquad = -(2.0 * by_w - 2.0 * bw_lw) / sigma2
        dlogdet = 2.0 * float(np.sum(Ainv * (lam @ B.T)))
        grad[j] = 0.5 * (dquad + dlogdet)
    # log scale: Lam scales with sqrt(scale)
    grad[d] = 0.5 * (-ww + twoS - sigma2 * tr_ainv)
    # log noise
    dquad = -(yy - vw) / sigma2 + ww
    dlogdet = sigma2 * tr_ainv + (n - twoS)
    grad[d + 1] = 0.5 * (dquad + dlogdet)
    return nll, grad


@dataclass
class GPModel:
    fmap: FeatureMap
    hyper: Hyperparams
    chol: np.ndarray = field(repr=False)   # lower Cholesky of A
    alpha: np.ndarray = field(repr=False)  # A^{-1} Lam y
    n_train: int = 0
    opt: dict = field(default_factory=dict)
    loss_history: list = field(default_factory=list)

    def to_dict(self, normalization=None):
        return {
            "map": self.fmap.to_dict(),
            "kernel": self.fmap.spec.to_dict(),
            "hyper": self.hyper.to_dict(),
            "opt": self.opt,
            "normalization": normalization,
            "cache": {
                "n_train": int(self.n_train),
                "alpha": [float(a) for a in self.alpha],
                "chol": [float(c) for c in self.chol.ravel()],
            },
        }

    @classmethod
    def from_dict(cls, d) -> "GPModel":
        spec = KernelSpec.from_dict(d["kernel"])
        hyper = Hyperparams.from_dict(d["hyper"])
        fmap = FeatureMap.from_dict(d["map"], spec.with_hyper(hyper))
        alpha = np.asarray(d["cache"]["alpha"], dtype=np.float64)
        twoS = alpha.size
        chol = np.asarray(d["cache"]["chol"], dtype=np.float64).reshape(twoS, twoS)
        return cls(fmap, hyper, chol, alpha, int(d["cache"]["n_train"]),
                   d.get("opt", {}))


def ff_make_model(fmap: FeatureMap, hyper: Hyperparams, X, y,
                  opt: dict | None = None, history=None) -> GPModel:
    """Build (or rebuild) the cached factorization at fixed hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    _, L, _, w = _ff_factorize(fmap, hyper, X, y)
    return GPModel(fmap, hyper, L, w, X.shape[0], opt or {},
                   list(history or []))


def ff_fit(fmap: FeatureMap, X, y, config: OptConfig | None = None) -> GPModel:
    """Adam maximization of the feature-space marginal likelihood over
    log-domain hyperparameters; analytic gradients."""
    config = config or OptConfig()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    d = X.shape[1]

    def fun(params):
        return ff_nll_grad(fmap, _params_to_hyper(params, d), X, y)

    x0 = _hyper_to_params(default_init(X, y, config))
    xf, history = adam_minimize(fun, x0, config)
    hyper = _params_to_hyper(xf, d)
    return ff_make_model(fmap, hyper, X, y, config.to_dict(), history)


def ff_predict(model: GPModel, Xtest) -> PredictiveDistribution:
    """Feature-space prediction: mean Phi* A^{-1} Lam y, latent variance
    noise * Phi*^T A^{-1} Phi*."""
    Xtest = np.atleast_2d(np.asarray(Xtest, dtype=np.float64))
    phi = design_matrix(model.fmap, Xtest, model.hyper)
    means = phi.T @ model.alpha
    U = cho_solve((model.chol, True), phi)
    latent = model.hyper.noise * np.sum(phi * U, axis=0)
    latent = np.maximum(latent, 0.0)
    return PredictiveDistribution(means, latent + model.hyper.noise, latent)


# ---------------------------------------------------------------------------
# Evaluation metrics
# ---------------------------------------------------------------------------

def metrics(pred: PredictiveDistribution, ytrue) -> dict:
    """RMSE and mean negative log predictive density (observation level)."""
    ytrue = np.asarray(ytrue, dtype=np.float64)
    if ytrue.shape != pred.means.shape:
        raise LengthMismatch("prediction/target lengths differ")
    resid = pred.means - ytrue
    var = pred.variances
    if np.any(var <= 0):
        raise ValueError("non-positive predictive variance")
    nll = float(np.mean(0.5 * (np.log(2.0 * math.pi * var) + resid**2 / var)))
    return {"rmse": float(np.sqrt(np.mean(resid**2))), "nll": nll}


def kl_gaussian(p: PredictiveDistribution, q: PredictiveDistribution,
                latent: bool = False) -> np.ndarray:
    """Per-point KL(p_i || q_i) between univariate Gaussian predictive
    distributions (observation-level variances unless ``latent``)."""
    if p.means.shape != q.means.shape:
        raise LengthMismatch("distributions have different lengths")
    vp = p.latent_variances if latent else p.variances
    vq = q.latent_variances if latent else q.variances
    if np.any(vp <= 0) or np.any(vq <= 0):
        raise ValueError("non-positive variance in KL computation")
    return 0.5 * (np.log(vq / vp) + (vp + (p.means - q.means) ** 2) / vq - 1.0)
