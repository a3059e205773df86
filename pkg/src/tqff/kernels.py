"""Stationary kernels and their standardized spectral decompositions.

A kernel family is usable here when its spectral density can be written as
a hyperparameter-free per-dimension density plus a scalar output scale and
a diagonal frequency scaling.  Only the squared-exponential family ships;
the registry is the extension point for Matern-type families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedFamily
from .oracle import gaussian_tail

PI_LD = np.longdouble("3.14159265358979323846264338327950288420")
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * PI_LD)


class StandardNormalDensity:
    """Standard normal spectral density (SE kernel after standardization)."""

    name = "standard_normal"

    @staticmethod
    def pdf(w):
        w = np.asarray(w)
        return _INV_SQRT_2PI.astype(w.dtype) * np.exp(-0.5 * w * w)

    @staticmethod
    def cdf(x: float) -> float:
        return 0.5 * math.erfc(-x / math.sqrt(2.0))

    @staticmethod
    def tail(c: float) -> float:
        """Upper-tail mass beyond c."""
        return gaussian_tail(c)

    @staticmethod
    def char(b: float) -> float:
        """E[cos(b w)] under the density (its cosine transform)."""
        return math.exp(-0.5 * b * b)


_FAMILIES = {"se": StandardNormalDensity}


@dataclass(frozen=True)
class Hyperparams:
    lengthscales: np.ndarray  # (d,), input units
    scale: float              # output-variance units
    noise: float              # observation noise variance

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=np.float64))
        object.__setattr__(self, "lengthscales", ls)
        if ls.ndim != 1 or ls.size < 1:
            raise ValueError("lengthscales must be a 1-d vector")
        if np.any(ls <= 0) or self.scale <= 0 or self.noise <= 0:
            raise ValueError("lengthscales, scale, and noise must be positive")

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    def to_dict(self):
        return {
            "lengthscales": [float(v) for v in self.lengthscales],
            "scale": float(self.scale),
            "noise": float(self.noise),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["lengthscales"], dtype=np.float64),
                   float(d["scale"]), float(d["noise"]))


@dataclass(frozen=True)
class KernelSpec:
    family: str
    hyper: Hyperparams
    gamma: float
    dim: int

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise UnsupportedFamily(f"unknown kernel family {self.family!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.dim != self.hyper.dim:
            raise ValueError(
                f"dim {self.dim} does not match lengthscale count {self.hyper.dim}"
            )

    def densities(self):
        """Per-dimension standardized densities (hyperparameter-free)."""
        density = _FAMILIES[self.family]()
        return [density] * self.dim

    def signal_scale(self) -> float:
        """Scalar output-variance factor of the spectral decomposition."""
        return float(self.hyper.scale)

    def frequency_scaling(self) -> np.ndarray:
        """Diagonal of the frequency-scaling matrix: 1/lengthscale per dim."""
        return 1.0 / self.hyper.lengthscales

    def with_hyper(self, hyper: Hyperparams) -> "KernelSpec":
        return KernelSpec(self.family, hyper, self.gamma, self.dim)

    def to_dict(self):
        d = {"family": self.family, "gamma": float(self.gamma), "dim": self.dim}
        d.update(self.hyper.to_dict())
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], Hyperparams.from_dict(d), float(d["gamma"]),
                   int(d["dim"]))


@dataclass(frozen=True)
class SpectralDecomposition:
    densities: list
    signal_scale: float
    frequency_scaling: np.ndarray = field(repr=False)


def standardized_density(spec: KernelSpec) -> SpectralDecomposition:
    """Decompose the kernel into hyperparameter-free per-dimension densities
    plus the scalar and diagonal scaling factors."""
    return SpectralDecomposition(spec.densities(), spec.signal_scale(),
                                 spec.frequency_scaling())


def kernel_eval(spec: KernelSpec, tau) -> float:
    """Closed-form stationary kernel value at lag tau."""
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    if tau.size != spec.dim:
        raise ValueError(f"tau must have {spec.dim} entries")
    z = tau / spec.hyper.lengthscales
    return float(spec.hyper.scale * np.exp(-0.5 * np.dot(z, z)))


def _tail_constant(spec: KernelSpec) -> float:
    """C_d = g(Theta) * d * 2^(d-1)."""
    return spec.signal_scale() * spec.dim * 2.0 ** (spec.dim - 1)


def truncation_tail(spec: KernelSpec) -> float:
    """Contribution of spectral mass outside the truncation window
    [-gamma*pi, gamma*pi]: 2 * C_d * upper-tail mass beyond gamma*pi."""
    density = spec.densities()[0]
    return 2.0 * _tail_constant(spec) * density.tail(spec.gamma * math.pi)


def approx_error_bound(spec: KernelSpec, L: int) -> float:
    """Uniform bound on |k(x, x') - Phi(x)^T Phi(x')| for x, x' in [0,1]^d,
    for the trigonometric quadrature map with L nodes per dimension.

    Sum of the truncation tail and an interpolation-error term; the
    factorial ratio is evaluated in log space (M can exceed 100 for small
    lengthscales).  Returns +inf if the quadrature term overflows.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    M = math.ceil(spec.gamma / float(np.min(spec.hyper.lengthscales)))
    cd = _tail_constant(spec)
    log_pref = math.log(math.pi + 4.0 + 2.0 * math.log((2.0 / math.pi) * (4 * L - 1)))
    log_term = (
        log_pref
        + math.lgamma(max(M, 2 * L - 1) + 1)
        - math.lgamma(M)
        - math.log(2.0)
        - max(1, 2 * L - M) * math.log(2.0 * L)
    )
    if log_term > 700.0:
        return math.inf
    return truncation_tail(spec) + cd * math.exp(log_term)
