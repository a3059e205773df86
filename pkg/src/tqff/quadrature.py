"""Quadrature rule construction.

Three rule families are built here through one pipeline — recurrence
coefficients, then nodes/weights from the Jacobi-matrix eigenproblem:

* cosine-polynomial rules for window-truncated spectral weights (the
  trigonometrically exact rules used by TQFF feature maps),
* classical Gauss-Hermite and Gauss-Legendre rules from their known
  recurrence coefficients,
* symmetric half-space tensor extensions for multi-dimensional maps.

Recurrence coefficients for the cosine family are obtained with a
discretized Stieltjes procedure: inner products are composite
Gauss-Legendre sums evaluated in extended precision, with the panel count
doubled until the coefficients stabilize.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .accel import tridiag_eigen_first
from .errors import (
    AbscissaOutOfRange,
    AsymmetricRule,
    ConfigError,
    DimensionMismatch,
    InvalidInterval,
    InvalidL,
    NodeAtZero,
    NonPositiveMoment,
    NumericalError,
    OddRule,
)

_LD = np.longdouble
_MIN_NODE_GAP = 1e-12
_WEIGHT_FLOOR = -1e-12
_Z_MARGIN = 1e-12

_STIELTJES_PANELS0 = 64
_STIELTJES_GL_POINTS = 32
_STIELTJES_TOL = 1e-13
_STIELTJES_MAX_PANELS = 4096


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """Three-term recurrence data: monic p_{k+1} = (z - B_k) p_k - A_k p_{k-1}."""

    diag: np.ndarray        # B_0 .. B_{L-1}
    offdiag_sq: np.ndarray  # A_1 .. A_{L-1}
    mu0: float              # zeroth moment of the weight
    length: int

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.float64)
        off = np.asarray(self.offdiag_sq, dtype=np.float64)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag_sq", off)
        if self.length < 1:
            raise InvalidL(f"L must be >= 1, got {self.length}")
        if diag.shape != (self.length,) or off.shape != (max(self.length - 1, 0),):
            raise ValueError("coefficient array lengths inconsistent with L")
        if self.mu0 <= 0:
            raise NonPositiveMoment(f"mu0 = {self.mu0} must be positive")
        if np.any(off <= 0):
            raise NonPositiveMoment("all A_k must be positive")


@dataclass(frozen=True)
class QuadratureRule1D:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str                 # trig | hermite | legendre
    domain: tuple             # integration interval of the weight
    exactness_degree: int
    mu0: float
    gamma: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes/weights must be matching 1-d arrays")
        if nodes.size > 1 and np.min(np.diff(nodes)) <= _MIN_NODE_GAP:
            raise NumericalError("nodes not strictly increasing (gap <= 1e-12)")
        if self.kind == "trig" and (nodes[0] < 0.0 or nodes[-1] >= math.pi):
            raise NumericalError("trig nodes must lie in [0, pi)")
        if np.min(weights) < _WEIGHT_FLOOR:
            raise NumericalError(f"negative weight {np.min(weights):.3e}")
        if abs(float(np.sum(weights)) - self.mu0) > 1e-10 * abs(self.mu0):
            raise NumericalError("weight sum deviates from mu0 beyond 1e-10")

    @property
    def size(self) -> int:
        return self.nodes.size

    def to_dict(self):
        return {
            "kind": self.kind,
            "L": int(self.size),
            "gamma": self.gamma,
            "dim": 1,
            "nodes": [float(v) for v in self.nodes],
            "weights": [float(v) for v in self.weights],
            "exactness_degree": int(self.exactness_degree),
            "mu0": float(self.mu0),
        }


@dataclass(frozen=True)
class TensorRule:
    frequencies: np.ndarray  # (S, d)
    weights: np.ndarray      # (S,)
    dim: int
    base_L: int
    exactness_degree: int
    mu0: float
    gamma: float | None = None
    kind: str = "trig"

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "weights", weights)
        expected = (2 * self.base_L) ** self.dim // 2
        if freqs.shape != (expected, self.dim):
            raise DimensionMismatch(
                f"expected {expected} frequencies for L={self.base_L}, d={self.dim}, "
                f"got {freqs.shape}"
            )
        if np.any(weights <= 0):
            raise NumericalError("tensor rule weights must all be positive")

    @property
    def size(self) -> int:
        return self.weights.size

    def to_dict(self):
        return {
            "kind": self.kind,
            "L": int(self.base_L),
            "gamma": self.gamma,
            "dim": int(self.dim),
            "nodes": [[float(v) for v in row] for row in self.frequencies],
            "weights": [float(v) for v in self.weights],
            "exactness_degree": int(self.exactness_degree),
            "mu0": float(self.mu0),
        }


def rule_from_dict(d):
    if int(d["dim"]) > 1:
        return TensorRule(
            np.asarray(d["nodes"], dtype=np.float64),
            np.asarray(d["weights"], dtype=np.float64),
            int(d["dim"]),
            int(d["L"]),
            int(d["exactness_degree"]),
            float(d["mu0"]),
            d.get("gamma"),
            d.get("kind", "trig"),
        )
    nodes = np.asarray(d["nodes"], dtype=np.float64)
    if nodes.ndim == 2:
        nodes = nodes[:, 0]
    return QuadratureRule1D(
        nodes,
        np.asarray(d["weights"], dtype=np.float64),
        d["kind"],
        (-math.pi, math.pi) if d["kind"] == "trig" else (-math.inf, math.inf),
        int(d["exactness_degree"]),
        float(d["mu0"]),
        d.get("gamma"),
    )


def save_rule(rule, path):
    with open(path, "w") as fh:
        json.dump(rule.to_dict(), fh, indent=1)


def load_rule(path):
    with open(path) as fh:
        return rule_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Discretized Stieltjes procedure for the cosine-polynomial family
# ---------------------------------------------------------------------------

_GL_BASE = np.polynomial.legendre.leggauss(_STIELTJES_GL_POINTS)


def _discretize(weight, panels: int):
    """Composite Gauss-Legendre discretization of 2*int_0^pi f(cos w) weight(w) dw."""
    base_x = _GL_BASE[0].astype(_LD)
    base_w = _GL_BASE[1].astype(_LD)
    pi = _LD("3.14159265358979323846264338327950288420")
    edges = pi * np.arange(panels + 1, dtype=_LD) / panels
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    omega = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    wts = (half[:, None] * base_w[None, :]).ravel()
    wvals = np.asarray(weight(omega), dtype=_LD)
    if not np.all(np.isfinite(wvals.astype(np.float64))):
        raise NumericalError("weight function returned non-finite values")
    if np.any(wvals < 0):
        raise NumericalError("weight function must be nonnegative")
    return np.cos(omega), 2 * wts * wvals


def _stieltjes_pass(z, wts, L: int):
    mu0 = wts.sum()
    if not float(mu0) > 0:
        raise NonPositiveMoment("zeroth moment of the weight is not positive")
    B = np.zeros(L, dtype=_LD)
    A = np.zeros(max(L - 1, 0), dtype=_LD)
    p_prev = np.zeros_like(z)
    p_cur = np.ones_like(z)
    norm_cur = mu0
    for k in range(L):
        B[k] = np.sum(wts * z * p_cur * p_cur) / norm_cur
        if k == L - 1:
            break
        a_prev = A[k - 1] if k >= 1 else _LD(0)
        p_next = (z - B[k]) * p_cur - a_prev * p_prev
        norm_next = np.sum(wts * p_next * p_next)
        if not float(norm_next) > 0:
            raise NonPositiveMoment(
                f"norm of orthogonal polynomial {k + 1} collapsed; "
                "discretization too coarse or L too large"
            )
        A[k] = norm_next / norm_cur
        p_prev, p_cur = p_cur, p_next
        norm_cur = norm_next
    return B, A, mu0


def stieltjes_coefficients(weight, L: int) -> RecurrenceCoefficients:
    """Recurrence coefficients of the monic cosine-polynomial family
    orthogonal under <f,g> = int_{-pi}^{pi} f(w) g(w) weight(w) dw.

    ``weight`` must be an even, nonnegative, vectorized density on
    [-pi, pi] (already carrying any window scaling).
    """
    if L < 1:
        raise InvalidL(f"L must be >= 1, got {L}")
    panels = _STIELTJES_PANELS0
    z, wts = _discretize(weight, panels)
    B, A, mu0 = _stieltjes_pass(z, wts, L)
    while True:
        panels *= 2
        if panels > _STIELTJES_MAX_PANELS:
            raise NonPositiveMoment(
                f"Stieltjes coefficients did not stabilize by {panels // 2} panels"
            )
        z, wts = _discretize(weight, panels)
        B2, A2, mu02 = _stieltjes_pass(z, wts, L)
        db = float(np.max(np.abs(B2 - B))) if L >= 1 else 0.0
        da = float(np.max(np.abs(A2 - A) / A2)) if L >= 2 else 0.0
        dm = abs(float((mu02 - mu0) / mu02))
        B, A, mu0 = B2, A2, mu02
        if max(db, da, dm) <= _STIELTJES_TOL:
            break
    if L >= 2 and np.any(A.astype(np.float64) <= 0):
        raise NonPositiveMoment("computed A_k not positive")
    return RecurrenceCoefficients(
        B.astype(np.float64), A.astype(np.float64), float(mu0), L
    )


def golub_welsch(coeffs: RecurrenceCoefficients):
    """Abscissae (ascending) and weights from the Jacobi-matrix eigenproblem.

    weight_i = mu0 * (first component of the i-th unit eigenvector)^2.
    """
    offdiag = np.sqrt(coeffs.offdiag_sq) if coeffs.length > 1 else np.empty(0)
    eigvals, first = tridiag_eigen_first(coeffs.diag, offdiag)
    return eigvals, coeffs.mu0 * first * first


# ---------------------------------------------------------------------------
# Rule constructors
# ---------------------------------------------------------------------------

def trig_rule(density, gamma: float, L: int) -> QuadratureRule1D:
    """L-point rule with trigonometric exactness degree 2L-1 for the
    window-scaled weight gamma * density(gamma * w) on [-pi, pi].

    Depends only on the standardized density and gamma, never on kernel
    hyperparameters.
    """
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    g = _LD(gamma)

    def weight(w):
        return g * density.pdf(g * w)

    coeffs = stieltjes_coefficients(weight, L)
    z, wts = golub_welsch(coeffs)
    if np.max(np.abs(z)) >= 1.0 - _Z_MARGIN:
        raise AbscissaOutOfRange(
            f"cosine abscissa {z[np.argmax(np.abs(z))]:.17g} too close to +-1"
        )
    nodes = np.arccos(np.clip(z, -1.0, 1.0))[::-1].copy()
    wts = wts[::-1].copy()
    return QuadratureRule1D(nodes, wts, "trig", (-math.pi, math.pi),
                            2 * L - 1, coeffs.mu0, gamma=float(gamma))


def gauss_hermite_rule(L: int) -> QuadratureRule1D:
    """Gauss-Hermite rule for weight exp(-w^2) on the real line."""
    if L < 1:
        raise InvalidL(f"L must be >= 1, got {L}")
    k = np.arange(1, L, dtype=np.float64)
    coeffs = RecurrenceCoefficients(np.zeros(L), k / 2.0, math.sqrt(math.pi), L)
    nodes, wts = golub_welsch(coeffs)
    return QuadratureRule1D(nodes, wts, "hermite", (-math.inf, math.inf),
                            2 * L - 1, coeffs.mu0)


def gauss_legendre_rule(L: int, interval=(-1.0, 1.0)) -> QuadratureRule1D:
    """Gauss-Legendre rule for unit weight on a finite interval."""
    if L < 1:
        raise InvalidL(f"L must be >= 1, got {L}")
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise InvalidInterval(f"need finite a < b, got [{a}, {b}]")
    k = np.arange(1, L, dtype=np.float64)
    coeffs = RecurrenceCoefficients(np.zeros(L), k * k / (4.0 * k * k - 1.0), 2.0, L)
    z, wts = golub_welsch(coeffs)
    half = (b - a) / 2.0
    return QuadratureRule1D(a + half * (z + 1.0), half * wts, "legendre", (a, b),
                            2 * L - 1, b - a)


def halve_symmetric(rule: QuadratureRule1D) -> QuadratureRule1D:
    """Keep only the positive nodes of a symmetric rule, doubling weights.

    Valid when the downstream integrand is even.  Raises OddRule when a
    node sits at zero (odd-sized rules need the zero node kept with its
    weight undoubled; callers handle that case explicitly).
    """
    n = rule.size
    nodes, wts = rule.nodes, rule.weights
    if np.any(np.abs(nodes + nodes[::-1]) > 1e-10):
        raise AsymmetricRule("nodes are not symmetric about 0 within 1e-10")
    if n % 2 == 1 or np.any(np.abs(nodes) < _MIN_NODE_GAP):
        raise OddRule("rule has a node at 0")
    pos = nodes > 0
    return QuadratureRule1D(nodes[pos], 2.0 * wts[pos], rule.kind, rule.domain,
                            rule.exactness_degree, rule.mu0, rule.gamma)


def mirror_halfspace_tensor(nodes_list, weights_list):
    """Half-space signed tensor grid from per-dimension positive-node rules.

    Each dimension's nodes are mirrored to +-node with half weight on each
    sign; of the resulting signed grid only multi-indices whose first entry
    is positive are kept (so no stored frequency coexists with its
    negation), with weights doubled to compensate:

        w_i = 2 * prod_j (a_{|i_j|, j} / 2)

    Returns (frequencies (S, d), weights (S,)) with S = L * (2L)^(d-1).
    """
    axes_nodes, axes_weights = [], []
    for j, (nd, wt) in enumerate(zip(nodes_list, weights_list)):
        if j == 0:
            axes_nodes.append(nd)
            axes_weights.append(wt / 2.0)
        else:
            axes_nodes.append(np.concatenate((-nd[::-1], nd)))
            axes_weights.append(np.concatenate((wt[::-1], wt)) / 2.0)
    grids = np.meshgrid(*axes_nodes, indexing="ij")
    freqs = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*axes_weights, indexing="ij")
    weights = np.ones(freqs.shape[0])
    for g in wgrids:
        weights = weights * g.ravel()
    return freqs, 2.0 * weights


def tensor_product(rules) -> TensorRule:
    """Symmetric half-space tensor extension of 1-d positive-node rules."""
    if not rules:
        raise DimensionMismatch("need at least one rule")
    L = rules[0].size
    d = len(rules)
    for r in rules:
        if r.size != L:
            raise DimensionMismatch("all rules must have the same node count")
        if np.any(np.abs(r.nodes) < _MIN_NODE_GAP):
            raise NodeAtZero("a node sits numerically at 0; mirroring would duplicate")
        if np.any(r.nodes <= 0):
            raise ConfigError("tensor_product requires strictly positive nodes")
    freqs, weights = mirror_halfspace_tensor(
        [r.nodes for r in rules], [r.weights for r in rules]
    )
    mu0 = 1.0
    for r in rules:
        mu0 *= r.mu0
    degree = min(r.exactness_degree for r in rules)
    return TensorRule(freqs, weights, d, L, degree, mu0,
                      gamma=rules[0].gamma, kind=rules[0].kind)
