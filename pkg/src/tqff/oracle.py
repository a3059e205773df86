"""Reference integration and brute-force exactness checking.

Everything here is deliberately independent of the quadrature-construction
code it certifies: the adaptive integrator uses a hardwired Gauss-Kronrod
7/15 pair evaluated in extended precision, and closed forms (erfc, Gaussian
characteristic function) are used where they exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappush, heappop

import numpy as np

from .errors import MaxSubdivision, NonFinite

_LD = np.longdouble

# Kronrod-15 abscissae (positive half), Kronrod weights, and the embedded
# Gauss-7 weights, 33 significant digits.
_XK = np.array([_LD(s) for s in (
    "0.991455371120812639206854697526329",
    "0.949107912342758524526189684047851",
    "0.864864423359769072789712788640926",
    "0.741531185599394439863864773280788",
    "0.586087235467691130294144838258730",
    "0.405845151377397166906606412076961",
    "0.207784955007898467600689403773245",
    "0.000000000000000000000000000000000",
)])
_WK = np.array([_LD(s) for s in (
    "0.022935322010529224963732008058970",
    "0.063092092629978553290700663189204",
    "0.104790010322250183839876322541518",
    "0.140653259715525918745189590510238",
    "0.169004726639267902826583426598550",
    "0.190350578064785409913256402421014",
    "0.204432940075298892414161999234649",
    "0.209482141084727828012999174891714",
)])
_WG = np.array([_LD(s) for s in (
    "0.129484966168869693270611432679082",
    "0.279705391489276667901467771423780",
    "0.381830050505118944950369775488975",
    "0.417959183673469387755102040816327",
)])

# full 15-point node vector in [-1, 1], ascending
_NODES15 = np.sort(np.concatenate((-_XK[:-1], _XK[::-1])))
_W15 = np.empty(15, dtype=_LD)
_W7 = np.zeros(15, dtype=_LD)
for _i in range(7):
    _W15[_i] = _WK[_i]
    _W15[14 - _i] = _WK[_i]
_W15[7] = _WK[7]
for _j, _pos in enumerate((1, 3, 5)):
    _W7[_pos] = _WG[_j]
    _W7[14 - _pos] = _WG[_j]
_W7[7] = _WG[3]


@dataclass
class IntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def _panel(f, a, b):
    """One Gauss-Kronrod 7/15 evaluation on [a, b]."""
    mid = (a + b) / 2
    half = (b - a) / 2
    x = mid + half * _NODES15
    y = np.asarray(f(x), dtype=_LD)
    if not np.all(np.isfinite(y.astype(np.float64))):
        raise NonFinite(f"integrand non-finite on [{float(a)}, {float(b)}]")
    k15 = half * np.sum(_W15 * y)
    g7 = half * np.sum(_W7 * y)
    return k15, abs(k15 - g7)


def integrate_adaptive(f, interval, tol=1e-12, freq_hint=None, max_panels=4096):
    """Adaptive Gauss-Kronrod integration of a vectorized integrand.

    ``f`` must accept a numpy array of abscissae.  With ``freq_hint`` (the
    dominant angular frequency of an oscillatory integrand) the initial
    partition is refined so each panel spans at most pi/(4*freq_hint).
    """
    a, b = _LD(interval[0]), _LD(interval[1])
    if not (tol > 0):
        raise ValueError("tol must be positive")
    n0 = 4
    if freq_hint is not None and freq_hint > 0:
        n0 = max(n0, math.ceil(float(b - a) * 4.0 * freq_hint / math.pi))
    n0 = min(n0, max_panels)

    heap = []  # (-err, a, b, value)
    evals = 0
    edges = a + (b - a) * np.arange(n0 + 1, dtype=_LD) / n0
    for i in range(n0):
        val, err = _panel(f, edges[i], edges[i + 1])
        evals += 15
        heappush(heap, (-float(err), float(edges[i]), float(edges[i + 1]), val, err))

    while True:
        total_err = sum(item[4] for item in heap)
        if float(total_err) <= tol:
            break
        if len(heap) >= max_panels:
            raise MaxSubdivision(
                f"error {float(total_err):.3e} > tol {tol:.3e} after {len(heap)} panels"
            )
        _, pa, pb, _, _ = heappop(heap)
        pm = (_LD(pa) + _LD(pb)) / 2
        for lo, hi in ((_LD(pa), pm), (pm, _LD(pb))):
            val, err = _panel(f, lo, hi)
            evals += 15
            heappush(heap, (-float(err), float(lo), float(hi), val, err))

    value = sum((item[3] for item in heap), _LD(0))
    err = sum((item[4] for item in heap), _LD(0))
    return IntegralResult(float(value), float(err), evals)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_tail(c: float) -> float:
    """P(Z > c) for standard normal Z, via erfc."""
    return 0.5 * math.erfc(c / math.sqrt(2.0))


def truncated_fourier_1d(density, gamma: float, alpha: float, tol=1e-12):
    """Reference value of the window-truncated cosine transform

        int_{-pi}^{pi} gamma * p(gamma w) * cos(alpha w) dw

    for a standardized 1-d density p.
    """
    g = _LD(gamma)
    al = _LD(alpha)

    def f(w):
        return g * density.pdf(g * w) * np.cos(al * w)

    res = integrate_adaptive(f, (-math.pi, math.pi), tol=tol, freq_hint=abs(float(alpha)))
    return res.value


def truncated_fourier(spec, tau) -> float:
    """The exact truncated-window target that quadrature feature maps
    approximate: g(Theta) times the per-dimension product of truncated
    cosine transforms at alpha_j = gamma * tau_j / theta_j."""
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    densities = spec.densities()
    out = spec.signal_scale()
    for j in range(spec.dim):
        alpha = spec.gamma * tau[j] / spec.hyper.lengthscales[j]
        out *= truncated_fourier_1d(densities[j], spec.gamma, alpha)
    return out


# ---------------------------------------------------------------------------
# Exactness certificates
# ---------------------------------------------------------------------------

@dataclass
class CertificateRow:
    k: tuple
    quad: float
    oracle: float
    abs_err: float
    within_tol: bool


@dataclass
class Certificate:
    rows: list = field(default_factory=list)
    exactness_degree: int = 0
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return all(
            r.within_tol for r in self.rows if max(r.k) <= self.exactness_degree
        )

    def first_failing_degree(self):
        for r in self.rows:
            if not r.within_tol:
                return max(r.k)
        return None


def _resolve_target(rule, target: str) -> str:
    """Pick the reference integral family a rule is certified against.

    "window"          int_{-pi}^{pi} gamma p(gamma w) cos(k w) dw
    "standard-normal" int p(w) cos(k w) dw over the real line
    "canonical"       the rule's own construction weight
    """
    if target != "auto":
        return target
    if rule.kind == "trig" or getattr(rule, "gamma", None) is not None:
        return "window"
    return "canonical"


def _oracle_cos_moment(rule, density, gamma, k, target):
    if target == "window":
        return truncated_fourier_1d(density, gamma, float(k))
    if target == "standard-normal":
        return density.char(float(k))
    if rule.kind == "hermite":
        # construction weight exp(-w^2) on the real line
        return math.sqrt(math.pi) * math.exp(-k * k / 4.0)
    if rule.kind == "legendre":
        a, b = rule.domain
        if k == 0:
            return b - a
        return (math.sin(k * b) - math.sin(k * a)) / k
    raise ValueError(f"no canonical weight for rule kind {rule.kind!r}")


def exactness_certificate(rule, spec, kmax: int, tol=1e-9,
                          target="auto") -> Certificate:
    """Tabulate quadrature-vs-reference values of cos(k.w) for all integer
    (multi-)frequencies up to kmax and flag the exactness band."""
    cert = Certificate(exactness_degree=rule.exactness_degree, tol=tol)
    density = spec.densities()[0] if spec is not None else None
    gamma = spec.gamma if spec is not None else None
    target = _resolve_target(rule, target)

    if not hasattr(rule, "frequencies"):
        nodes = np.asarray(rule.nodes)
        weights = np.asarray(rule.weights)
        for k in range(kmax + 1):
            quad = float(np.dot(weights, np.cos(k * nodes)))
            orc = _oracle_cos_moment(rule, density, gamma, k, target)
            err = abs(quad - orc)
            cert.rows.append(
                CertificateRow((k,), quad, orc, err, err <= tol * max(1.0, abs(orc)))
            )
        return cert

    # tensor rule: multi-indices with ||k||_inf <= kmax
    freqs = np.asarray(rule.frequencies)
    weights = np.asarray(rule.weights)
    d = rule.dim
    oracle_1d = [_oracle_cos_moment(rule, density, gamma, k, target)
                 for k in range(kmax + 1)]
    grids = np.indices((kmax + 1,) * d).reshape(d, -1).T
    for kvec in grids:
        quad = float(np.dot(weights, np.cos(freqs @ kvec.astype(np.float64))))
        orc = 1.0
        for kj in kvec:
            orc *= oracle_1d[kj]
        err = abs(quad - orc)
        cert.rows.append(
            CertificateRow(tuple(int(k) for k in kvec), quad, orc, err,
                           err <= tol * max(1.0, abs(orc)))
        )
    return cert
