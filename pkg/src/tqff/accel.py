"""Hot numeric inner loops, JIT-compiled with Numba when available.

Every kernel here has two implementations: an explicit-loop version that
Numba compiles with ``@njit``, and a vectorized pure-NumPy fallback.  The
active path is chosen once at import time from the ``TQFF_BACKEND``
environment variable:

    TQFF_BACKEND=auto    use Numba if importable, else NumPy (default)
    TQFF_BACKEND=numba   require Numba, fail loudly if missing
    TQFF_BACKEND=numpy   force the pure-NumPy path

``TQFF_THREADS`` caps the Numba threading layer.  Both paths agree to
~1e-14; see benchmarks/compare_backends.py for timings.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ConfigError, EigenFailure

_EPS = float(np.finfo(np.float64).eps)
_QL_MAX_ITER = 50


def _resolve_backend() -> str:
    choice = os.environ.get("TQFF_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ConfigError(f"TQFF_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise ConfigError("TQFF_BACKEND=numba but numba is not installed")
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()

if BACKEND == "numba":
    import numba
    from numba import njit, prange

    # workqueue avoids TBB/OpenMP version sensitivity; fine at desk scale
    numba.config.THREADING_LAYER = "workqueue"
    threads = os.environ.get("TQFF_THREADS")
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
else:  # pure-NumPy fallback: decorators become no-ops
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range


def backend_name() -> str:
    return BACKEND


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigensolver (implicit-shift QL), accumulating only
# the first component of each eigenvector.  This is all the Golub-Welsch
# step needs: weight_i = mu0 * (first component of eigenvector i)^2.
# ---------------------------------------------------------------------------

def _ql_first_component(d, e, z):
    """Implicit-shift QL on tridiagonal (d, e), rotating z along.

    d (n,) diagonal and e (n,) off-diagonal (last slot scratch) are
    overwritten with eigenvalues / zeros; z is rotated as if it were the
    first row of the eigenvector matrix.  Returns 0 on success, else the
    1-based index of the eigenvalue that failed to converge.
    """
    n = d.shape[0]
    if n == 1:
        return 0
    e[n - 1] = 0.0
    for low in range(n):
        it = 0
        while True:
            m = low
            while m < n - 1:
                if abs(e[m]) <= _EPS * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == low:
                break
            if it >= _QL_MAX_ITER:
                return low + 1
            it += 1
            # Wilkinson shift from the leading 2x2 block
            p = d[low]
            g = (d[low + 1] - p) / (2.0 * e[low])
            r = math.hypot(g, 1.0)
            if g >= 0.0:
                g = d[m] - p + e[low] / (g + r)
            else:
                g = d[m] - p + e[low] / (g - r)
            s = 1.0
            c = 1.0
            p = 0.0
            for i in range(m - 1, low - 1, -1):
                f = s * e[i]
                b = c * e[i]
                if abs(f) >= abs(g):
                    c = g / f
                    r = math.sqrt(c * c + 1.0)
                    e[i + 1] = f * r
                    s = 1.0 / r
                    c = c * s
                else:
                    s = f / g
                    r = math.sqrt(s * s + 1.0)
                    e[i + 1] = g * r
                    c = 1.0 / r
                    s = s * c
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
            d[low] = d[low] - p
            e[low] = g
            e[m] = 0.0
    return 0


_ql_numba = njit(cache=True)(_ql_first_component) if BACKEND == "numba" else None


def tridiag_eigen_first(diag, offdiag):
    """Eigenvalues (ascending) and first eigenvector components of the
    symmetric tridiagonal matrix with the given diagonal/off-diagonal.

    Raises EigenFailure if the QL iteration does not converge.
    """
    n = len(diag)
    d = np.asarray(diag, dtype=np.float64).copy()
    e = np.zeros(n, dtype=np.float64)
    if n > 1:
        e[: n - 1] = np.asarray(offdiag, dtype=np.float64)
    z = np.zeros(n, dtype=np.float64)
    z[0] = 1.0
    impl = _ql_numba if _ql_numba is not None else _ql_first_component
    bad = impl(d, e, z)
    if bad:
        raise EigenFailure(f"QL iteration stalled at eigenvalue {bad} of {n}")
    order = np.argsort(d, kind="stable")
    return d[order], z[order]


# ---------------------------------------------------------------------------
# Feature design matrix: columns Phi(x_i) = [sw*cos(W xs_i); sw*sin(W xs_i)]
# ---------------------------------------------------------------------------

def _design_blocks_numpy(Xs, W, sw):
    args = W @ Xs.T  # (S, n)
    cos_b = np.cos(args)
    sin_b = np.sin(args)
    cos_b *= sw[:, None]
    sin_b *= sw[:, None]
    return np.concatenate((cos_b, sin_b), axis=0)


@njit(parallel=True, cache=True)
def _design_blocks_loops(Xs, W, sw):
    n = Xs.shape[0]
    S = W.shape[0]
    d = W.shape[1]
    out = np.empty((2 * S, n))
    for i in prange(n):
        for s in range(S):
            arg = 0.0
            for j in range(d):
                arg += W[s, j] * Xs[i, j]
            out[s, i] = sw[s] * math.cos(arg)
            out[S + s, i] = sw[s] * math.sin(arg)
    return out


def design_blocks(Xs, W, sw):
    """2S x n design matrix for pre-scaled inputs Xs (n x d)."""
    Xs = np.ascontiguousarray(Xs, dtype=np.float64)
    W = np.ascontiguousarray(W, dtype=np.float64)
    sw = np.ascontiguousarray(sw, dtype=np.float64)
    if BACKEND == "numba":
        return _design_blocks_loops(Xs, W, sw)
    return _design_blocks_numpy(Xs, W, sw)


# ---------------------------------------------------------------------------
# Dense SE kernel Gram matrix (exact full-GP path)
# ---------------------------------------------------------------------------

def _se_gram_numpy(X1, X2, inv_theta, nu):
    n, d = X1.shape
    m = X2.shape[0]
    sq = np.zeros((n, m))
    for j in range(d):
        diff = (X1[:, j, None] - X2[None, :, j]) * inv_theta[j]
        sq += diff * diff
    return nu * np.exp(-0.5 * sq)


@njit(parallel=True, cache=True)
def _se_gram_loops(X1, X2, inv_theta, nu):
    n = X1.shape[0]
    m = X2.shape[0]
    d = X1.shape[1]
    out = np.empty((n, m))
    for i in prange(n):
        for k in range(m):
            sq = 0.0
            for j in range(d):
                diff = (X1[i, j] - X2[k, j]) * inv_theta[j]
                sq += diff * diff
            out[i, k] = nu * math.exp(-0.5 * sq)
    return out


def se_gram(X1, X2, inv_theta, nu):
    """Exact anisotropic squared-exponential Gram matrix (n x m)."""
    X1 = np.ascontiguousarray(np.atleast_2d(X1), dtype=np.float64)
    X2 = np.ascontiguousarray(np.atleast_2d(X2), dtype=np.float64)
    inv_theta = np.ascontiguousarray(inv_theta, dtype=np.float64)
    if BACKEND == "numba":
        return _se_gram_loops(X1, X2, inv_theta, float(nu))
    return _se_gram_numpy(X1, X2, inv_theta, float(nu))
