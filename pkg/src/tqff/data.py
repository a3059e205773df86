"""Datasets: synthetic generators, CSV ingestion, normalization, splits.

CSV schema: one header row, then d feature columns followed by a single
target column.  Normalization is z-score on the target (constants stored
for round-tripping); inputs are kept in their native units since the
kernel carries per-dimension lengthscales.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, EmptyData, ParseError
from .gp import FULL_GP_CAP


@dataclass
class Normalization:
    y_mean: float = 0.0
    y_sd: float = 1.0

    def apply(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_sd

    def invert_mean(self, mean):
        return np.asarray(mean) * self.y_sd + self.y_mean

    def invert_var(self, var):
        return np.asarray(var) * self.y_sd**2

    def to_dict(self):
        return {"y_mean": float(self.y_mean), "y_sd": float(self.y_sd)}

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return cls()
        return cls(float(d["y_mean"]), float(d["y_sd"]))


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    normalization: Normalization = field(default_factory=Normalization)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.shape[0] != self.y.shape[0]:
            raise ParseError("feature/target row counts differ")
        if self.X.size and not np.all(np.isfinite(self.X)):
            raise ParseError("non-finite feature value")
        if self.y.size and not np.all(np.isfinite(self.y)):
            raise ParseError("non-finite target value")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def normalized(self) -> "Dataset":
        """z-score the target; constants stored on the result."""
        mean = float(np.mean(self.y))
        sd = float(np.std(self.y))
        if sd == 0.0:
            sd = 1.0
        norm = Normalization(mean, sd)
        return Dataset(self.X.copy(), norm.apply(self.y), norm)


def toy_function(x):
    """Bumpy 1-d test function: a squared-sine modulated Gaussian plus a
    linear trend."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x * x) * np.exp(np.sin(10.0 * (x - 0.5)) ** 2) + 3.0 * x


def gen_toy(n: int, seed: int, noise_sd: float = 0.1,
            normalize: bool = True) -> Dataset:
    """n noisy draws of the toy function at x ~ U(0, 1)."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, n)
    y = toy_function(x) + noise_sd * rng.standard_normal(n)
    ds = Dataset(x[:, None], y)
    return ds.normalized() if normalize else ds


def toy_test_grid(m: int = 1000) -> np.ndarray:
    """Evenly spaced prediction grid spanning [-1, 1]."""
    return np.linspace(-1.0, 1.0, m)[:, None]


def schaffer2(x1, x2):
    """Schaffer function N.2 (see https://www.sfu.ca/~ssurjano/schaffer2.html):

        f = 0.5 + (sin^2(x1^2 - x2^2) - 0.5) / (1 + 0.001 (x1^2 + x2^2))^2
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    num = np.sin(x1 * x1 - x2 * x2) ** 2 - 0.5
    den = (1.0 + 0.001 * (x1 * x1 + x2 * x2)) ** 2
    return 0.5 + num / den


def gen_schaffer(n: int, seed: int) -> Dataset:
    """n noiseless Schaffer N.2 evaluations at uniform points in [-3, 3]^2."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3.0, 3.0, (n, 2))
    return Dataset(X, schaffer2(X[:, 0], X[:, 1]))


def gen_gp2d(n: int, theta: float, seed: int, scale: float = 1.0,
             noise: float = 0.01) -> Dataset:
    """Exact draw from a 2-d isotropic-SE GP prior (plus noise) at uniform
    random inputs in [0, 1]^2, via dense Cholesky sampling."""
    if n > FULL_GP_CAP:
        raise CapExceeded(f"exact GP sampling capped at n <= {FULL_GP_CAP}")
    from .accel import se_gram

    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, 2))
    K = se_gram(X, X, np.array([1.0 / theta, 1.0 / theta]), scale)
    K[np.diag_indices(n)] += noise + 1e-10 * scale
    L = np.linalg.cholesky(K)
    y = L @ rng.standard_normal(n)
    return Dataset(X, y)


def split(data: Dataset, fraction: float, seed: int):
    """Seeded shuffle split into (train, test)."""
    if not 0.0 < fraction < 1.0:
        raise ParseError(f"split fraction must be in (0, 1), got {fraction}")
    if data.n < 2:
        raise EmptyData("need at least 2 rows to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    ntr = int(round(data.n * fraction))
    ntr = min(max(ntr, 1), data.n - 1)
    tr, te = perm[:ntr], perm[ntr:]
    return (Dataset(data.X[tr], data.y[tr], data.normalization),
            Dataset(data.X[te], data.y[te], data.normalization))


def ingest_csv(path, normalize: bool = True) -> Dataset:
    """Parse a CSV with a header row, d feature columns, and one target
    column; validate finiteness; z-score the target by default."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyData(f"{path} is empty")
        width = len(header)
        if width < 2:
            raise ParseError("need at least one feature column and a target",
                             line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} columns, got {len(row)}",
                                 line=lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno)
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", line=lineno)
            rows.append(vals)
    if not rows:
        raise EmptyData(f"{path} has a header but no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    ds = Dataset(arr[:, :-1], arr[:, -1])
    return ds.normalized() if normalize else ds


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def dataset_to_csv(path, data: Dataset):
    header = [f"x{j + 1}" for j in range(data.dim)] + ["y"]
    rows = [list(map(float, data.X[i])) + [float(data.y[i])]
            for i in range(data.n)]
    write_csv(path, header, rows)
