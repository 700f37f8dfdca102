"""Unbiased MMD^2, the FUSE-1 soft-maximum aggregate, and the finite-set quantile."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, InputShapeError, InsufficientSampleError
from .kernels import GramMatrix, KernelSpec, gram

LOGSUMEXP = "logsumexp"
LITERAL = "literal"


@dataclass(frozen=True)
class KernelPool:
    """Ordered kernels together with their prior weights."""

    specs: tuple[KernelSpec, ...]
    weights: np.ndarray

    def __post_init__(self):
        specs = tuple(self.specs)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if len(specs) < 1:
            raise ConfigError("a kernel pool needs at least one kernel")
        if weights.size != len(specs):
            raise ConfigError(f"{len(specs)} kernels but {weights.size} weights")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise ConfigError("pool weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"pool weights sum to {weights.sum():.17g}, not 1")
        weights.setflags(write=False)
        object.__setattr__(self, "specs", specs)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, specs: Sequence[KernelSpec]) -> "KernelPool":
        specs = tuple(specs)
        return cls(specs, np.full(len(specs), 1.0 / max(len(specs), 1)))

    @property
    def size(self) -> int:
        return len(self.specs)

    def to_dict(self) -> dict:
        return {
            "kernels": [s.to_dict() for s in self.specs],
            "weights": [float(w) for w in self.weights],
        }


@dataclass(frozen=True)
class PooledGrams:
    grams: tuple[GramMatrix, ...]
    n: int
    m: int
    pool: KernelPool

    def __post_init__(self):
        object.__setattr__(self, "grams", tuple(self.grams))
        if len(self.grams) != self.pool.size:
            raise InputShapeError(f"{len(self.grams)} Gram matrices for a pool of {self.pool.size} kernels")
        for g in self.grams:
            if g.size != self.n + self.m:
                raise InputShapeError(f"Gram of size {g.size} but n + m = {self.n + self.m}")

    @classmethod
    def build(cls, pool: KernelPool, X, Y, skip_zero_weight: bool = False) -> "PooledGrams":
        """Compute every Gram in ``pool`` over the stacked sample (X, Y).

        With ``skip_zero_weight`` kernels of prior weight zero get a
        placeholder identity matrix instead of being evaluated.
        """
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[1] != Y.shape[1]:
            raise InputShapeError(f"samples have different dimensions ({X.shape[1]} vs {Y.shape[1]})")
        Z = np.vstack([X, Y])
        grams = []
        for spec, w in zip(pool.specs, pool.weights):
            if skip_zero_weight and w == 0:
                grams.append(GramMatrix(np.eye(Z.shape[0])))
            else:
                grams.append(gram(spec, Z))
        return cls(tuple(grams), X.shape[0], Y.shape[0], pool)


@dataclass(frozen=True)
class FuseConfig:
    lam: float = 1.0
    form: str = field(default=LOGSUMEXP)

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ConfigError(f"lambda must be positive, got {self.lam!r}")
        if self.form not in (LOGSUMEXP, LITERAL):
            raise ConfigError(f"unknown FUSE form {self.form!r}")


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=float)


def _check_index_sets(size: int, idx_x, idx_y) -> tuple[np.ndarray, np.ndarray]:
    ix = np.asarray(idx_x, dtype=np.intp).reshape(-1)
    iy = np.asarray(idx_y, dtype=np.intp).reshape(-1)
    if ix.size < 2 or iy.size < 2:
        raise InsufficientSampleError(f"need at least 2 points per sample, got n={ix.size}, m={iy.size}")
    both = np.concatenate([ix, iy])
    if both.min() < 0 or both.max() >= size:
        raise InputShapeError(f"indices out of range for a Gram of size {size}")
    if np.unique(both).size != both.size:
        raise ConfigError("index sets overlap or contain duplicates")
    return ix, iy


def mmd2_unbiased(gram_matrix, idx_x, idx_y) -> float:
    """Unbiased MMD^2 of the sub-samples ``idx_x`` and ``idx_y`` of a pooled Gram.

    The value is the two within-sample U-statistics minus twice the
    cross-sample average, so it can be negative.
    """
    K = _values(gram_matrix)
    ix, iy = _check_index_sets(K.shape[0], idx_x, idx_y)
    n, m = ix.size, iy.size
    Kxx = K[np.ix_(ix, ix)]
    Kyy = K[np.ix_(iy, iy)]
    sxx = Kxx.sum() - np.trace(Kxx)
    syy = Kyy.sum() - np.trace(Kyy)
    # both orientations of the cross block, so swapping X and Y is exact
    sxy = K[np.ix_(ix, iy)].sum() + K[np.ix_(iy, ix)].sum()
    return float(sxx / (n * (n - 1)) + syy / (m * (m - 1)) - sxy / (n * m))


def indicator_rows(size: int, index_sets: np.ndarray) -> np.ndarray:
    rows = np.zeros((index_sets.shape[0], size))
    np.put_along_axis(rows, index_sets, 1.0, axis=1)
    return rows


def mmd2_batch(gram_matrix, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    """Unbiased MMD^2 for many (X, Y) splits of the same pooled Gram at once.

    ``wx`` and ``wy`` are (P, n+m) 0/1 indicator matrices, one split per row.
    """
    K = _values(gram_matrix)
    n = wx[0].sum()
    m = wy[0].sum()
    diag = np.diag(K)
    tx = wx @ K
    ty = wy @ K
    sxx = np.einsum("pi,pi->p", tx, wx) - wx @ diag
    syy = np.einsum("pi,pi->p", ty, wy) - wy @ diag
    sxy = np.einsum("pi,pi->p", tx, wy) + np.einsum("pi,pi->p", ty, wx)
    return sxx / (n * (n - 1)) + syy / (m * (m - 1)) - sxy / (n * m)


def fuse_values(mmd2, weights, lam: float = 1.0, form: str = LOGSUMEXP):
    """Aggregate per-kernel MMD^2 values (axis 0) with prior ``weights``.

    The default form is the soft maximum (1/lam) log sum_k w_k exp(lam v_k),
    evaluated with a max shift. ``form="literal"`` evaluates
    (1/lam) log sum_k w_k lam v_k instead and returns -inf wherever that
    average is not positive.
    """
    v = np.asarray(mmd2, dtype=float)
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    if not keep.any():
        raise ConfigError("all kernel weights are zero")
    v = v[keep]
    w = w[keep]
    w = w.reshape((-1,) + (1,) * (v.ndim - 1))
    if form == LITERAL:
        avg = np.sum(w * lam * v, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(avg > 0, np.log(np.where(avg > 0, avg, 1.0)) / lam, -np.inf)
    elif form == LOGSUMEXP:
        vmax = v.max(axis=0)
        out = vmax + np.log(np.sum(w * np.exp(lam * (v - vmax)), axis=0)) / lam
    else:
        raise ConfigError(f"unknown FUSE form {form!r}")
    return float(out) if np.ndim(out) == 0 else out


def per_kernel_mmd2(pooled: PooledGrams, idx_x, idx_y) -> np.ndarray:
    return np.array([mmd2_unbiased(g, idx_x, idx_y) for g in pooled.grams])


def fuse1(pooled: PooledGrams, idx_x, idx_y, cfg: FuseConfig = FuseConfig()) -> float:
    w = pooled.pool.weights
    values = np.zeros(pooled.pool.size)
    for k, g in enumerate(pooled.grams):
        if w[k] > 0:
            values[k] = mmd2_unbiased(g, idx_x, idx_y)
    return fuse_values(values, w, cfg.lam, cfg.form)


def quantile(values, q: float) -> float:
    """Smallest attained value r with (1/|A|) #{a <= r} >= q."""
    arr = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if arr.size == 0:
        raise ConfigError("quantile of an empty set")
    if not 0 < q <= 1:
        raise ConfigError(f"quantile level must be in (0, 1], got {q!r}")
    fractions = np.arange(1, arr.size + 1) / arr.size
    return float(arr[np.argmax(fractions >= q)])
