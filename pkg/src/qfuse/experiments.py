"""Monte-Carlo power and type-I harness, kernel-pool construction and sweeps.

Every trial derives its randomness from ``SeedSequence(seed, spawn_key=(kind,
n, rep))``, so results do not depend on the number of workers and sweeps over
the prior mass ``p`` or the temperature ``lam`` are paired: only the FUSE
weights or temperature change between grid points.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .data import (
    Dataset,
    GeneratorSpec,
    generate,
    load_csv,
    null_mixture,
    split_by_label,
    standardize,
    subsample,
)
from .errors import ConfigError, InsufficientSampleError
from .kernels import Family, GramMatrix, bandwidth_grid, classical_specs, gram, quantum_specs, scaling_grid
from .statistics import LOGSUMEXP, KernelPool, PooledGrams, fuse_values
from .testing import decide, make_plan, permuted_mmd2

WORKERS_ENV = "QFUSE_WORKERS"

_POWER, _TYPE1 = 0, 1


@dataclass(frozen=True)
class PoolSpec:
    """Recipe for a classical, quantum or hybrid kernel pool.

    ``hybrid_p`` is the total prior mass on the quantum kernels: 0 is purely
    classical, 1 purely quantum.  ``scalings`` overrides ``scaling_range``.
    """

    classical_families: tuple[str, ...] = ("gaussian", "laplace")
    bandwidth_count: int = 10
    quantile_range: tuple[float, float] = (0.05, 0.95)
    quantum_family: str | None = "quantum_product"
    scaling_range: tuple[float, float, int] = (1e-3, 1.0, 5)
    scalings: tuple[float, ...] | None = None
    depth: int = 2
    hybrid_p: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "classical_families", tuple(self.classical_families))
        for fam in self.classical_families:
            if Family(fam).is_quantum:
                raise ConfigError(f"{fam!r} is not a classical kernel family")
        if self.quantum_family is not None and not Family(self.quantum_family).is_quantum:
            raise ConfigError(f"{self.quantum_family!r} is not a quantum kernel family")
        if self.scalings is not None:
            object.__setattr__(self, "scalings", tuple(float(g) for g in self.scalings))
        if not 0 <= self.hybrid_p <= 1:
            raise ConfigError(f"hybrid_p must be in [0, 1], got {self.hybrid_p!r}")
        if self.n_classical == 0 and self.n_quantum == 0:
            raise ConfigError("kernel pool is empty")
        if self.hybrid_p < 1 and self.n_classical == 0:
            raise ConfigError(f"hybrid_p={self.hybrid_p} puts mass on classical kernels but none are configured")
        if self.hybrid_p > 0 and self.n_quantum == 0:
            raise ConfigError(f"hybrid_p={self.hybrid_p} puts mass on quantum kernels but none are configured")

    @classmethod
    def classical(cls, families=("gaussian", "laplace"), bandwidth_count=10, **kw) -> "PoolSpec":
        return cls(classical_families=tuple(families), bandwidth_count=bandwidth_count,
                   quantum_family=None, hybrid_p=0.0, **kw)

    @classmethod
    def quantum(cls, family="quantum_product", **kw) -> "PoolSpec":
        return cls(classical_families=(), quantum_family=family, hybrid_p=1.0, **kw)

    @property
    def n_classical(self) -> int:
        return len(self.classical_families) * self.bandwidth_count

    @property
    def n_quantum(self) -> int:
        if self.quantum_family is None:
            return 0
        return len(self.scalings) if self.scalings is not None else int(self.scaling_range[2])

    def quantum_scalings(self) -> list[float]:
        if self.scalings is not None:
            return list(self.scalings)
        lo, hi, count = self.scaling_range
        return scaling_grid(lo, hi, int(count))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["classical_families"] = list(self.classical_families)
        out["quantile_range"] = list(self.quantile_range)
        out["scaling_range"] = list(self.scaling_range)
        if self.scalings is not None:
            out["scalings"] = list(self.scalings)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PoolSpec":
        d = dict(d)
        for key in ("classical_families", "quantile_range", "scaling_range", "scalings"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def pool_weights(spec: PoolSpec, p: float | None = None) -> np.ndarray:
    """Prior weights in pool order (classical kernels first, then quantum)."""
    p = spec.hybrid_p if p is None else p
    nc, nq = spec.n_classical, spec.n_quantum
    if (p < 1 and nc == 0) or (p > 0 and nq == 0) or not 0 <= p <= 1:
        raise ConfigError(f"hybrid_p={p} is incompatible with a pool of {nc} classical and {nq} quantum kernels")
    wc = np.full(nc, (1.0 - p) / nc) if nc else np.zeros(0)
    wq = np.full(nq, p / nq) if nq else np.zeros(0)
    return np.concatenate([wc, wq])


def build_pool(spec: PoolSpec, Z_ref, p: float | None = None) -> KernelPool:
    """Instantiate ``spec`` on the pooled sample ``Z_ref``.

    Bandwidths come from the pairwise distances of ``Z_ref``; the quantum
    subset takes mass ``p`` (default ``spec.hybrid_p``) split evenly.
    """
    specs = []
    if spec.n_classical:
        qlo, qhi = spec.quantile_range
        bw = bandwidth_grid(Z_ref, spec.bandwidth_count, qlo, qhi)
        for fam in spec.classical_families:
            specs.extend(classical_specs(fam, bw))
    if spec.n_quantum:
        specs.extend(quantum_specs(spec.quantum_family, spec.quantum_scalings(), spec.depth))
    return KernelPool(tuple(specs), pool_weights(spec, p))


# -- sources -----------------------------------------------------------------


@dataclass(frozen=True)
class CsvSource:
    """Labelled delimited file split into two groups on ``positive_label``."""

    path: str
    features: tuple | None = None
    label: str | int | None = None
    positive_label: str | None = None
    standardize: bool = True
    delimiter: str = ","

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.features is not None:
            out["features"] = list(self.features)
        return out


@dataclass(frozen=True)
class CsvPairSource:
    """Two delimited files, one per group."""

    x_path: str
    y_path: str
    features: tuple | None = None
    standardize: bool = False
    delimiter: str = ","

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.features is not None:
            out["features"] = list(self.features)
        return out


Source = Union[GeneratorSpec, CsvSource, CsvPairSource, tuple]


def default_positive_label(ds: Dataset) -> str:
    values = sorted({str(v) for v in ds.labels})
    if len(values) != 2:
        raise ConfigError(f"label column has {len(values)} distinct values; pass an explicit positive label")
    return values[-1]


def load_groups(source: Source) -> tuple[Dataset, Dataset]:
    if isinstance(source, GeneratorSpec):
        return generate(source)
    if isinstance(source, CsvSource):
        if source.label is None:
            raise ConfigError("a labelled CSV source needs a label column")
        ds = load_csv(source.path, source.features, source.label, source.delimiter)
        if source.standardize:
            ds = standardize(ds)
        positive = source.positive_label if source.positive_label is not None else default_positive_label(ds)
        return split_by_label(ds, positive)
    if isinstance(source, CsvPairSource):
        X = load_csv(source.x_path, source.features, None, source.delimiter)
        Y = load_csv(source.y_path, source.features, None, source.delimiter)
        if source.standardize:
            # one transform for both groups, fitted on the pooled rows
            joint = standardize(Dataset(np.vstack([X.features, Y.features]), name="pooled", columns=X.columns))
            X = Dataset(joint.features[: len(X)], name=X.name, columns=X.columns)
            Y = Dataset(joint.features[len(X):], name=Y.name, columns=Y.columns)
        return X, Y
    X, Y = source
    return X, Y


def source_to_dict(source: Source) -> dict:
    if isinstance(source, GeneratorSpec):
        return {"type": "generator", **source.to_dict()}
    if isinstance(source, CsvSource):
        return {"type": "csv", **source.to_dict()}
    if isinstance(source, CsvPairSource):
        return {"type": "csv_pair", **source.to_dict()}
    X, Y = source
    return {"type": "in_memory", "sizes": [len(X), len(Y)]}


# -- configuration and results -----------------------------------------------


@dataclass(frozen=True)
class PowerConfig:
    source: Source = field(default_factory=GeneratorSpec)
    pool: PoolSpec = field(default_factory=PoolSpec)
    sample_sizes: tuple[int, ...] = tuple(range(10, 100, 10))
    repetitions: int = 50
    alpha: float = 0.05
    B: int = 2000
    lam: float = 1.0
    form: str = LOGSUMEXP
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sample_sizes)
        object.__setattr__(self, "sample_sizes", sizes)
        if not sizes:
            raise ConfigError("no sample sizes given")
        if any(s < 2 for s in sizes):
            raise ConfigError("sample sizes must be >= 2")
        if list(sizes) != sorted(set(sizes)):
            raise ConfigError("sample sizes must be strictly ascending")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")
        if self.B < 1:
            raise ConfigError("number of permutations must be >= 1")
        if not self.lam > 0:
            raise ConfigError("lambda must be positive")

    def to_dict(self) -> dict:
        return {
            "source": source_to_dict(self.source),
            "pool": self.pool.to_dict(),
            "sample_sizes": list(self.sample_sizes),
            "repetitions": self.repetitions,
            "alpha": self.alpha,
            "B": self.B,
            "lam": self.lam,
            "form": self.form,
            "seed": self.seed,
        }


@dataclass
class PowerCurve:
    """Rejection (``kind="power"``) or true-negative (``kind="tnr"``) rates per sample size."""

    sample_sizes: list[int]
    rates: np.ndarray
    stderr: np.ndarray
    repetitions: int
    kind: str = "power"
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_rejections(cls, sizes, rejections: np.ndarray, kind: str, metadata: dict) -> "PowerCurve":
        # rejections: (len(sizes), reps) booleans
        reps = rejections.shape[1]
        rate = rejections.mean(axis=1)
        if kind == "tnr":
            rate = 1.0 - rate
        se = np.sqrt(rate * (1.0 - rate) / reps)
        return cls(list(sizes), rate, se, reps, kind, metadata)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(n, float(r), float(s)) for n, r, s in zip(self.sample_sizes, self.rates, self.stderr)]


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# -- trial engine ------------------------------------------------------------


@dataclass(frozen=True)
class _Context:
    X: np.ndarray
    Y: np.ndarray
    pool: PoolSpec
    variants: tuple[tuple[float, float], ...]  # (hybrid_p, lam)
    alpha: float
    B: int
    form: str
    seed: int
    kind: int


def _trial_stats(ctx: _Context, n: int, rep: int) -> list[np.ndarray]:
    """FUSE statistics over the B + 1 splits (observed last) for every variant."""
    root = np.random.SeedSequence(ctx.seed, spawn_key=(ctx.kind, n, rep))
    sub_seed, mix_seed, plan_seed = root.spawn(3)
    X, Y = Dataset(ctx.X), Dataset(ctx.Y)
    if ctx.kind == _TYPE1:
        X, Y = null_mixture(X, Y, mix_seed)
    Xs, Ys = subsample(X, Y, n, sub_seed)
    Z = np.vstack([Xs.features, Ys.features])

    weights = [pool_weights(ctx.pool, p) for p, _ in ctx.variants]
    needed = np.flatnonzero(np.any(np.array(weights) > 0, axis=0))
    container = build_pool(ctx.pool, Z, p=ctx.variants[0][0])
    grams = [
        gram(spec, Z) if k in needed else GramMatrix(np.eye(2 * n))
        for k, spec in enumerate(container.specs)
    ]
    pooled = PooledGrams(tuple(grams), n, n, container)
    plan = make_plan(n, n, ctx.B, plan_seed)
    mmd = permuted_mmd2(pooled, plan, kernels=needed)
    return [fuse_values(mmd, w, lam, ctx.form) for w, (_, lam) in zip(weights, ctx.variants)]


def _trial(ctx: _Context, n: int, rep: int) -> list[bool]:
    return [bool(decide(stats, ctx.alpha)[3]) for stats in _trial_stats(ctx, n, rep)]


def _context(cfg: PowerConfig, variants, kind: int) -> _Context:
    X, Y = load_groups(cfg.source)
    biggest = cfg.sample_sizes[-1]
    if biggest > min(len(X), len(Y)):
        raise InsufficientSampleError(
            f"sample size {biggest} exceeds the available group sizes ({len(X)}, {len(Y)})"
        )
    for p, _ in variants:
        pool_weights(cfg.pool, p)
    return _Context(X.features, Y.features, cfg.pool, tuple(variants), cfg.alpha, cfg.B, cfg.form, cfg.seed, kind)


def trial_statistics(cfg: PowerConfig, n: int, rep: int, p: float | None = None,
                     lam: float | None = None, null: bool = False) -> np.ndarray:
    """The B + 1 FUSE statistics (observed last) of one Monte-Carlo trial.

    Uses exactly the subsample and permutations that ``estimate_power``
    (or ``estimate_type1`` with ``null=True``) uses for repetition ``rep``
    at sample size ``n``.
    """
    variant = (cfg.pool.hybrid_p if p is None else p, cfg.lam if lam is None else lam)
    ctx = _context(cfg, [variant], _TYPE1 if null else _POWER)
    return _trial_stats(ctx, n, rep)[0]


def _trial_star(args) -> list[bool]:
    return _trial(*args)


def _run(cfg: PowerConfig, variants, kind: int, workers: int | None) -> np.ndarray:
    """Rejection indicators of shape (len(variants), len(sizes), reps)."""
    ctx = _context(cfg, variants, kind)
    jobs = [(ctx, n, rep) for n in cfg.sample_sizes for rep in range(cfg.repetitions)]
    workers = 1 if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        results = [_trial_star(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_trial_star, jobs, chunksize=chunk))
    arr = np.array(results, dtype=bool).reshape(len(cfg.sample_sizes), cfg.repetitions, len(variants))
    return np.transpose(arr, (2, 0, 1))


def estimate_power(cfg: PowerConfig, workers: int | None = 1) -> PowerCurve:
    rej = _run(cfg, [(cfg.pool.hybrid_p, cfg.lam)], _POWER, workers)[0]
    return PowerCurve.from_rejections(cfg.sample_sizes, rej, "power", cfg.to_dict())


def estimate_type1(cfg: PowerConfig, workers: int | None = 1) -> PowerCurve:
    """True-negative rate when both groups are redrawn from their pooled mixture."""
    rej = _run(cfg, [(cfg.pool.hybrid_p, cfg.lam)], _TYPE1, workers)[0]
    return PowerCurve.from_rejections(cfg.sample_sizes, rej, "tnr", cfg.to_dict())


def _check_grid(grid: Sequence[float], name: str) -> list[float]:
    grid = [float(v) for v in grid]
    if not grid:
        raise ConfigError(f"{name} grid is empty")
    return grid


def hybrid_sweep(cfg: PowerConfig, p_grid: Sequence[float], workers: int | None = 1,
                 null: bool = False) -> list[tuple[float, PowerCurve]]:
    """Power (or TNR with ``null=True``) for each quantum prior mass in ``p_grid``."""
    grid = _check_grid(p_grid, "p")
    rej = _run(cfg, [(p, cfg.lam) for p in grid], _TYPE1 if null else _POWER, workers)
    kind = "tnr" if null else "power"
    return [
        (p, PowerCurve.from_rejections(cfg.sample_sizes, r, kind, {**cfg.to_dict(), "hybrid_p": p}))
        for p, r in zip(grid, rej)
    ]


def lambda_sweep(cfg: PowerConfig, lambda_grid: Sequence[float], workers: int | None = 1,
                 null: bool = False) -> list[tuple[float, PowerCurve]]:
    grid = _check_grid(lambda_grid, "lambda")
    if any(not lam > 0 or not math.isfinite(lam) for lam in grid):
        raise ConfigError("lambda values must be positive")
    rej = _run(cfg, [(cfg.pool.hybrid_p, lam) for lam in grid], _TYPE1 if null else _POWER, workers)
    kind = "tnr" if null else "power"
    return [
        (lam, PowerCurve.from_rejections(cfg.sample_sizes, r, kind, {**cfg.to_dict(), "lam": lam}))
        for lam, r in zip(grid, rej)
    ]
