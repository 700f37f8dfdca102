"""MMD-FUSE two-sample testing over classical, simulated-quantum and hybrid kernel pools."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, QFuseError
from .kernels import Family, GramMatrix, KernelSpec, QuantumState, eval_kernel, fidelity, gram
from .statistics import FuseConfig, KernelPool, PooledGrams, fuse1, mmd2_unbiased, quantile
from .testing import TestConfig, TestResult, make_plan, permutation_test, reject_decision
from .experiments import (
    PoolSpec,
    PowerConfig,
    PowerCurve,
    build_pool,
    estimate_power,
    estimate_type1,
    hybrid_sweep,
    lambda_sweep,
    trial_statistics,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Family",
    "FuseConfig",
    "GramMatrix",
    "KernelPool",
    "KernelSpec",
    "PoolSpec",
    "PooledGrams",
    "PowerConfig",
    "PowerCurve",
    "QFuseError",
    "QuantumState",
    "TestConfig",
    "TestResult",
    "build_pool",
    "estimate_power",
    "estimate_type1",
    "eval_kernel",
    "fidelity",
    "fuse1",
    "gram",
    "hybrid_sweep",
    "lambda_sweep",
    "make_plan",
    "mmd2_unbiased",
    "permutation_test",
    "quantile",
    "reject_decision",
    "trial_statistics",
]
