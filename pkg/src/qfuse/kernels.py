"""Classical and simulated quantum kernels, Gram matrices and parameter grids.

Classical kernels use the conventions

    gaussian:  k(x, x') = exp(-||x - x'||_2^2 / (2 sigma^2))
    laplace:   k(x, x') = exp(-||x - x'||_1 / sigma)

Quantum kernels are state fidelities |<psi(g x)|psi(g x')>|^2 computed from
exact statevectors.  Two feature maps are provided:

* ``quantum_product``: one qubit per feature, each prepared as R_y(g x_j)|+>.
* ``quantum_entangled``: start from |+>^D and repeat ``depth`` layers of
  R_y(g x_j) on every qubit followed by a ring of CZ gates.

Qubit ``0`` is the most significant bit of the amplitude index.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigError, DataError, DegenerateDataError, InputShapeError

MAX_QUBITS = 16


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    QUANTUM_PRODUCT = "quantum_product"
    QUANTUM_ENTANGLED = "quantum_entangled"

    @property
    def is_quantum(self) -> bool:
        return self in (Family.QUANTUM_PRODUCT, Family.QUANTUM_ENTANGLED)


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a single kernel.

    ``bandwidth`` is used by the classical families and ``scaling`` (the
    multiplier applied to features before encoding) by the quantum ones.
    """

    family: Family
    bandwidth: float | None = None
    scaling: float | None = None
    depth: int = 0

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise ConfigError(f"unknown kernel family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        if family.is_quantum:
            if self.scaling is None or not self.scaling > 0 or not math.isfinite(self.scaling):
                raise ConfigError(f"{family.value} kernel needs a positive scaling, got {self.scaling!r}")
            object.__setattr__(self, "scaling", float(self.scaling))
            if family is Family.QUANTUM_ENTANGLED and self.depth < 1:
                raise ConfigError("quantum_entangled kernel needs depth >= 1")
        else:
            if self.bandwidth is None or not self.bandwidth > 0 or not math.isfinite(self.bandwidth):
                raise ConfigError(f"{family.value} kernel needs a positive bandwidth, got {self.bandwidth!r}")
            object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def label(self) -> str:
        if self.family is Family.QUANTUM_ENTANGLED:
            return f"{self.family.value}(scaling={self.scaling:.6g}, depth={self.depth})"
        if self.family.is_quantum:
            return f"{self.family.value}(scaling={self.scaling:.6g})"
        return f"{self.family.value}(bandwidth={self.bandwidth:.6g})"

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        if self.family.is_quantum:
            out["scaling"] = self.scaling
            if self.family is Family.QUANTUM_ENTANGLED:
                out["depth"] = self.depth
        else:
            out["bandwidth"] = self.bandwidth
        return out


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray

    @property
    def dimension(self) -> int:
        """Number of qubits."""
        return int(self.amplitudes.size).bit_length() - 1


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]


def _as_vector(x, name="x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InputShapeError(f"{name} must be a feature vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def _as_matrix(Z, name="Z") -> np.ndarray:
    arr = np.asarray(Z, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InputShapeError(f"{name} must be a 2-D sample matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


# -- statevector simulation --------------------------------------------------


def _check_qubits(n_qubits: int, max_qubits: int) -> None:
    if n_qubits > max_qubits:
        raise CapacityError(f"{n_qubits} features need {n_qubits} qubits; cap is {max_qubits}")


def _apply_ry(psi: np.ndarray, qubit: int, n_qubits: int, angles: np.ndarray) -> np.ndarray:
    # psi: (rows, 2**n_qubits); angles: (rows,)
    rows = psi.shape[0]
    view = psi.reshape(rows, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    c = np.cos(angles / 2)[:, None, None]
    s = np.sin(angles / 2)[:, None, None]
    a0, a1 = view[:, :, 0, :], view[:, :, 1, :]
    out = np.empty_like(view)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(rows, -1)


def _ring_edges(n_qubits: int) -> list[tuple[int, int]]:
    edges = []
    for j in range(n_qubits):
        pair = tuple(sorted((j, (j + 1) % n_qubits)))
        if pair[0] != pair[1] and pair not in edges:
            edges.append(pair)
    return edges


def _cz_ring_phases(n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    bits = [(idx >> (n_qubits - 1 - j)) & 1 for j in range(n_qubits)]
    parity = np.zeros(idx.size, dtype=np.int64)
    for a, b in _ring_edges(n_qubits):
        parity += bits[a] & bits[b]
    return np.where(parity % 2 == 1, -1.0, 1.0)


def _product_states(angles: np.ndarray) -> np.ndarray:
    rows, n_qubits = angles.shape
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    # R_y(t)|+> = ((c - s), (s + c)) / sqrt(2)
    singles = np.stack([c - s, s + c], axis=-1) / math.sqrt(2.0)
    psi = singles[:, 0, :].astype(complex)
    for j in range(1, n_qubits):
        psi = (psi[:, :, None] * singles[:, j, None, :]).reshape(rows, -1)
    return psi


def _entangled_states(angles: np.ndarray, depth: int) -> np.ndarray:
    rows, n_qubits = angles.shape
    psi = np.full((rows, 2**n_qubits), 2.0 ** (-n_qubits / 2), dtype=complex)
    phases = _cz_ring_phases(n_qubits)
    for _ in range(depth):
        for j in range(n_qubits):
            psi = _apply_ry(psi, j, n_qubits, angles[:, j])
        psi = psi * phases
    return psi


def _encode_rows(spec: KernelSpec, Z: np.ndarray, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    n_qubits = Z.shape[1]
    _check_qubits(n_qubits, max_qubits)
    angles = spec.scaling * Z
    if spec.family is Family.QUANTUM_PRODUCT:
        return _product_states(angles)
    if n_qubits < 2:
        raise InputShapeError("entangled encoding needs at least 2 features")
    return _entangled_states(angles, spec.depth)


def encode_product(x, scaling: float, max_qubits: int = MAX_QUBITS) -> QuantumState:
    """Tensor product of R_y(scaling * x_j)|+> over the features of ``x``."""
    spec = KernelSpec(Family.QUANTUM_PRODUCT, scaling=scaling)
    x = _as_vector(x)
    return QuantumState(_encode_rows(spec, x[None, :], max_qubits)[0])


def encode_entangled(x, scaling: float, depth: int = 2, max_qubits: int = MAX_QUBITS) -> QuantumState:
    """Layered R_y + CZ-ring encoding of ``x`` starting from |+>^D."""
    spec = KernelSpec(Family.QUANTUM_ENTANGLED, scaling=scaling, depth=depth)
    x = _as_vector(x)
    return QuantumState(_encode_rows(spec, x[None, :], max_qubits)[0])


def fidelity(a: QuantumState, b: QuantumState) -> float:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise InputShapeError(
            f"states have different dimensions ({a.amplitudes.size} vs {b.amplitudes.size} amplitudes)"
        )
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# -- kernel evaluation -------------------------------------------------------


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    x = _as_vector(x, "x")
    x2 = _as_vector(x2, "x'")
    if x.shape != x2.shape:
        raise InputShapeError(f"dimension mismatch: {x.size} vs {x2.size}")
    if spec.family is Family.GAUSSIAN:
        diff = x - x2
        return float(np.exp(-np.sum(diff * diff) / (2.0 * spec.bandwidth**2)))
    if spec.family is Family.LAPLACE:
        return float(np.exp(-np.sum(np.abs(x - x2)) / spec.bandwidth))
    # fixed argument order makes the value exactly symmetric
    if tuple(x2) < tuple(x):
        x, x2 = x2, x
    states = _encode_rows(spec, np.stack([x, x2]))
    return float(abs(np.vdot(states[0], states[1])) ** 2)


def _symmetrize(values: np.ndarray) -> np.ndarray:
    upper = np.triu(values, 1)
    out = upper + upper.T
    np.fill_diagonal(out, 1.0)
    return out


def gram(spec: KernelSpec, Z, max_qubits: int = MAX_QUBITS) -> GramMatrix:
    """Dense Gram matrix of ``spec`` over the rows of ``Z``."""
    Z = _as_matrix(Z)
    if spec.family.is_quantum:
        states = _encode_rows(spec, Z, max_qubits)
        values = np.abs(states.conj() @ states.T) ** 2
    else:
        diff = Z[:, None, :] - Z[None, :, :]
        if spec.family is Family.GAUSSIAN:
            values = np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * spec.bandwidth**2))
        else:
            values = np.exp(-np.sum(np.abs(diff), axis=-1) / spec.bandwidth)
    values = _symmetrize(values)
    values.setflags(write=False)
    return GramMatrix(values)


# -- parameter grids ---------------------------------------------------------


def _geometric(lo: float, hi: float, count: int) -> list[float]:
    if count == 1:
        return [math.sqrt(lo * hi)]
    return [float(v) for v in np.geomspace(lo, hi, count)]


def pairwise_distances(Z) -> np.ndarray:
    """Euclidean distances over all unordered pairs of rows."""
    Z = _as_matrix(Z)
    iu = np.triu_indices(Z.shape[0], 1)
    diff = Z[iu[0]] - Z[iu[1]]
    return np.sqrt(np.sum(diff * diff, axis=1))


def bandwidth_grid(Z, count: int = 10, q_lo: float = 0.05, q_hi: float = 0.95) -> list[float]:
    """Geometric grid of bandwidths spanning the q_lo..q_hi quantiles of the
    nonzero pairwise distances in ``Z``."""
    from .statistics import quantile

    if count < 1:
        raise ConfigError("bandwidth count must be >= 1")
    if not 0 < q_lo < q_hi < 1:
        raise ConfigError(f"need 0 < q_lo < q_hi < 1, got ({q_lo}, {q_hi})")
    dists = pairwise_distances(Z)
    dists = dists[dists > 0]
    if dists.size == 0:
        raise DegenerateDataError("all pairwise distances are zero; cannot pick bandwidths")
    return _geometric(quantile(dists, q_lo), quantile(dists, q_hi), count)


def scaling_grid(lo: float, hi: float, count: int) -> list[float]:
    """``count`` log-spaced values from ``lo`` to ``hi`` inclusive."""
    if count < 1:
        raise ConfigError("scaling count must be >= 1")
    if not (0 < lo <= hi) or not math.isfinite(hi):
        raise ConfigError(f"invalid scaling range ({lo}, {hi})")
    if lo == hi:
        return [float(lo)] * count
    return _geometric(lo, hi, count)


def classical_specs(family: Family | str, bandwidths: Sequence[float]) -> list[KernelSpec]:
    return [KernelSpec(Family(family), bandwidth=b) for b in bandwidths]


def quantum_specs(family: Family | str, scalings: Sequence[float], depth: int = 2) -> list[KernelSpec]:
    family = Family(family)
    d = depth if family is Family.QUANTUM_ENTANGLED else 0
    return [KernelSpec(family, scaling=g, depth=d) for g in scalings]
