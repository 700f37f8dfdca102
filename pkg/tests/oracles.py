"""Reference implementations used only by the tests.

They are written independently of the library: plain loops, math module
kernels, explicit full-size matrices for circuits.
"""
import math

import numpy as np


def gaussian(x, y, sigma):
    return math.exp(-sum((a - b) ** 2 for a, b in zip(x, y)) / (2 * sigma * sigma))


def laplace(x, y, sigma):
    return math.exp(-sum(abs(a - b) for a, b in zip(x, y)) / sigma)


def product_fidelity(x, y, gamma):
    out = 1.0
    for a, b in zip(x, y):
        out *= math.cos(gamma * (a - b) / 2) ** 2
    return out


def _ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def _kron_all(mats):
    out = np.array([[1.0]])
    for m in mats:
        out = np.kron(out, m)
    return out


def _cz(n, a, b):
    dim = 2**n
    U = np.eye(dim)
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[a] and bits[b]:
            U[i, i] = -1.0
    return U


def entangled_state(x, gamma, depth):
    """Full 2^n x 2^n matrices applied to |+>^n: per layer R_y on each qubit,
    then CZ on each distinct ring pair."""
    n = len(x)
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    psi = _kron_all([plus[:, None]] * n)[:, 0]
    pairs = sorted({tuple(sorted((j, (j + 1) % n))) for j in range(n) if (j + 1) % n != j})
    for _ in range(depth):
        psi = _kron_all([_ry(gamma * xj) for xj in x]) @ psi
        for a, b in pairs:
            psi = _cz(n, a, b) @ psi
    return psi


def entangled_fidelity(x, y, gamma, depth):
    return float(abs(np.dot(entangled_state(x, gamma, depth), entangled_state(y, gamma, depth))) ** 2)


def kernel(spec, x, y):
    fam = spec.family.value
    if fam == "gaussian":
        return gaussian(x, y, spec.bandwidth)
    if fam == "laplace":
        return laplace(x, y, spec.bandwidth)
    if fam == "quantum_product":
        return product_fidelity(x, y, spec.scaling)
    return entangled_fidelity(x, y, spec.scaling, spec.depth)


def mmd2_loop(spec, X, Y):
    """Unbiased MMD^2 by explicit double loops over raw samples."""
    n, m = len(X), len(Y)
    xx = sum(kernel(spec, X[i], X[j]) for i in range(n) for j in range(n) if i != j)
    yy = sum(kernel(spec, Y[i], Y[j]) for i in range(m) for j in range(m) if i != j)
    xy = sum(kernel(spec, X[i], Y[j]) for i in range(n) for j in range(m))
    return xx / (n * (n - 1)) + yy / (m * (m - 1)) - 2 * xy / (n * m)


def quantile_enum(values, q):
    """Finite-set quantile by enumerating candidate thresholds.

    The indicator average is a right-continuous step function of r that only
    jumps at attained values, so the infimum is the smallest attained value
    meeting the level.
    """
    N = len(values)
    ok = [r for r in values if sum(1 for a in values if a <= r) / N >= q]
    return min(ok)
