"""Multivariate cumulants: set-partition conversions, empirical estimates,
and the asymptotic covariance of the stacked cumulant estimator.

Cumulant tensors are stored as SymmetricTensor objects keyed by order. The
stacked coordinate vector concatenates the unique entries order by order
(increasing order, lexicographic indices within an order); every consumer of
that vector uses stacked_labels for the coordinate meaning.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .tensors import SymmetricTensor, unique_indices

__all__ = [
    "set_partitions",
    "cumulant_from_moments",
    "moment_from_cumulants",
    "empirical_raw_moment",
    "empirical_cumulants",
    "stacked_labels",
    "stack_unique",
    "OmegaEstimate",
    "estimate_omega",
    "population_omega",
    "bootstrap_omega",
    "beta_raw_moment",
    "compound_poisson_cumulants",
]


@lru_cache(maxsize=None)
def set_partitions(k: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All partitions of {0..k-1} as tuples of sorted blocks.

    Blocks are sorted tuples ordered by their smallest element. The number of
    partitions is the Bell number (1, 1, 2, 5, 15, 52, 203, ...).
    """
    if k == 0:
        return ((),)
    out = []
    for smaller in set_partitions(k - 1):
        last = k - 1
        for i in range(len(smaller)):
            grown = smaller[:i] + (smaller[i] + (last,),) + smaller[i + 1:]
            out.append(grown)
        out.append(smaller + ((last,),))
    return tuple(out)


def cumulant_from_moments(index, moment) -> float:
    """Joint cumulant at `index` from a raw-moment lookup.

    `moment` maps a canonical index tuple (any length up to len(index)) to the
    raw moment of the corresponding coordinate product.
    """
    index = tuple(index)
    total = 0.0
    for partition in set_partitions(len(index)):
        term = (-1.0) ** (len(partition) - 1) * factorial(len(partition) - 1)
        for block in partition:
            term *= moment(tuple(sorted(index[p] for p in block)))
        total += term
    return total


def moment_from_cumulants(index, cumulant) -> float:
    """Raw moment at `index` from a joint-cumulant lookup (inverse map)."""
    index = tuple(index)
    total = 0.0
    for partition in set_partitions(len(index)):
        term = 1.0
        for block in partition:
            term *= cumulant(tuple(sorted(index[p] for p in block)))
        total += term
    return total


def empirical_raw_moment(samples: np.ndarray, index) -> float:
    """Sample mean of the coordinate product picked out by `index`."""
    samples = np.asarray(samples, dtype=float)
    return float(np.prod(samples[:, list(index)], axis=1).mean())


def _feature_matrix(samples: np.ndarray, d: int, max_order: int):
    """Monomial features x_v for all canonical v of order 1..max_order."""
    labels = [idx for j in range(1, max_order + 1) for idx in unique_indices(d, j)]
    cols = [np.prod(samples[:, list(idx)], axis=1) for idx in labels]
    return labels, np.column_stack(cols)


def empirical_cumulants(samples: np.ndarray, orders) -> dict[int, SymmetricTensor]:
    """k-statistics-free plug-in cumulant tensors of the sample, by order."""
    samples = np.asarray(samples, dtype=float)
    n, d = samples.shape
    orders = sorted(int(k) for k in orders)
    labels, F = _feature_matrix(samples, d, max(orders))
    means = dict(zip(labels, F.mean(axis=0)))
    out = {}
    for k in orders:
        t = SymmetricTensor(d, k)
        for idx in t.indices:
            t[idx] = cumulant_from_moments(idx, means.__getitem__)
        out[k] = t
    return out


def stacked_labels(d: int, orders) -> list[tuple[int, tuple[int, ...]]]:
    """Coordinate labels (order, index) of the stacked cumulant vector."""
    return [
        (k, idx)
        for k in sorted(int(k) for k in orders)
        for idx in unique_indices(d, k)
    ]


def stack_unique(cumulants: dict[int, SymmetricTensor], orders=None) -> np.ndarray:
    """Concatenate unique entries over orders into the stacked vector."""
    orders = sorted(cumulants) if orders is None else sorted(int(k) for k in orders)
    return np.concatenate([cumulants[k].vec_unique() for k in orders])


@dataclass
class OmegaEstimate:
    """Asymptotic covariance of sqrt(n) times the stacked cumulant estimator."""

    matrix: np.ndarray
    labels: list[tuple[int, tuple[int, ...]]]


def _cumulant_jacobian(labels_out, labels_in, means: dict) -> np.ndarray:
    """Jacobian of stacked cumulants w.r.t. the monomial moment features."""
    pos = {idx: j for j, idx in enumerate(labels_in)}
    J = np.zeros((len(labels_out), len(labels_in)))
    for row, (_, index) in enumerate(labels_out):
        for partition in set_partitions(len(index)):
            sign = (-1.0) ** (len(partition) - 1) * factorial(len(partition) - 1)
            block_keys = [
                tuple(sorted(index[p] for p in block)) for block in partition
            ]
            values = [means[key] for key in block_keys]
            for b, key in enumerate(block_keys):
                rest = sign
                for bb, val in enumerate(values):
                    if bb != b:
                        rest *= val
                J[row, pos[key]] += rest
    return J


def estimate_omega(samples: np.ndarray, orders) -> OmegaEstimate:
    """Delta-method estimate of the stacked cumulant covariance.

    Cumulants are smooth functions of the vector of monomial moment features;
    the estimator covariance is J S J^T with S the sample covariance of the
    features and J the analytic Jacobian at the empirical moments. The matrix
    returned is scaled for sqrt(n)-normalized errors (divide by n for the
    covariance of the plug-in estimate itself).
    """
    samples = np.asarray(samples, dtype=float)
    n, d = samples.shape
    orders = sorted(int(k) for k in orders)
    feat_labels, F = _feature_matrix(samples, d, max(orders))
    means = dict(zip(feat_labels, F.mean(axis=0)))
    S = np.cov(F, rowvar=False, ddof=1)
    S = np.atleast_2d(S)
    out_labels = stacked_labels(d, orders)
    J = _cumulant_jacobian(out_labels, feat_labels, means)
    return OmegaEstimate(matrix=J @ S @ J.T, labels=out_labels)


def population_omega(
    cumulants: dict[int, SymmetricTensor], orders
) -> OmegaEstimate:
    """Exact asymptotic covariance of the stacked cumulant estimator.

    `cumulants` must contain the population cumulant tensors of every order
    from 1 up to twice the largest requested order; the covariance of the
    monomial features is then available in closed form and the delta method
    needs no data.
    """
    orders = sorted(int(k) for k in orders)
    top = max(orders)
    missing = [k for k in range(1, 2 * top + 1) if k not in cumulants]
    if missing:
        raise ValueError(f"need population cumulants of orders {missing}")
    d = cumulants[orders[0]].d

    moment_cache: dict[tuple[int, ...], float] = {}

    def moment(index: tuple[int, ...]) -> float:
        if index not in moment_cache:
            moment_cache[index] = moment_from_cumulants(
                index, lambda sub: cumulants[len(sub)][sub]
            )
        return moment_cache[index]

    feat_labels = [
        idx for j in range(1, top + 1) for idx in unique_indices(d, j)
    ]
    p = len(feat_labels)
    S = np.empty((p, p))
    for i, v in enumerate(feat_labels):
        for j, w in enumerate(feat_labels[: i + 1]):
            S[i, j] = S[j, i] = moment(tuple(sorted(v + w))) - moment(v) * moment(w)
    means = {idx: moment(idx) for idx in feat_labels}
    out_labels = stacked_labels(d, orders)
    J = _cumulant_jacobian(out_labels, feat_labels, means)
    return OmegaEstimate(matrix=J @ S @ J.T, labels=out_labels)


def bootstrap_omega(
    samples: np.ndarray, orders, n_boot: int = 200, seed=None
) -> np.ndarray:
    """Nonparametric bootstrap of the same sqrt(n)-scaled covariance."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(n_boot):
        resampled = samples[rng.integers(0, n, size=n)]
        draws.append(stack_unique(empirical_cumulants(resampled, orders)))
    return n * np.cov(np.asarray(draws), rowvar=False, ddof=1)


def beta_raw_moment(mu: float, nu: float, k: int) -> float:
    """k-th raw moment of a Beta law given by mean mu and precision nu.

    Shape parameters are (mu*nu, (1-mu)*nu), so the moment telescopes to
    prod_{r<k} (mu*nu + r) / (nu + r).
    """
    if not (0.0 < mu < 1.0 and nu > 0.0):
        raise ValueError("need 0 < mu < 1 and nu > 0")
    value = 1.0
    for r in range(k):
        value *= (mu * nu + r) / (nu + r)
    return value


def compound_poisson_cumulants(
    rates, jump_moment, orders
) -> dict[int, SymmetricTensor]:
    """Noise cumulant tensors of independent compound Poisson coordinates.

    Coordinate i jumps at rate rates[i] with i.i.d. jump sizes whose k-th raw
    moment is jump_moment(k). All cross entries vanish; the diagonal of the
    order-k tensor is rates * jump_moment(k).
    """
    rates = np.asarray(rates, dtype=float)
    return {
        int(k): SymmetricTensor.from_diagonal(rates * jump_moment(int(k)), int(k))
        for k in orders
    }
