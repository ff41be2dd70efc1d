"""Steady-state cumulant solvers for linear SDEs driven by Lévy noise.

For a stable drift M, the order-k steady-state cumulant tensor K solves

    sum over modes m of (K x_m M) + C_k = 0,

where C_k = cum_k of the unit-rate noise increments, and x_m is the mode-m
matrix product. Vectorized, the operator on the left is the Kronecker sum of
k copies of M, which is invertible exactly when no k eigenvalues of M (with
repetition) sum to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial, prod

import numpy as np
import scipy.linalg

from .graphs import DirectedGraph, enumerate_treks
from .tensors import SymmetricTensor, kron_sum_matrix, unique_indices, vec

__all__ = [
    "SingularSystemError",
    "ModelParameters",
    "is_stable",
    "eigenvalue_sum_margin",
    "solve_lyapunov",
    "forward_map",
    "lyapunov_operator_matrix",
    "special_drift_matrix",
    "trek_closed_form",
]

STABILITY_TOL = 1e-10


class SingularSystemError(ValueError):
    """The cumulant equation has no unique solution for this drift and order."""


def is_stable(M: np.ndarray, tol: float = STABILITY_TOL) -> bool:
    """True when every eigenvalue of M has real part below -tol."""
    M = np.asarray(M, dtype=float)
    return bool(np.max(np.linalg.eigvals(M).real) < -tol)


def eigenvalue_sum_margin(M: np.ndarray, k: int) -> float:
    """Smallest |sum| over all k-multisets of eigenvalues of M."""
    eigs = np.linalg.eigvals(np.asarray(M, dtype=float))
    return min(
        abs(sum(combo)) for combo in combinations_with_replacement(eigs, k)
    )


def solve_lyapunov(M: np.ndarray, noise_cumulant) -> SymmetricTensor:
    """Solve the order-k steady-state cumulant equation for K.

    `noise_cumulant` is the order-k noise cumulant tensor (SymmetricTensor or
    dense array). Solves the d^k dense linear system via the Kronecker sum of
    M, then reads off the unique entries. Memory grows like d^(2k), which is
    fine for the intended small dimensions.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d):
        raise ValueError("drift matrix must be square")
    if isinstance(noise_cumulant, SymmetricTensor):
        C = noise_cumulant
    else:
        C = SymmetricTensor.from_dense(np.asarray(noise_cumulant, dtype=float))
    if C.d != d:
        raise ValueError(f"noise cumulant dimension {C.d} != drift dimension {d}")
    k = C.k
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvals(M)))))
    if eigenvalue_sum_margin(M, k) <= 1e-12 * k * scale:
        raise SingularSystemError(
            f"{k} eigenvalues of the drift sum to zero; order-{k} equation is singular"
        )
    L = kron_sum_matrix(M, k)
    x = np.linalg.solve(L, -vec(C.to_dense()))
    dense = x.reshape((d,) * k, order="F")
    return SymmetricTensor.from_dense(dense, symmetrize=True)


@dataclass
class ModelParameters:
    """A stable drift matrix plus noise cumulant tensors keyed by order."""

    drift: np.ndarray
    noise: dict[int, SymmetricTensor] = field(default_factory=dict)

    def __post_init__(self):
        self.drift = np.asarray(self.drift, dtype=float)
        d = self.drift.shape[0]
        if self.drift.shape != (d, d):
            raise ValueError("drift matrix must be square")
        fixed = {}
        for k, C in self.noise.items():
            if not isinstance(C, SymmetricTensor):
                C = SymmetricTensor.from_dense(np.asarray(C, dtype=float))
            if C.k != k:
                raise ValueError(f"noise tensor under key {k} has order {C.k}")
            if C.d != d:
                raise ValueError("noise tensor dimension does not match drift")
            fixed[int(k)] = C
        self.noise = fixed

    @property
    def d(self) -> int:
        return self.drift.shape[0]

    @property
    def orders(self) -> list[int]:
        return sorted(self.noise)


def forward_map(params: ModelParameters, orders=None) -> dict[int, SymmetricTensor]:
    """Steady-state cumulant tensors of the state, keyed by order."""
    orders = params.orders if orders is None else sorted(int(k) for k in orders)
    out = {}
    for k in orders:
        if k not in params.noise:
            raise KeyError(f"no noise cumulant of order {k} in the model")
        out[k] = solve_lyapunov(params.drift, params.noise[k])
    return out


def lyapunov_operator_matrix(M: np.ndarray, k: int) -> np.ndarray:
    """Matrix of the order-k cumulant operator on unique tensor entries.

    Rows and columns are indexed by the canonical nondecreasing index tuples
    of unique_indices(d, k). Row idx of the product with the unique-entry
    vector of K equals the idx entry of the mode-product sum, so

        lyapunov_operator_matrix(M, k) @ K.vec_unique() + C.vec_unique() = 0.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    rows = unique_indices(d, k)
    pos = {idx: n for n, idx in enumerate(rows)}
    B = np.zeros((len(rows), len(rows)))
    for rnum, idx in enumerate(rows):
        for slot in range(k):
            for j in range(d):
                col = list(idx)
                col[slot] = j
                B[rnum, pos[tuple(sorted(col))]] += M[idx[slot], j]
    return B


def special_drift_matrix(graph: DirectedGraph, r: int, zeta: float) -> np.ndarray:
    """Drift with diagonal -1/(r*zeta) and unit weight on non-loop edges.

    The graph must have every self-loop; this is the parametrization whose
    steady-state cumulants the trek closed form reproduces.
    """
    if not graph.has_all_self_loops():
        raise ValueError("the special parametrization needs all self-loops")
    M = np.diag(np.full(graph.d, -1.0 / (r * zeta)))
    for src, dst in graph.non_loop_edges():
        M[dst, src] = 1.0
    return M


def trek_closed_form(graph: DirectedGraph, k: int, r: int, zeta: float) -> SymmetricTensor:
    """Order-k steady-state cumulants of the special parametrization, by treks.

    For the drift of special_drift_matrix(graph, r, zeta) and noise cumulant
    tensors equal to the identity tensor at every order, the entry at a given
    index is a sum over treks to that index's nodes: a trek with path lengths
    l_1..l_k and total L contributes (r*zeta/k)**(L+1) * L! / prod(l_j!).

    The non-loop part of the graph must be acyclic.
    """
    if not graph.has_all_self_loops():
        raise ValueError("the special parametrization needs all self-loops")
    result = SymmetricTensor(graph.d, k)
    for idx in result.indices:
        total = 0.0
        for trek in enumerate_treks(graph, idx):
            L = sum(trek.lengths)
            total += (r * zeta / k) ** (L + 1) * factorial(L) / prod(
                factorial(l) for l in trek.lengths
            )
        result[idx] = total
    return result


def _integral_cumulant(M: np.ndarray, C: np.ndarray, t_max: float, n_nodes: int = 400):
    """Quadrature evaluation of the matrix-exponential integral form.

    Slow reference used in tests; integrates the k-fold mode product of C
    with exp(M t) over [0, t_max] with the trapezoid rule on a fine grid.
    """
    from .tensors import n_mode_product

    M = np.asarray(M, dtype=float)
    C = np.asarray(C, dtype=float)
    k = C.ndim
    ts = np.linspace(0.0, t_max, n_nodes)
    values = []
    for t in ts:
        E = scipy.linalg.expm(M * t)
        T = C
        for mode in range(k):
            T = n_mode_product(T, E, mode)
        values.append(T)
    return np.trapezoid(np.stack(values), ts, axis=0)
