"""Coefficient matrices of the drift in the steady-state cumulant equations,
rank-based identifiability checks, and an exact polytree rank certificate.

The order-k cumulant equation is linear in the drift once the state cumulant
tensor K is fixed: row idx reads

    sum over slots s, targets a of M[idx[s], a] * K[idx with slot s -> a]
        + C_k[idx] = 0.

Collecting coefficients of the drift entries gives the matrix built by
drift_coefficient_matrix. Rows whose index mixes at least two coordinates
have C_k entry zero when the driving noise has independent coordinates, so
those rows annihilate vec(M); stacking them across orders and asking for
rank d*d - 1 is the identifiability check.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, prod

import numpy as np

from .graphs import (
    DirectedGraph,
    connected_components,
    enumerate_treks,
    spanning_polytree,
    sparsity_project,
    topological_order,
)
from .lyapunov import ModelParameters, forward_map, is_stable, solve_lyapunov
from .tensors import SymmetricTensor, canonical_index, unique_indices

__all__ = [
    "all_edges",
    "off_diagonal_indices",
    "drift_coefficient_matrix",
    "CoefficientSystem",
    "assemble_system",
    "numerical_rank",
    "random_sparse_model",
    "generic_identifiability_check",
    "known_noise_identifiability_check",
    "det_expansion_coefficient",
    "det_expansion_identity_holds",
    "WitnessReport",
    "witness_matrix",
    "polytree_rank_witness",
    "witness_lowest_degree",
    "witness_lowest_coefficient_magnitude",
]

ROW_POLICIES = ("all", "off_diagonal")


def all_edges(d: int) -> list[tuple[int, int]]:
    """All d*d edges (src, dst), ordered to match vec of the drift matrix.

    Column p of a coefficient matrix over these edges multiplies vec(M)[p]
    where vec stacks M column by column (first index fastest), since edge
    (src, dst) corresponds to the entry M[dst, src].
    """
    return [(src, dst) for src in range(d) for dst in range(d)]


def off_diagonal_indices(d: int, k: int) -> list[tuple[int, ...]]:
    """Canonical order-k indices touching at least two distinct coordinates."""
    return [idx for idx in unique_indices(d, k) if len(set(idx)) > 1]


def drift_coefficient_matrix(
    kappa: SymmetricTensor, rows=None, columns=None
) -> np.ndarray:
    """Coefficient matrix of the drift in the order-k cumulant equation.

    Row labels are canonical index tuples (default: all unique indices of the
    tensor's order); column labels are edges (src, dst) (default: all_edges).
    The entry at (idx, (src, dst)) is count(idx, dst) times the kappa entry at
    idx with one dst replaced by src, zero when dst does not occur in idx.
    For every drift M it satisfies

        drift_coefficient_matrix(K) @ vec(M)
            == lyapunov_operator_matrix(M, k) @ K.vec_unique().
    """
    d, k = kappa.d, kappa.k
    if rows is None:
        rows = unique_indices(d, k)
    else:
        rows = [canonical_index(idx) for idx in rows]
    if columns is None:
        columns = all_edges(d)
    A = np.zeros((len(rows), len(columns)))
    for rnum, idx in enumerate(rows):
        counts = Counter(idx)
        for cnum, (src, dst) in enumerate(columns):
            n = counts.get(dst, 0)
            if n:
                slot = idx.index(dst)
                replaced = idx[:slot] + (src,) + idx[slot + 1:]
                A[rnum, cnum] = n * kappa[replaced]
    return A


@dataclass
class CoefficientSystem:
    """A stacked coefficient matrix with its row and column labels."""

    matrix: np.ndarray
    row_labels: list[tuple[int, tuple[int, ...]]]
    col_labels: list[tuple[int, int]]


def assemble_system(
    cumulants: dict[int, SymmetricTensor],
    row_policy: str = "off_diagonal",
    columns=None,
) -> CoefficientSystem:
    """Stack drift coefficient matrices over the given cumulant orders.

    row_policy "all" keeps every row; "off_diagonal" keeps the rows whose
    noise entry vanishes under independent noise coordinates, i.e. exactly
    the rows annihilating vec(M).
    """
    if row_policy not in ROW_POLICIES:
        raise ValueError(f"unknown row policy {row_policy!r}")
    orders = sorted(cumulants)
    if not orders:
        raise ValueError("need at least one cumulant order")
    d = cumulants[orders[0]].d
    if columns is None:
        columns = all_edges(d)
    blocks, labels = [], []
    for k in orders:
        kappa = cumulants[k]
        rows = (
            list(unique_indices(d, k))
            if row_policy == "all"
            else off_diagonal_indices(d, k)
        )
        blocks.append(drift_coefficient_matrix(kappa, rows=rows, columns=columns))
        labels.extend((k, idx) for idx in rows)
    return CoefficientSystem(np.vstack(blocks), labels, list(columns))


def numerical_rank(matrix: np.ndarray, rtol: float | None = None) -> int:
    """Rank by singular values above rtol times the largest one.

    The default tolerance is 1000 times looser than machine noise for the
    matrix size, which separates the tiny-but-structural singular values of
    these cumulant systems from genuine rank drops.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    if rtol is None:
        rtol = max(matrix.shape) * np.finfo(float).eps * 1e3
    return int(np.sum(sv > rtol * sv[0]))


def random_sparse_model(
    graph: DirectedGraph, orders, rng, max_tries: int = 500
) -> ModelParameters:
    """Random stable drift respecting the graph, with diagonal noise tensors.

    Off-pattern entries are zero; allowed entries are uniform on [-1, 1] with
    the diagonal pushed down by 2 d on self-loop nodes, redrawing until the
    drift is stable. Noise tensors are diagonal with magnitudes in [0.5, 2],
    signed at random for odd orders.
    """
    d = graph.d
    loops = graph.self_loop_nodes()
    for _ in range(max_tries):
        M = sparsity_project(rng.uniform(-1.0, 1.0, (d, d)), graph)
        for i in loops:
            M[i, i] -= 2.0 * d
        if is_stable(M):
            break
    else:
        raise RuntimeError("found no stable drift for this sparsity pattern")
    noise = {}
    for k in sorted(int(k) for k in orders):
        entries = rng.uniform(0.5, 2.0, d)
        if k % 2:
            entries *= rng.choice([-1.0, 1.0], d)
        noise[k] = SymmetricTensor.from_diagonal(entries, k)
    return ModelParameters(M, noise)


def generic_identifiability_check(
    graph: DirectedGraph,
    r: int,
    n_trials: int = 100,
    seed=None,
    rtol: float | None = None,
) -> dict:
    """Monte Carlo generic-rank check of the stacked off-diagonal system.

    Draws random models respecting the graph, forms the off-diagonal system
    for orders {2, r} with all d*d columns, and records its rank. The rank
    can never exceed d*d minus the number of weakly connected components;
    hitting that bound on most draws certifies the generic rank.
    """
    orders = sorted({2, int(r)})
    d = graph.d
    expected = d * d - len(connected_components(graph))
    rng = np.random.default_rng(seed)
    ranks = []
    for _ in range(n_trials):
        params = random_sparse_model(graph, orders, rng)
        system = assemble_system(forward_map(params), row_policy="off_diagonal")
        ranks.append(numerical_rank(system.matrix, rtol))
    achieved = sum(rank == expected for rank in ranks)
    return {
        "d": d,
        "edges": sorted([a + 1, b + 1] for a, b in graph.edges),
        "r": int(r),
        "orders": orders,
        "trials": n_trials,
        "ranks": ranks,
        "expected_rank": expected,
        "rank_bound_holds": all(rank <= expected for rank in ranks),
        "achieved_fraction": achieved / n_trials if n_trials else 0.0,
        "verdict": "maximal rank" if achieved >= 0.95 * n_trials else "rank deficient",
    }


def known_noise_identifiability_check(
    graph: DirectedGraph,
    r: int,
    n_trials: int = 100,
    seed=None,
    rtol: float | None = None,
) -> dict:
    """Identifiability of the drift when the order-r noise tensor is known.

    With the order-r noise known, the order-r equation rows indexed by
    (src repeated r-1 times, dst) for each edge give a square system in the
    graph's own edges. At any diagonal drift that square matrix has exactly
    one nonzero entry per row, with determinant equal to the product of the
    source-coordinate diagonal cumulants (times r per self-loop), so it is
    generically invertible for every graph with all self-loops. The report
    carries that closed-form certificate plus random-draw ranks.
    """
    r = int(r)
    if r < 3:
        raise ValueError("need noise order r >= 3")
    if not graph.has_all_self_loops():
        raise ValueError("the known-noise certificate needs all self-loops")
    d = graph.d
    edges = sorted(graph.edges)
    rows = [canonical_index((src,) * (r - 1) + (dst,)) for src, dst in edges]

    # Closed-form certificate at a distinct-diagonal drift with unit noise.
    M_diag = np.diag([-(1.0 + i) for i in range(d)])
    kappa = solve_lyapunov(M_diag, SymmetricTensor.identity(d, r))
    square = drift_coefficient_matrix(kappa, rows=rows, columns=edges)
    predicted = prod(
        (r if src == dst else 1.0) * kappa[(src,) * r] for src, dst in edges
    )
    certificate = bool(
        np.isclose(np.abs(np.linalg.det(square)), abs(predicted), rtol=1e-8)
        and abs(predicted) > 0.0
    )

    rng = np.random.default_rng(seed)
    ranks = []
    for _ in range(n_trials):
        params = random_sparse_model(graph, [r], rng)
        kap = solve_lyapunov(params.drift, params.noise[r])
        ranks.append(
            numerical_rank(
                drift_coefficient_matrix(kap, rows=rows, columns=edges), rtol
            )
        )
    achieved = sum(rank == len(edges) for rank in ranks)
    return {
        "d": d,
        "edges": sorted([a + 1, b + 1] for a, b in edges),
        "r": r,
        "trials": n_trials,
        "ranks": ranks,
        "expected_rank": len(edges),
        "diagonal_certificate": certificate,
        "achieved_fraction": achieved / n_trials if n_trials else 0.0,
        "verdict": (
            "identifiable with known order-r noise"
            if certificate and (n_trials == 0 or achieved >= 0.95 * n_trials)
            else "inconclusive"
        ),
    }


def det_expansion_coefficient(d: int, q: int, i: int, r: int) -> Fraction:
    """Combinatorial weight in the witness determinant expansion.

    Counts sign-weighted ways to pick i columns, j of them among q marked
    ones with weight (r-1) each: sum over j of (r-1)^j C(q, j) C(d-1-q, i-j).
    """
    return Fraction(
        sum(
            (r - 1) ** j * comb(q, j) * comb(d - 1 - q, i - j)
            for j in range(0, min(i, q) + 1)
        )
    )


def det_expansion_identity_holds(d: int, q: int, r: int) -> bool:
    """Exact alternating-sum identity used to evaluate the witness determinant.

    sum_{i=0}^{d-1} (r/2)^(d-1-i) (-1)^i c(d, q, i) == (r/2 - 1)^(d-1) (-1)^q
    in exact rational arithmetic.
    """
    half_r = Fraction(r, 2)
    lhs = sum(
        half_r ** (d - 1 - i) * (-1) ** i * det_expansion_coefficient(d, q, i, r)
        for i in range(d)
    )
    rhs = (half_r - 1) ** (d - 1) * (-1) ** q
    return lhs == rhs


# -- exact polytree witness ---------------------------------------------------


def witness_lowest_degree(d: int) -> int:
    """Degree of the lowest-order term of the witness determinant."""
    return (d - 1) * (d + 2)


def witness_lowest_coefficient_magnitude(d: int, r: int) -> Fraction:
    """Magnitude of the witness determinant's lowest-degree coefficient."""
    half_r = Fraction(r, 2)
    return (
        half_r ** (d - 1)
        * abs(half_r - 1) ** (d - 1)
        * half_r ** (d * (d - 1) // 2 - (d - 1))
    )


def _entry_polynomial(
    polytree: DirectedGraph, index: tuple[int, ...], r: int, cache: dict
) -> dict[int, Fraction]:
    """Exact cumulant entry of the special parametrization, as poly in zeta.

    A trek with path lengths summing to L contributes
    (r/k)^(L+1) L! / prod(l_j!) at degree L+1, with k the entry order.
    """
    key = canonical_index(index)
    if key in cache:
        return cache[key]
    k = len(key)
    poly: dict[int, Fraction] = {}
    for trek in enumerate_treks(polytree, key):
        L = sum(trek.lengths)
        coef = Fraction(r, k) ** (L + 1) * Fraction(
            factorial(L), prod(factorial(l) for l in trek.lengths)
        )
        poly[L + 1] = poly.get(L + 1, Fraction(0)) + coef
    cache[key] = {deg: c for deg, c in poly.items() if c}
    return cache[key]


def _witness_layout(graph: DirectedGraph, r: int, polytree: DirectedGraph | None):
    """Topologically relabeled polytree plus witness row/column labels."""
    if not graph.has_all_self_loops():
        raise ValueError("the polytree witness needs all self-loops")
    if polytree is None:
        polytree = spanning_polytree(graph)
    d = graph.d
    tree_edges = polytree.non_loop_edges()
    if len(tree_edges) != d - 1 or len(connected_components(polytree)) != 1:
        raise ValueError("polytree must be a spanning tree of the skeleton")
    order = topological_order(polytree)
    position = {old: new for new, old in enumerate(order)}
    relabeled = DirectedGraph(
        d,
        [(position[a], position[b]) for a, b in tree_edges]
        + [(i, i) for i in range(d)],
    )
    rows: list[tuple[int, tuple[int, ...]]] = []
    for i in range(d):
        for j in range(i + 1, d):
            rows.append((2, (i, j)))
    for i in range(d):
        for j in range(i + 1, d):
            rows.append((r, (i,) + (j,) * (r - 1)))
    for src, dst in sorted(relabeled.non_loop_edges()):
        rows.append((r, (src,) * (r - 1) + (dst,)))
    cols = [edge for edge in all_edges(d) if edge != (0, 0)]
    return relabeled, order, rows, cols


def _witness_entry_polys(relabeled, rows, cols, r):
    """Matrix of exact entry polynomials for the witness system."""
    cache: dict = {}
    entries = []
    for k, idx in rows:
        counts = Counter(idx)
        row = []
        for src, dst in cols:
            n = counts.get(dst, 0)
            if n:
                slot = idx.index(dst)
                replaced = idx[:slot] + (src,) + idx[slot + 1:]
                poly = _entry_polynomial(relabeled, replaced, r, cache)
                row.append({deg: n * c for deg, c in poly.items()})
            else:
                row.append({})
        entries.append(row)
    return entries


def witness_matrix(
    graph: DirectedGraph, r: int, zeta: float, polytree: DirectedGraph | None = None
) -> CoefficientSystem:
    """Float evaluation of the square witness system at one zeta value.

    Rows pair every coordinate couple at orders 2 and r and add one order-r
    row per polytree edge; columns are all edges except the first self-loop,
    both in the topological relabeling (see polytree_rank_witness).
    """
    relabeled, _, rows, cols = _witness_layout(graph, r, polytree)
    entries = _witness_entry_polys(relabeled, rows, cols, int(r))
    matrix = np.array(
        [
            [sum(float(c) * zeta**deg for deg, c in poly.items()) for poly in row]
            for row in entries
        ]
    )
    return CoefficientSystem(matrix, rows, cols)


def _fraction_det(matrix: list[list[Fraction]]) -> Fraction:
    """Exact determinant by fraction-free style elimination with pivoting."""
    n = len(matrix)
    A = [row[:] for row in matrix]
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
            A[i][k] = Fraction(0)
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def _interpolate_fractions(xs, ys) -> list[Fraction]:
    """Monomial coefficients of the polynomial through the given points."""
    n = len(xs)
    newton = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            newton[i] = (newton[i] - newton[i - 1]) / (xs[i] - xs[i - j])
    poly = [Fraction(0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        shifted = [Fraction(0)] * (n + 1)
        for p in range(n):
            if poly[p]:
                shifted[p + 1] += poly[p]
                shifted[p] -= poly[p] * xs[i]
        shifted[0] += newton[i]
        poly = shifted
    return poly[:n]


@dataclass
class WitnessReport:
    """Exact witness determinant and the rank conclusion it certifies.

    The determinant is reported as degree -> coefficient with the leading
    coefficient normalized positive. Row and column labels refer to the
    topological relabeling: new node i is original node relabeling[i].
    """

    determinant: dict[int, Fraction]
    lowest_degree: int | None
    lowest_coefficient: Fraction | None
    expected_lowest_degree: int
    expected_lowest_magnitude: Fraction
    generically_identifiable: bool
    row_labels: list[tuple[int, tuple[int, ...]]]
    col_labels: list[tuple[int, int]]
    relabeling: list[int]


def polytree_rank_witness(
    graph: DirectedGraph, r: int, polytree: DirectedGraph | None = None
) -> WitnessReport:
    """Exact rank certificate for a connected graph with all self-loops.

    Evaluates the cumulants of the special polytree parametrization along a
    grid of integer zeta values, takes exact determinants of the square
    witness system, and interpolates the determinant polynomial in exact
    rational arithmetic. A nonzero polynomial certifies that the stacked
    off-diagonal system at orders {2, r} has the maximal rank d*d - 1 for
    generic parameters on any graph containing the polytree.
    """
    r = int(r)
    relabeled, order, rows, cols = _witness_layout(graph, r, polytree)
    entries = _witness_entry_polys(relabeled, rows, cols, r)
    degree_bound = sum(
        max((max(poly, default=0) for poly in row), default=0) for row in entries
    )
    xs = [Fraction(z) for z in range(1, degree_bound + 2)]
    ys = []
    for x in xs:
        matrix = [
            [
                sum((c * x**deg for deg, c in poly.items()), Fraction(0))
                for poly in row
            ]
            for row in entries
        ]
        ys.append(_fraction_det(matrix))
    coeffs = _interpolate_fractions(xs, ys)
    leading = next((c for c in reversed(coeffs) if c), None)
    if leading is not None and leading < 0:
        coeffs = [-c for c in coeffs]
    determinant = {deg: c for deg, c in enumerate(coeffs) if c}
    lowest = min(determinant) if determinant else None
    return WitnessReport(
        determinant=determinant,
        lowest_degree=lowest,
        lowest_coefficient=determinant[lowest] if lowest is not None else None,
        expected_lowest_degree=witness_lowest_degree(graph.d),
        expected_lowest_magnitude=witness_lowest_coefficient_magnitude(graph.d, r),
        generically_identifiable=bool(determinant),
        row_labels=rows,
        col_labels=cols,
        relabeling=order,
    )
