"""Symmetric tensors in unique-entry storage.

A symmetric tensor of order k over dimension d is determined by its entries at
nondecreasing multi-indices. This module fixes one canonical enumeration of
those indices (nondecreasing tuples in lexicographic order) and everything else
in the package -- vectorisations, coefficient-matrix rows, cumulant vectors --
is aligned with it.

Index conventions: 0-based everywhere in code; the JSON form uses 1-based
indices for human readability.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import lru_cache, reduce

import numpy as np

__all__ = [
    "unique_indices",
    "canonical_index",
    "multiplicity",
    "n_mode_product",
    "kron_sum_matrix",
    "vec",
    "SymmetricTensor",
]


@lru_cache(maxsize=None)
def unique_indices(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All nondecreasing k-tuples over {0,...,d-1} in lexicographic order."""
    if d < 1 or k < 1:
        raise ValueError("dimension and order must be positive")
    return tuple(itertools.combinations_with_replacement(range(d), k))


def canonical_index(index) -> tuple[int, ...]:
    """Sort a multi-index into its nondecreasing representative."""
    return tuple(sorted(index))


def multiplicity(index) -> int:
    """Number of distinct permutations of a multi-index.

    This is the number of positions the entry occupies in the dense tensor:
    k! / prod(count_i!) over the repetition counts.
    """
    counts = {}
    for i in index:
        counts[i] = counts.get(i, 0) + 1
    out = math.factorial(len(tuple(index)))
    for c in counts.values():
        out //= math.factorial(c)
    return out


@lru_cache(maxsize=None)
def _position_lookup(d: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: p for p, idx in enumerate(unique_indices(d, k))}


def n_mode_product(tensor: np.ndarray, matrix: np.ndarray, mode: int) -> np.ndarray:
    """Contract `mode` of a dense tensor with the columns of a matrix.

    (T x_n M)[..., j, ...] = sum_i M[j, i] * T[..., i, ...] with j in axis
    `mode` (0-based) of the result.
    """
    tensor = np.asarray(tensor)
    matrix = np.asarray(matrix)
    if not 0 <= mode < tensor.ndim:
        raise ValueError(f"mode {mode} out of range for order-{tensor.ndim} tensor")
    out = np.tensordot(matrix, tensor, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def vec(tensor: np.ndarray) -> np.ndarray:
    """Flatten a dense tensor with the first index varying fastest."""
    return np.asarray(tensor).reshape(-1, order="F")


def kron_sum_matrix(M: np.ndarray, k: int) -> np.ndarray:
    """Matrix of T -> sum_n T x_n M on the d^k vectorisation used by `vec`.

    Built as sum over modes of I x ... x M x ... x I with M in the slot acting
    on that mode. Dense: d^k by d^k, fine for the small dimensions this package
    targets (d <= 12 with k <= 3, d <= 4 with k = 4).
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d):
        raise ValueError("M must be square")
    eye = np.eye(d)
    total = np.zeros((d**k, d**k))
    for mode in range(k):
        # vec() puts axis 0 innermost, so the factor acting on axis `mode`
        # sits at position k-1-mode of the Kronecker product.
        factors = [eye] * k
        factors[k - 1 - mode] = M
        total += reduce(np.kron, factors)
    return total


class SymmetricTensor:
    """Order-k symmetric tensor over R^d stored by unique entries.

    Values are kept in a flat float array aligned with `unique_indices(d, k)`.
    Indexing accepts any permutation of a multi-index.
    """

    def __init__(self, d: int, k: int, values: np.ndarray | None = None):
        self.d = int(d)
        self.k = int(k)
        size = len(unique_indices(self.d, self.k))
        if values is None:
            self.values = np.zeros(size)
        else:
            values = np.asarray(values, dtype=float)
            if values.shape != (size,):
                raise ValueError(
                    f"expected {size} unique values for d={d}, k={k}, "
                    f"got shape {values.shape}"
                )
            self.values = values.copy()

    # -- element access -------------------------------------------------

    def _pos(self, index) -> int:
        key = canonical_index(index)
        try:
            return _position_lookup(self.d, self.k)[key]
        except KeyError:
            raise IndexError(f"index {tuple(index)} invalid for d={self.d}, k={self.k}")

    def __getitem__(self, index) -> float:
        return float(self.values[self._pos(index)])

    def __setitem__(self, index, value) -> None:
        self.values[self._pos(index)] = value

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return unique_indices(self.d, self.k)

    # -- conversions ----------------------------------------------------

    def vec_unique(self) -> np.ndarray:
        """Unweighted vector of unique entries in canonical order."""
        return self.values.copy()

    @classmethod
    def from_vec_unique(cls, d: int, k: int, values) -> "SymmetricTensor":
        return cls(d, k, np.asarray(values, dtype=float))

    def to_dense(self) -> np.ndarray:
        out = np.empty((self.d,) * self.k)
        for idx, v in zip(self.indices, self.values):
            for perm in set(itertools.permutations(idx)):
                out[perm] = v
        return out

    @classmethod
    def from_dense(
        cls, arr: np.ndarray, symmetrize: bool = False, tol: float = 1e-8
    ) -> "SymmetricTensor":
        """Read a dense tensor, checking (or averaging away) asymmetry.

        With symmetrize=False the entries across each permutation class must
        agree to within `tol` relative to the largest entry magnitude.
        """
        arr = np.asarray(arr, dtype=float)
        d = arr.shape[0]
        k = arr.ndim
        if arr.shape != (d,) * k:
            raise ValueError(f"dense tensor must be hypercubic, got {arr.shape}")
        scale = max(np.max(np.abs(arr)), 1.0)
        values = np.empty(len(unique_indices(d, k)))
        for p, idx in enumerate(unique_indices(d, k)):
            group = [arr[perm] for perm in set(itertools.permutations(idx))]
            if symmetrize:
                values[p] = float(np.mean(group))
            else:
                if max(group) - min(group) > tol * scale:
                    raise ValueError(f"tensor not symmetric at index class {idx}")
                values[p] = float(arr[idx])
        return cls(d, k, values)

    @classmethod
    def identity(cls, d: int, k: int) -> "SymmetricTensor":
        """Tensor with ones on the diagonal entries (i,...,i), zero elsewhere."""
        t = cls(d, k)
        for i in range(d):
            t[(i,) * k] = 1.0
        return t

    @classmethod
    def from_diagonal(cls, diag, k: int) -> "SymmetricTensor":
        diag = np.asarray(diag, dtype=float)
        t = cls(diag.shape[0], k)
        for i, v in enumerate(diag):
            t[(i,) * k] = v
        return t

    # -- arithmetic helpers (used by tests and the forward map) ----------

    def __mul__(self, scalar: float) -> "SymmetricTensor":
        return SymmetricTensor(self.d, self.k, self.values * float(scalar))

    __rmul__ = __mul__

    def __add__(self, other: "SymmetricTensor") -> "SymmetricTensor":
        if (self.d, self.k) != (other.d, other.k):
            raise ValueError("shape mismatch")
        return SymmetricTensor(self.d, self.k, self.values + other.values)

    def allclose(self, other: "SymmetricTensor", rtol=1e-9, atol=1e-12) -> bool:
        return (self.d, self.k) == (other.d, other.k) and np.allclose(
            self.values, other.values, rtol=rtol, atol=atol
        )

    def __repr__(self) -> str:
        return f"SymmetricTensor(d={self.d}, k={self.k}, nnz={np.count_nonzero(self.values)})"

    # -- JSON (1-based indices, unique entries) ---------------------------

    def to_json(self) -> str:
        entries = [
            [*(i + 1 for i in idx), float(v)]
            for idx, v in zip(self.indices, self.values)
            if v != 0.0
        ]
        return json.dumps({"d": self.d, "k": self.k, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "SymmetricTensor":
        obj = json.loads(text)
        d, k = int(obj["d"]), int(obj["k"])
        t = cls(d, k)
        seen = set()
        for entry in obj["entries"]:
            if len(entry) != k + 1:
                raise ValueError(f"entry {entry} should have {k} indices and a value")
            idx = canonical_index(int(i) - 1 for i in entry[:-1])
            if any(i < 0 or i >= d for i in idx):
                raise ValueError(f"entry {entry} has indices outside 1..{d}")
            if idx in seen:
                raise ValueError(f"duplicate entry for index class {idx}")
            seen.add(idx)
            t[idx] = float(entry[-1])
        return t
