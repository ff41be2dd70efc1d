"""Drift estimation from steady-state cumulants and its asymptotic inference.

The drift enters the stacked off-diagonal cumulant system linearly and spans
the kernel for identifiable graphs, so the estimator is the right singular
vector of the empirical system for its smallest singular value, normalized
and signed to look like a stable drift. Perturbation of that singular vector
is linear in the perturbation of the matrix, which combined with the CLT for
empirical cumulants gives a plug-in asymptotic covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import assemble_system, off_diagonal_indices
from .cumulants import empirical_cumulants, stacked_labels
from .lyapunov import is_stable, lyapunov_operator_matrix
from .tensors import SymmetricTensor, unique_indices

__all__ = [
    "moore_penrose",
    "least_singular_vector",
    "DriftEstimate",
    "estimate_drift",
    "SingularVectorJacobian",
    "singular_vector_jacobian",
    "AsymptoticCovariance",
    "asymptotic_covariance",
]

SIGN_TIE_RTOL = 1e-12


def _default_rtol(shape) -> float:
    return max(shape) * np.finfo(float).eps * 1e3


def moore_penrose(A: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Pseudoinverse with the cutoff used by the rank checks.

    The coefficient system of an identifiable model has one singular value
    that is zero up to solver noise; the default numpy cutoff can keep it and
    blow up the inverse, so the default here is the looser rank threshold.
    """
    A = np.asarray(A, dtype=float)
    if rtol is None:
        rtol = _default_rtol(A.shape)
    return np.linalg.pinv(A, rcond=rtol)


def least_singular_vector(A: np.ndarray):
    """Right singular vector for the smallest singular value of A.

    Returns (v, sigma_min, gap) with gap the distance from sigma_min to the
    next singular value; when A has fewer rows than columns the missing
    singular values count as zeros.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    s = np.concatenate([s, np.zeros(max(0, n - m))])
    v = Vt[-1]
    sigma_min = float(s[-1])
    gap = float(s[-2] - s[-1]) if n >= 2 else float("inf")
    return v, sigma_min, gap


@dataclass
class DriftEstimate:
    """Scale-free drift estimate with the singular values behind it.

    `matrix` has unit Frobenius norm; `gap` separating the two smallest
    singular values of the system is the practical identifiability margin.
    """

    matrix: np.ndarray
    sigma_min: float
    gap: float
    stable: bool


def _sign_fix(M: np.ndarray) -> np.ndarray:
    """Resolve the sign so the estimate looks like a stable drift."""
    trace = float(np.trace(M))
    scale = float(np.abs(np.diag(M)).sum())
    if abs(trace) <= SIGN_TIE_RTOL * scale:
        j = int(np.argmax(np.abs(np.diag(M))))
        if M[j, j] > 0:
            return -M
        return M
    return -M if trace > 0 else M


def estimate_drift(
    samples: np.ndarray | None = None,
    orders=(2, 3),
    *,
    cumulants: dict[int, SymmetricTensor] | None = None,
) -> DriftEstimate:
    """Estimate the drift direction from samples or from cumulant tensors.

    Builds the stacked off-diagonal coefficient system over the given orders
    and takes its least right singular vector, reshaped column by column into
    a matrix of unit Frobenius norm. The overall sign makes the trace
    negative; an exactly balanced trace falls back to making the largest
    diagonal entry negative. Stability of the estimate is reported, not
    enforced.
    """
    if cumulants is None:
        if samples is None:
            raise ValueError("need samples or cumulants")
        cumulants = empirical_cumulants(samples, orders)
    system = assemble_system(cumulants, row_policy="off_diagonal")
    v, sigma_min, gap = least_singular_vector(system.matrix)
    d = cumulants[sorted(cumulants)[0]].d
    M = _sign_fix(v.reshape((d, d), order="F"))
    return DriftEstimate(
        matrix=M, sigma_min=sigma_min, gap=gap, stable=is_stable(M)
    )


@dataclass
class SingularVectorJacobian:
    """Derivative of the least singular vector at a kernel matrix.

    At a matrix A whose smallest singular value is exactly zero with kernel
    direction v, perturbing A by H moves the singular vector by
    apply(H) = -pinv(A) @ H @ v, up to o(H).
    """

    pinv: np.ndarray
    direction: np.ndarray

    def apply(self, H: np.ndarray) -> np.ndarray:
        return -self.pinv @ (np.asarray(H, dtype=float) @ self.direction)


def singular_vector_jacobian(
    A: np.ndarray, drift=None, rtol: float | None = None
) -> SingularVectorJacobian:
    """Jacobian of the drift estimator at a system with an exact kernel.

    `drift` is the kernel direction, given as a length d*d vector or as a
    d x d matrix (vectorized column by column and normalized); when omitted
    it is taken from the SVD of A itself.
    """
    A = np.asarray(A, dtype=float)
    if drift is None:
        v, _, _ = least_singular_vector(A)
    else:
        drift = np.asarray(drift, dtype=float)
        v = drift.reshape(-1, order="F") if drift.ndim == 2 else drift
        v = v / np.linalg.norm(v)
    return SingularVectorJacobian(pinv=moore_penrose(A, rtol), direction=v)


@dataclass
class AsymptoticCovariance:
    """Asymptotic covariance of the sqrt(n)-scaled drift estimator error.

    `matrix` is for the vectorized estimate (column by column); `total` is
    its trace, the limit of n times the expected squared Frobenius error.
    """

    matrix: np.ndarray
    total: float


def asymptotic_covariance(
    drift: np.ndarray,
    cumulants: dict[int, SymmetricTensor],
    omega: np.ndarray,
    rtol: float | None = None,
) -> AsymptoticCovariance:
    """Delta-method covariance of the drift estimator.

    `drift` is the drift matrix the cumulants belong to (any scale),
    `cumulants` the tensors the estimator consumes, and `omega` the
    asymptotic covariance of the sqrt(n)-scaled stacked cumulant estimator,
    aligned with stacked_labels over the same orders. The estimator error is
    linear in the cumulant error through the coefficient system built at the
    truth, with the cumulant-to-system map given by the Lyapunov operator of
    the unit-norm drift.
    """
    drift = np.asarray(drift, dtype=float)
    d = drift.shape[0]
    unit = drift / np.linalg.norm(drift)
    orders = sorted(cumulants)
    system = assemble_system(cumulants, row_policy="off_diagonal")
    blocks = []
    for k in orders:
        B = lyapunov_operator_matrix(unit, k)
        position = {idx: i for i, idx in enumerate(unique_indices(d, k))}
        keep = [position[idx] for idx in off_diagonal_indices(d, k)]
        blocks.append(B[keep, :])
    q = sum(b.shape[1] for b in blocks)
    B_full = np.zeros((sum(b.shape[0] for b in blocks), q))
    r0, c0 = 0, 0
    for b in blocks:
        B_full[r0 : r0 + b.shape[0], c0 : c0 + b.shape[1]] = b
        r0 += b.shape[0]
        c0 += b.shape[1]
    labels = stacked_labels(d, orders)
    if np.asarray(omega).shape != (len(labels), len(labels)):
        raise ValueError(
            f"omega must be {len(labels)} x {len(labels)} for orders {orders}"
        )
    J = -moore_penrose(system.matrix, rtol) @ B_full
    cov = J @ np.asarray(omega, dtype=float) @ J.T
    return AsymptoticCovariance(matrix=cov, total=float(np.trace(cov)))
