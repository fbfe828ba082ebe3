"""
Dense linear algebra used by the pipeline.

Thin wrappers over LAPACK (via numpy) that pin down exactly the contracts the
rest of the package relies on: descending singular values, thresholded
pseudo-inverse, general eigenvalues and sorted symmetric eigenpairs. Rank
decisions are left to the callers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinAlgConvergenceError, SymmetryError


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray  # (rows, k), orthonormal columns
    s: np.ndarray  # (k,), nonincreasing
    vh: np.ndarray  # (k, cols), orthonormal rows; V = vh.conj().T

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vh


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    return a


def svd(a) -> SvdFactors:
    """Thin SVD ``A = U diag(s) V^*``."""
    a = _as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise LinAlgConvergenceError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(u, s, vh)


def pinv(a, rel_tol: float = 1e-8) -> np.ndarray:
    """Moore-Penrose pseudo-inverse; singular values below ``rel_tol * s_max`` count as zero."""
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    f = svd(a)
    keep = f.s >= rel_tol * f.s[0] if f.s[0] > 0 else np.zeros_like(f.s, dtype=bool)
    inv_s = np.zeros_like(f.s)
    inv_s[keep] = 1.0 / f.s[keep]
    return (f.vh.conj().T * inv_s) @ f.u.conj().T


def numerical_rank(a, rel_tol: float = 1e-8) -> int:
    s = svd(a).s
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def eig_general(a) -> np.ndarray:
    """All eigenvalues (with multiplicity) of a square complex matrix."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"eig_general needs a square matrix, got {a.shape}")
    try:
        return np.linalg.eigvals(a.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise LinAlgConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc


def eig_symmetric(s, sym_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a real symmetric matrix, sorted by eigenvalue descending.

    Returns ``(values, vectors)`` with ``vectors[:, i]`` paired to ``values[i]``.

    Raises:
        SymmetryError: if ``|S - S^T|`` exceeds ``sym_tol * |S|`` (max-norm).
    """
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1] or np.iscomplexobj(s) and np.any(s.imag != 0):
        raise SymmetryError(f"expected a real square matrix, got shape {s.shape}")
    s = np.real(s).astype(float)
    scale = np.max(np.abs(s))
    if np.max(np.abs(s - s.T)) > sym_tol * max(scale, np.finfo(float).tiny):
        raise SymmetryError("matrix is not symmetric to tolerance")
    try:
        w, v = np.linalg.eigh(0.5 * (s + s.T))
    except np.linalg.LinAlgError as exc:
        raise LinAlgConvergenceError(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]
