"""Repair of non-positive-semidefinite correlation matrices.

The repair is a single truncate-and-rescale pass: eigendecompose, zero out
negative eigenvalues (the Frobenius-nearest symmetric PSD matrix),
reconstruct, and rescale the result back to unit diagonal. Rescaling keeps
every marginal variance untouched, so only joint behavior changes. The
output may be singular; downstream sampling must not require invertibility.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationMatrix
from .errors import DataValidationError
from .validation import as_square_matrix, check_symmetric

#: Eigenvalues no lower than -PSD_TOLERANCE count as zero: numerical noise
#: from the decomposition must not trigger a spurious rescale.
PSD_TOLERANCE = 1e-10


def eigen_sym(matrix, symmetry_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (U, w) with columns of U the eigenvectors matching w, so that
    ``U @ np.diag(w) @ U.T`` reconstructs the input.
    """
    arr = as_square_matrix(matrix, "matrix")
    check_symmetric(arr, symmetry_tol, "matrix")
    w, u = np.linalg.eigh(arr)
    order = np.argsort(w)[::-1]
    return u[:, order], w[order]


def nearest_psd(matrix) -> np.ndarray:
    """Frobenius-nearest symmetric PSD matrix: negative eigenvalues zeroed.

    Already-PSD input is returned unchanged (as a copy).
    """
    arr = as_square_matrix(matrix, "matrix")
    u, w = eigen_sym(arr)
    if w.size == 0 or w[-1] >= 0.0:
        return arr.copy()
    rebuilt = (u * np.maximum(w, 0.0)) @ u.T
    return (rebuilt + rebuilt.T) / 2.0


def rescale_to_correlation(matrix) -> np.ndarray:
    """Rescale a PSD matrix with positive diagonal to unit diagonal.

    Congruence by a positive diagonal preserves positive semidefiniteness.
    """
    arr = as_square_matrix(matrix, "matrix")
    diag = np.diag(arr)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise DataValidationError(
            f"cannot rescale: non-positive diagonal at index {int(bad[0])} (value {diag[bad[0]]!r})"
        )
    scale = np.sqrt(diag)
    out = arr / np.outer(scale, scale)
    out = (out + out.T) / 2.0
    np.clip(out, -1.0, 1.0, out=out)
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True)
class RepairDiagnostics:
    """What the repair did to one matrix."""

    repaired: bool
    min_eigenvalue: float
    max_abs_change: float


def repair_matrix(matrix, psd_tol: float = PSD_TOLERANCE) -> tuple[np.ndarray, RepairDiagnostics]:
    """Array-level repair: returns (valid correlation array, diagnostics).

    Input within ``-psd_tol`` of PSD is passed through unchanged; otherwise
    negative eigenvalues are truncated and the reconstruction is rescaled
    back to unit diagonal.
    """
    arr = as_square_matrix(matrix, "matrix")
    check_symmetric(arr, 1e-12, "matrix")
    eigenvalues = np.linalg.eigvalsh(arr)
    min_eig = float(eigenvalues[0]) if eigenvalues.size else 0.0
    if min_eig >= -psd_tol:
        return arr.copy(), RepairDiagnostics(False, min_eig, 0.0)
    repaired = rescale_to_correlation(nearest_psd(arr))
    max_change = float(np.max(np.abs(repaired - arr)))
    return repaired, RepairDiagnostics(True, min_eig, max_change)


def repair_with_diagnostics(matrix: CorrelationMatrix) -> tuple[CorrelationMatrix, RepairDiagnostics]:
    fixed, info = repair_matrix(matrix.values)
    if not info.repaired:
        return matrix, info
    return CorrelationMatrix(matrix.countries, fixed), info


def repair(matrix: CorrelationMatrix) -> CorrelationMatrix:
    """Return a PSD, unit-diagonal version of the matrix (identity when valid)."""
    return repair_with_diagnostics(matrix)[0]


def symmetric_sqrt(matrix, clip_tol: float = 1e-8) -> np.ndarray:
    """Symmetric square root U sqrt(max(D, 0)) U^T, valid for singular PSD input.

    Eigenvalues below ``-clip_tol`` mean the matrix was not repaired and are
    rejected; tiny negatives from rounding are truncated to zero.
    """
    u, w = eigen_sym(matrix)
    if w.size and float(w[-1]) < -clip_tol:
        raise DataValidationError(
            f"matrix is not PSD (min eigenvalue {float(w[-1]):.3e}); repair it before sampling"
        )
    return (u * np.sqrt(np.maximum(w, 0.0))) @ u.T
