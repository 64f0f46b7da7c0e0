"""Dense complex operator helpers.

Operators are plain ``numpy`` arrays of shape ``(d, d)``.  Structural claims
(hermitian, unitary, projector, ...) are checked on entry by the ``require_*``
helpers instead of being carried around as tags.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BranchCutViolation, DimMismatch, NotHermitian, NotNormal, NotProjector

TOL_STRUCT = 1e-10
TOL_EIG = 1e-9
TOL_BRANCH = 1e-6


def as_operator(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {X.shape}")
    return X


def dag(X: np.ndarray) -> np.ndarray:
    return X.conj().T


def comm(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def norm_bound(X: np.ndarray) -> float:
    """Cheap upper bound sqrt(|X|_1 |X|_inf) on the spectral norm."""
    if X.size == 0:
        return 0.0
    a = np.abs(X)
    return float(np.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))


def scale(X: np.ndarray) -> float:
    """Relative-tolerance scale max(1, |X|_F / dim)."""
    return max(1.0, float(np.linalg.norm(X)) / X.shape[0])


def tol_struct(X: np.ndarray) -> float:
    return TOL_STRUCT * max(1.0, norm_bound(X))


def operator_norm(X) -> float:
    """Largest singular value."""
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2))


def hermiticity_defect(X: np.ndarray) -> float:
    return float(np.max(np.abs(X - dag(X)))) if X.size else 0.0


def is_hermitian(X: np.ndarray, tol: float | None = None) -> bool:
    tol = tol_struct(X) * scale(X) if tol is None else tol
    return hermiticity_defect(X) <= tol


def require_hermitian(X, name: str = "X") -> np.ndarray:
    X = as_operator(X)
    if not is_hermitian(X):
        raise NotHermitian(f"{name} not hermitian (defect {hermiticity_defect(X):.3e})")
    return X


def is_unitary(X: np.ndarray, tol: float = TOL_STRUCT) -> bool:
    return operator_norm(X @ dag(X) - np.eye(X.shape[0])) <= tol


def require_projector(P, name: str = "P") -> np.ndarray:
    P = as_operator(P)
    tol = tol_struct(P)
    if hermiticity_defect(P) > tol or operator_norm(P @ P - P) > tol:
        raise NotProjector(f"{name} is not an orthogonal projector")
    return P


def projector_onto(vectors: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal columns."""
    return vectors @ dag(vectors)


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def source_dim(self) -> int:
        return self.vectors.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dag(self.vectors)


def spectral_decompose(X) -> EigenSystem:
    """Ascending eigen-decomposition of a hermitian matrix.

    Diagonal input is handled without calling LAPACK so that its eigenvalues
    and the (permuted identity) eigenbasis are bit-exact.
    """
    X = require_hermitian(X)
    d = X.shape[0]
    if np.count_nonzero(X - np.diag(np.diag(X))) == 0:
        vals = np.diag(X).real.copy()
        order = np.argsort(vals, kind="stable")
        return EigenSystem(vals[order], np.eye(d, dtype=complex)[:, order])
    vals, vecs = np.linalg.eigh(X)
    return EigenSystem(vals, vecs.astype(complex))


def _schur_spectrum(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = as_operator(X)
    if operator_norm(X @ dag(X) - dag(X) @ X) > tol_struct(X) * max(1.0, norm_bound(X)):
        raise NotNormal("matrix is not normal")
    # complex Schur form of a normal matrix is diagonal; Z is unitary even for
    # degenerate spectra
    T, Z = sla.schur(X, output="complex")
    return np.diag(T).copy(), Z


def _check_branch(lam: np.ndarray, allow_zero: bool) -> None:
    mag = np.abs(lam)
    for z, m in zip(lam, mag):
        if m < 1e-14:
            if allow_zero:
                continue
            raise BranchCutViolation("eigenvalue at the branch point 0")
        if abs(np.angle(z)) > np.pi - TOL_BRANCH:
            raise BranchCutViolation(f"eigenvalue {z:.6g} on the negative real axis")


def normal_matrix_function(X, f: str) -> np.ndarray:
    """Apply ``principal_sqrt`` or ``principal_log`` to a normal matrix.

    The branch cut runs along the negative real axis and f(1) = 1 (resp. 0).
    """
    if f not in ("principal_sqrt", "principal_log"):
        raise ValueError(f"unknown matrix function {f!r}")
    lam, Z = _schur_spectrum(X)
    _check_branch(lam, allow_zero=(f == "principal_sqrt"))
    fl = np.sqrt(lam) if f == "principal_sqrt" else np.log(lam)
    return (Z * fl) @ dag(Z)


def principal_sqrt(X) -> np.ndarray:
    return normal_matrix_function(X, "principal_sqrt")


def principal_log(X) -> np.ndarray:
    return normal_matrix_function(X, "principal_log")


def block_split(X, P0) -> tuple[np.ndarray, np.ndarray]:
    """Split X into block-diagonal and block-off-diagonal parts w.r.t. P0.

    The off-diagonal part is P0 X Q0 + Q0 X P0; the diagonal part is the
    remainder so that the two add up to X exactly.
    """
    X = as_operator(X)
    P0 = as_operator(P0)
    if X.shape != P0.shape:
        raise DimMismatch(f"operator {X.shape} vs projector {P0.shape}")
    Q0 = np.eye(X.shape[0]) - P0
    off = P0 @ X @ Q0 + Q0 @ X @ P0
    return X - off, off


def off_diag(X: np.ndarray, P0: np.ndarray) -> np.ndarray:
    return block_split(X, P0)[1]


def diag_part(X: np.ndarray, P0: np.ndarray) -> np.ndarray:
    return block_split(X, P0)[0]
