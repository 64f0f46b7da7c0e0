"""Spectral windows and the exact (direct-rotation) Schrieffer-Wolff transformation."""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np

from .direct_rotation import RotationPair, direct_rotation, rotation_generator
from .errors import (
    AmbiguousBoundary,
    DimMismatch,
    EmptyWindow,
    EpsilonTooLarge,
    GapTooSmall,
    RankMismatch,
    SWError,
)
from .operator_core import (
    EigenSystem,
    dag,
    off_diag,
    operator_norm,
    projector_onto,
    require_hermitian,
    spectral_decompose,
)

TOL_WINDOW = 1e-9
GAP_FLOOR = 1e-8


def _window_tol(values: np.ndarray) -> float:
    return TOL_WINDOW * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


@dataclass(frozen=True)
class SpectralSplit:
    """Eigen-decomposition of H0 together with a low-energy window I0.

    If no eigenvalue lies outside the window the gap is ``inf``; if all the
    outside eigenvalues lie on one side, the gap is the one-sided distance.
    """

    H0: np.ndarray
    eig: EigenSystem
    window: tuple[float, float]
    low_indices: tuple[int, ...]
    gap: float

    @property
    def dim(self) -> int:
        return self.H0.shape[0]

    @property
    def rank(self) -> int:
        return len(self.low_indices)

    @property
    def low_basis(self) -> np.ndarray:
        return self.eig.vectors[:, list(self.low_indices)]

    @property
    def P0(self) -> np.ndarray:
        return projector_onto(self.low_basis)

    @property
    def Q0(self) -> np.ndarray:
        return np.eye(self.dim) - self.P0

    @property
    def low_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(self.low_indices)] = True
        return mask

    @property
    def window_width(self) -> float:
        """Width of the tightest window holding the same eigenvalues."""
        low = self.eig.values[list(self.low_indices)]
        return float(low.max() - low.min())

    def compress(self, X: np.ndarray) -> np.ndarray:
        """Matrix of X restricted to the low subspace, in the H0 eigenbasis."""
        B = self.low_basis
        return dag(B) @ X @ B

    def h0_low_is_scalar(self, tol: float = 1e-12) -> bool:
        low = self.eig.values[list(self.low_indices)]
        return float(low.max() - low.min()) <= tol * max(1.0, float(np.abs(low).max()))


def make_split(H0, I0: tuple[float, float]) -> SpectralSplit:
    H0 = require_hermitian(H0, "H0")
    lo, hi = float(I0[0]), float(I0[1])
    if lo > hi:
        raise EmptyWindow(f"window [{lo}, {hi}] is empty")
    eig = spectral_decompose(H0)
    vals = eig.values
    tol = _window_tol(vals)
    if np.any(np.abs(vals - lo) <= tol) or np.any(np.abs(vals - hi) <= tol):
        raise AmbiguousBoundary(f"an eigenvalue of H0 sits on the boundary of [{lo}, {hi}]")
    inside = (vals > lo) & (vals < hi)
    if not inside.any():
        raise EmptyWindow(f"no eigenvalue of H0 in [{lo}, {hi}]")
    if inside.all():
        gap = float("inf")
    else:
        gap = float(np.min(np.abs(vals[inside][:, None] - vals[~inside][None, :])))
        if gap <= GAP_FLOOR * max(1.0, float(np.max(np.abs(vals)))):
            raise GapTooSmall(f"gap {gap:.3e} below floor")
    low = tuple(int(i) for i in np.flatnonzero(inside))
    return SpectralSplit(H0=H0, eig=eig, window=(lo, hi), low_indices=low, gap=gap)


@dataclass(frozen=True)
class PerturbedProblem:
    """H = H0 + epsilon V with the low-energy window of ``split``."""

    split: SpectralSplit
    V: np.ndarray
    epsilon: float
    epsilon_c: float = field(init=False)

    def __post_init__(self):
        V = require_hermitian(self.V, "V")
        if V.shape != self.split.H0.shape:
            raise DimMismatch(f"V {V.shape} vs H0 {self.split.H0.shape}")
        object.__setattr__(self, "V", V)
        nv = operator_norm(V)
        ec = float("inf") if nv == 0 else self.split.gap / (2.0 * nv)
        object.__setattr__(self, "epsilon_c", ec)

    @property
    def H(self) -> np.ndarray:
        return self.split.H0 + self.epsilon * self.V

    def with_epsilon(self, epsilon: float) -> "PerturbedProblem":
        return PerturbedProblem(self.split, self.V, epsilon)

    def require_weak(self) -> None:
        if not abs(self.epsilon) < self.epsilon_c:
            raise EpsilonTooLarge(f"|eps| = {abs(self.epsilon):.6g} >= eps_c = {self.epsilon_c:.6g}")


def _widened(split: SpectralSplit) -> tuple[float, float]:
    lo, hi = split.window
    return lo - split.gap / 2.0, hi + split.gap / 2.0


def perturbed_low_eigenvalues(prob: PerturbedProblem) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues/vectors of H0 + eps V lying in the widened window."""
    prob.require_weak()
    vals, vecs = np.linalg.eigh(prob.H)
    lo, hi = _widened(prob.split)
    tol = _window_tol(vals)
    if np.any(np.abs(vals - lo) <= tol) or np.any(np.abs(vals - hi) <= tol):
        raise AmbiguousBoundary("perturbed eigenvalue on the widened window boundary")
    inside = (vals > lo) & (vals < hi)
    if inside.sum() != prob.split.rank:
        raise RankMismatch(f"{inside.sum()} perturbed levels in window, expected {prob.split.rank}")
    return vals[inside], vecs[:, inside]


def perturbed_projector(prob: PerturbedProblem) -> np.ndarray:
    _, vecs = perturbed_low_eigenvalues(prob)
    return projector_onto(vecs)


@dataclass(frozen=True)
class ExactSW:
    U: np.ndarray
    S: np.ndarray
    P: np.ndarray
    heff_full: np.ndarray
    heff_low: np.ndarray
    offdiag_residual: float


def exact_sw_transform(prob: PerturbedProblem) -> ExactSW:
    split = prob.split
    P = perturbed_projector(prob)
    pair = RotationPair(P, split.P0)
    U = direct_rotation(pair)
    S = rotation_generator(pair)
    Ht = U @ prob.H @ dag(U)
    P0 = split.P0
    full = P0 @ Ht @ P0
    full = 0.5 * (full + dag(full))
    return ExactSW(
        U=U,
        S=S,
        P=P,
        heff_full=full,
        heff_low=split.compress(full),
        offdiag_residual=operator_norm(off_diag(Ht, P0)),
    )


def joint_problem(probA: PerturbedProblem, probB: PerturbedProblem) -> PerturbedProblem:
    """Non-interacting problem on the tensor product, with unit epsilon."""
    sa, sb = probA.split, probB.split
    IA, IB = np.eye(sa.dim), np.eye(sb.dim)
    H0 = np.kron(sa.H0, IB) + np.kron(IA, sb.H0)
    V = probA.epsilon * np.kron(probA.V, IB) + probB.epsilon * np.kron(IA, probB.V)
    # tight hull of the summed low levels; summing the two windows' endpoints
    # would leave too little room for the widened window of the joint problem
    la = sa.eig.values[list(sa.low_indices)]
    lb = sb.eig.values[list(sb.low_indices)]
    pad = 1e-3 * min(sa.gap, sb.gap, 1.0)
    window = (la.min() + lb.min() - pad, la.max() + lb.max() + pad)
    split = make_split(H0, window)
    if operator_norm(split.P0 - np.kron(sa.P0, sb.P0)) > 1e-9:
        raise SWError("joint window does not select the product of the low subspaces")
    return PerturbedProblem(split, V, 1.0)


def additivity_residual(probA: PerturbedProblem, probB: PerturbedProblem) -> float:
    """|H_eff^{AB} - P0 (H_eff^A x I + I x H_eff^B) P0| for non-interacting parts."""
    joint = joint_problem(probA, probB)
    ha = exact_sw_transform(probA).heff_full
    hb = exact_sw_transform(probB).heff_full
    hab = exact_sw_transform(joint).heff_full
    P0 = joint.split.P0
    local = np.kron(ha, np.eye(hb.shape[0])) + np.kron(np.eye(ha.shape[0]), hb)
    return operator_norm(hab - P0 @ local @ P0)


# -- high-precision reference -------------------------------------------------

def _to_mp(X: np.ndarray) -> mpmath.matrix:
    return mpmath.matrix([[mpmath.mpc(complex(z)) for z in row] for row in X])


def _mp_dag(X: mpmath.matrix) -> mpmath.matrix:
    return X.transpose_conj()


def exact_heff_reference(prob: PerturbedProblem, dps: int = 40) -> mpmath.matrix:
    """Low block of the exact effective Hamiltonian in extended precision.

    Uses U = (I + R) (2I + R + R^+)^(-1/2) with R = R_{P0} R_P, which equals
    the principal square root of the unitary R, and the double-precision H0
    eigenbasis of ``prob.split`` as the (exactly converted) low basis.
    """
    prob.require_weak()
    split = prob.split
    with mpmath.workdps(dps):
        d = split.dim
        B = _to_mp(split.low_basis)
        H = _to_mp(split.H0) + mpmath.mpf(prob.epsilon) * _to_mp(prob.V)
        E, Q = mpmath.eigh(H)
        lo, hi = _widened(split)
        cols = [k for k in range(d) if lo < E[k] < hi]
        if len(cols) != split.rank:
            raise RankMismatch("reference: perturbed window rank changed")
        eye = mpmath.eye(d)
        P = mpmath.zeros(d, d)
        for k in cols:
            q = Q[:, k]
            P += q * _mp_dag(q)
        P0 = B * _mp_dag(B)
        R = (2 * P0 - eye) * (2 * P - eye)
        M = 2 * eye + R + _mp_dag(R)
        w, W = mpmath.eigh(M)
        inv_sqrt = W * mpmath.diag([1 / mpmath.sqrt(x) for x in w]) * _mp_dag(W)
        U = (eye + R) * inv_sqrt
        return _mp_dag(B) * U * H * _mp_dag(U) * B


def reference_truncation_error(prob: PerturbedProblem, coeffs_low: list[np.ndarray], dps: int = 40) -> float:
    """|H_eff_exact(eps) - sum_q coeffs_low[q] eps^q| with the exact part in extended precision."""
    with mpmath.workdps(dps):
        exact = exact_heff_reference(prob, dps)
        eps = mpmath.mpf(prob.epsilon)
        diff = exact.copy()
        for q, C in enumerate(coeffs_low):
            diff -= _to_mp(C) * eps**q
        arr = np.array([[complex(diff[i, j]) for j in range(diff.cols)] for i in range(diff.rows)])
    return operator_norm(arr)
