"""Reflections, the direct rotation between two subspaces and its generator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, SubspacesTooFar
from .operator_core import (
    TOL_BRANCH,
    operator_norm,
    principal_log,
    principal_sqrt,
    require_projector,
)

TOL_ROT = 1e-9


def reflection(P) -> np.ndarray:
    """R_P = 2P - I: flips the sign of the range of P."""
    P = require_projector(P)
    return 2.0 * P - np.eye(P.shape[0])


@dataclass(frozen=True)
class RotationPair:
    """A pair of projectors close enough for the direct rotation P -> P0."""

    P: np.ndarray
    P0: np.ndarray
    distance: float = field(init=False)

    def __post_init__(self):
        P = require_projector(self.P, "P")
        P0 = require_projector(self.P0, "P0")
        if P.shape != P0.shape:
            raise DimMismatch(f"projectors of shape {P.shape} and {P0.shape}")
        if abs(np.trace(P).real - np.trace(P0).real) >= 0.5:
            raise SubspacesTooFar("projectors have different ranks")
        dist = operator_norm(P - P0)
        if dist >= 1.0 - TOL_BRANCH:
            raise SubspacesTooFar(f"|P - P0| = {dist:.6g} is not below 1")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "distance", dist)


def direct_rotation(pair: RotationPair) -> np.ndarray:
    """U = sqrt(R_{P0} R_P), which satisfies U P U^+ = P0."""
    return principal_sqrt(reflection(pair.P0) @ reflection(pair.P))


def rotation_generator(pair: RotationPair) -> np.ndarray:
    """Anti-hermitian S = log U, block-off-diagonal w.r.t. both P and P0."""
    S = principal_log(direct_rotation(pair))
    # the exact generator is anti-hermitian; drop the rounding-level hermitian part
    return 0.5 * (S - S.conj().T)


def generator_block_residuals(S: np.ndarray, pair: RotationPair) -> dict[str, float]:
    """Norms of the four diagonal blocks of S that must vanish."""
    eye = np.eye(S.shape[0])
    out = {}
    for name, X in (("P0", pair.P0), ("Q0", eye - pair.P0), ("P", pair.P), ("Q", eye - pair.P)):
        out[name] = operator_norm(X @ S @ X)
    return out


def weak_multiplicativity_residual(PA, PA0, PB, PB0) -> float:
    """|U^{AB} (P^A x P^B) - (U^A x U^B)(P^A x P^B)| for direct rotations U."""
    pa = RotationPair(PA, PA0)
    pb = RotationPair(PB, PB0)
    pab = RotationPair(np.kron(pa.P, pb.P), np.kron(pa.P0, pb.P0))
    UA, UB, UAB = direct_rotation(pa), direct_rotation(pb), direct_rotation(pab)
    return operator_norm((UAB - np.kron(UA, UB)) @ pab.P)


def tensor_rotation_gap(PA, PA0, PB, PB0) -> float:
    """|U^{AB} - U^A x U^B|; nonzero in general, unlike the weak residual."""
    pa = RotationPair(PA, PA0)
    pb = RotationPair(PB, PB0)
    pab = RotationPair(np.kron(pa.P, pb.P), np.kron(pa.P0, pb.P0))
    return operator_norm(direct_rotation(pab) - np.kron(direct_rotation(pa), direct_rotation(pb)))
