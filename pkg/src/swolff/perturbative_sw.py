"""Perturbative Schrieffer-Wolff series for the generator S and for H_eff.

The coefficient recursion is written once, against the small set of
operations in :mod:`swolff.series`, so it runs both on plain matrices (one
formal variable epsilon) and on multivariate :class:`~swolff.series.Poly`
coefficients (one variable per lattice edge).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InternalGapError, OrderTooLarge
from .exact_sw import PerturbedProblem, SpectralSplit
from .operator_core import block_split, dag, operator_norm, require_hermitian
from .series import apply, commutator, zero_like

MAX_TABLE_ORDER = 40
MAX_SERIES_ORDER = 10


# -- exact Bernoulli-derived coefficients --------------------------------------

def bernoulli_numbers(m: int) -> list[Fraction]:
    """B_0..B_m from sum_{k<=j} C(j+1, k) B_k = 0 (convention B_1 = -1/2)."""
    B = [Fraction(1)]
    for j in range(1, m + 1):
        s = sum(math.comb(j + 1, k) * B[k] for k in range(j))
        B.append(-s / (j + 1))
    return B


@dataclass(frozen=True)
class RationalCoefficientTable:
    """Taylor coefficients a_{2k} of x coth x and b_{2k-1} of tanh(x/2)."""

    a: dict[int, Fraction]
    b: dict[int, Fraction]
    max_order: int

    def a_float(self, k: int) -> float:
        return float(self.a[k])

    def b_float(self, k: int) -> float:
        return float(self.b[k])


def bernoulli_coefficients(max_order: int) -> RationalCoefficientTable:
    if max_order > MAX_TABLE_ORDER:
        raise OrderTooLarge(f"coefficient table limited to order {MAX_TABLE_ORDER}")
    B = bernoulli_numbers(max_order + 1)
    a, b = {}, {}
    for m in range(0, max_order + 1, 2):
        a[m] = Fraction(2**m) * B[m] / math.factorial(m)
    for m in range(1, max_order + 1, 2):
        k = (m + 1) // 2
        b[m] = Fraction(2 * (2 ** (2 * k) - 1)) * B[2 * k] / math.factorial(2 * k)
    return RationalCoefficientTable(a=a, b=b, max_order=max_order)


# -- superoperator L -----------------------------------------------------------

def superop_L(split: SpectralSplit, X: np.ndarray) -> np.ndarray:
    """<i|O(X)|j> / (E_i - E_j) over pairs with exactly one index in the window."""
    W = split.eig.vectors
    E = split.eig.values
    low = split.low_mask
    mixed = low[:, None] ^ low[None, :]
    denom = E[:, None] - E[None, :]
    if mixed.any() and np.min(np.abs(denom[mixed])) < split.gap / 2.0:
        raise InternalGapError("energy denominator below half the gap")
    Xe = dag(W) @ X @ W
    Le = np.zeros_like(Xe)
    Le[mixed] = Xe[mixed] / denom[mixed]
    return W @ Le @ dag(W)


def make_L(split: SpectralSplit) -> Callable[[np.ndarray], np.ndarray]:
    """Precomputed version of :func:`superop_L` for repeated application."""
    W = split.eig.vectors
    Wd = dag(W)
    E = split.eig.values
    low = split.low_mask
    mixed = low[:, None] ^ low[None, :]
    denom = E[:, None] - E[None, :]
    if mixed.any() and np.min(np.abs(denom[mixed])) < split.gap / 2.0:
        raise InternalGapError("energy denominator below half the gap")
    inv = np.zeros(denom.shape)
    inv[mixed] = 1.0 / denom[mixed]

    def L(X: np.ndarray) -> np.ndarray:
        return W @ ((Wd @ X @ W) * inv) @ Wd

    return L


# -- the recursion -------------------------------------------------------------

class SWRecursion:
    """Order-by-order generator S_n and effective Hamiltonian H_eff,n.

    ``nested(k, m)`` is the sum over compositions n_1 + ... + n_k = m of
    ad(S_{n_1}) ... ad(S_{n_k}) (V_od), memoised.
    """

    def __init__(self, Vd, Vod, L: Callable, P0: np.ndarray, max_order: int = MAX_SERIES_ORDER):
        if max_order > MAX_SERIES_ORDER:
            raise OrderTooLarge(f"series limited to order {MAX_SERIES_ORDER}")
        self.Vd, self.Vod = Vd, Vod
        self.L = lambda x: apply(L, x)
        self.P0 = P0
        self.table = bernoulli_coefficients(max(max_order, 2))
        self.max_order = max_order
        self._zero = zero_like(Vod)
        self.S = {1: self.L(Vod)}
        self._nested = {(0, 0): Vod}

    def proj(self, x):
        P0 = self.P0
        return apply(lambda X: P0 @ X @ P0, x)

    def nested(self, k: int, m: int):
        key = (k, m)
        if key in self._nested:
            return self._nested[key]
        if k == 0 or m < k:
            val = self._zero
        else:
            val = self._zero
            for n1 in range(1, m - k + 2):
                val = val + commutator(self.generator(n1), self.nested(k - 1, m - n1))
        self._nested[key] = val
        return val

    def generator(self, n: int):
        if n in self.S:
            return self.S[n]
        if n > self.max_order:
            raise OrderTooLarge(f"order {n} beyond max_order {self.max_order}")
        val = -self.L(commutator(self.Vd, self.generator(n - 1)))
        for j in range(1, (n - 1) // 2 + 1):
            val = val + self.table.a_float(2 * j) * self.L(self.nested(2 * j, n - 1))
        self.S[n] = val
        return val

    def heff(self, n: int):
        """H_eff,n for n >= 2 (full-space operator supported on the low block)."""
        if n < 2:
            raise ValueError("heff(n) is defined for n >= 2")
        val = self._zero
        for j in range(1, n // 2 + 1):
            if 2 * j - 1 > n - 1:
                break
            val = val + self.table.b_float(2 * j - 1) * self.nested(2 * j - 1, n - 1)
        return self.proj(val)


def recursion_for(split: SpectralSplit, V: np.ndarray, max_order: int = MAX_SERIES_ORDER) -> SWRecursion:
    V = require_hermitian(V, "V")
    Vd, Vod = block_split(V, split.P0)
    return SWRecursion(Vd, Vod, make_L(split), split.P0, max_order)


@dataclass(frozen=True)
class SeriesCoefficients:
    """sum_q coeffs[q] eps^q; block_tag is 'off_diagonal', 'low_block' or 'none'."""

    coeffs: list[np.ndarray]
    block_tag: str = "none"

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, eps: float, order: int | None = None) -> np.ndarray:
        n = self.order if order is None else order
        out = np.zeros_like(self.coeffs[0])
        for q in range(n, -1, -1):
            out = out * eps + self.coeffs[q]
        return out

    def norms(self) -> list[float]:
        return [operator_norm(C) for C in self.coeffs]


def _split_and_V(prob_or_split, V=None) -> tuple[SpectralSplit, np.ndarray]:
    if isinstance(prob_or_split, PerturbedProblem):
        return prob_or_split.split, prob_or_split.V
    return prob_or_split, V


def generator_series(prob, n: int, V=None) -> SeriesCoefficients:
    """[0, S_1, ..., S_n]; accepts a PerturbedProblem or (split, V)."""
    split, V = _split_and_V(prob, V)
    rec = recursion_for(split, V, max(n, 2))
    coeffs = [np.zeros((split.dim, split.dim), dtype=complex)]
    coeffs += [rec.generator(q) for q in range(1, n + 1)]
    return SeriesCoefficients(coeffs, "off_diagonal")


def heff_series(prob, n: int, V=None) -> SeriesCoefficients:
    """[H0 P0, P0 V P0, H_eff,2, ..., H_eff,n] as full-space operators."""
    split, V = _split_and_V(prob, V)
    rec = recursion_for(split, V, max(n, 2))
    P0 = split.P0
    coeffs = [split.H0 @ P0, P0 @ V @ P0]
    coeffs += [rec.heff(q) for q in range(2, n + 1)]
    return SeriesCoefficients(coeffs[: n + 1], "low_block")


def low_block(series: SeriesCoefficients, split: SpectralSplit) -> list[np.ndarray]:
    return [split.compress(C) for C in series.coeffs]


# -- closed-form low orders ------------------------------------------------------

def _ad(X, Y):
    return X @ Y - Y @ X


def heff3_explicit(split: SpectralSplit, V: np.ndarray) -> np.ndarray:
    """b_1 P0 [V_od, L [V_d, S_1]] P0."""
    Vd, Vod = block_split(V, split.P0)
    L = make_L(split)
    S1 = L(Vod)
    P0 = split.P0
    return 0.5 * P0 @ _ad(Vod, L(_ad(Vd, S1))) @ P0


def heff4_explicit(split: SpectralSplit, V: np.ndarray) -> np.ndarray:
    """Fourth order written through S_1 only; valid for any H0."""
    Vd, Vod = block_split(V, split.P0)
    L = make_L(split)
    S1 = L(Vod)
    P0 = split.P0
    t = bernoulli_coefficients(4)
    b1, b3, a2 = t.b_float(1), t.b_float(3), t.a_float(2)
    LVd2 = L(_ad(Vd, L(_ad(Vd, S1))))
    S1sq = _ad(S1, _ad(S1, Vod))
    S1cube = _ad(S1, S1sq)
    inner = -b1 * _ad(Vod, LVd2) - b1 * a2 * _ad(Vod, L(S1sq)) + b3 * S1cube
    return P0 @ inner @ P0


def heff4_simple(split: SpectralSplit, V: np.ndarray) -> np.ndarray:
    """(1/8) ad(S_1)^3 V_od - (1/2) [V_od, (L ad V_d)^2 S_1], projected.

    Only valid when H0 restricted to the low subspace is a multiple of identity.
    """
    if not split.h0_low_is_scalar():
        raise ValueError("simplified fourth order needs a degenerate low-energy window")
    Vd, Vod = block_split(V, split.P0)
    L = make_L(split)
    S1 = L(Vod)
    P0 = split.P0
    LVd2 = L(_ad(Vd, L(_ad(Vd, S1))))
    S1cube = _ad(S1, _ad(S1, _ad(S1, Vod)))
    return P0 @ (S1cube / 8.0 - 0.5 * _ad(Vod, LVd2)) @ P0


# -- convergence radius ----------------------------------------------------------

def convergence_radius(split: SpectralSplit, V: np.ndarray, window_width: float | None = None) -> float:
    """rho_c = eps_c / (8 (1 + 2|I0| / (pi Delta))), eps_c = Delta / (2|V|).

    ``window_width`` defaults to the spread of the in-window eigenvalues.
    """
    width = split.window_width if window_width is None else float(window_width)
    nv = operator_norm(V)
    if nv == 0:
        return float("inf")
    eps_c = split.gap / (2.0 * nv)
    return eps_c / (8.0 * (1.0 + 2.0 * width / (np.pi * split.gap)))
