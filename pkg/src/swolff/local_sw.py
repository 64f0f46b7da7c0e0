"""Local Schrieffer-Wolff transformation on spin lattices.

Operators are kept as sums of local terms keyed by (support, monomial): the
support is a sorted tuple of sites and the monomial is an exponent tuple over
formal variables.  With one variable shared by all edges this is the ordinary
epsilon expansion; with one variable per edge it is the multivariate series
used for linked-cluster checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, prod

import numpy as np
from scipy.linalg import expm

from .errors import DimensionCap, NotBlockDiagonal, OrderTooLarge, SupportMismatch
from .lattice import (
    LocalDecomposition,
    SpinLattice,
    Subset,
    embed,
    embed_into,
    interaction_strength,
    support_decompose,
)
from .operator_core import dag, operator_norm, scale
from .series import Monomial

MAX_LOCAL_ORDER = 6
MAX_DENSE_DIM = 2**12
TOL_ROT = 1e-9

Key = tuple[Subset, Monomial]


def _madd(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


class LocalOp:
    """sum over (A, m) of x^m X_{A,m}, each X_{A,m} a matrix on the sites A."""

    __slots__ = ("dims", "nvars", "terms")

    def __init__(self, dims, nvars: int, terms: dict[Key, np.ndarray] | None = None):
        self.dims = tuple(dims)
        self.nvars = nvars
        self.terms = dict(terms or {})

    def _like(self, terms) -> "LocalOp":
        return LocalOp(self.dims, self.nvars, terms)

    def add_term(self, A: Subset, m: Monomial, X: np.ndarray) -> None:
        key = (A, m)
        self.terms[key] = self.terms[key] + X if key in self.terms else X

    def __add__(self, other: "LocalOp") -> "LocalOp":
        out = self._like(self.terms)
        for (A, m), X in other.terms.items():
            out.add_term(A, m, X)
        return out

    def __mul__(self, c) -> "LocalOp":
        return self._like({k: c * X for k, X in self.terms.items()})

    __rmul__ = __mul__

    def comm(self, other: "LocalOp") -> "LocalOp":
        """[self, other], computed on union supports and re-decomposed exactly."""
        grouped: dict[Key, np.ndarray] = {}
        for (A, m1), X in sorted(self.terms.items()):
            sa = set(A)
            for (B, m2), Y in sorted(other.terms.items()):
                if not sa.intersection(B):
                    continue
                U = tuple(sorted(sa.union(B)))
                Xu = embed_into(self.dims, A, X, U)
                Yu = embed_into(self.dims, B, Y, U)
                key = (U, _madd(m1, m2))
                Z = Xu @ Yu - Yu @ Xu
                grouped[key] = grouped[key] + Z if key in grouped else Z
        out = self._like({})
        for (U, m), Z in sorted(grouped.items()):
            for A, XA in _redecompose(self.dims, U, Z).items():
                out.add_term(A, m, XA)
        return out

    def decomposed(self) -> "LocalOp":
        """Same operator with every term split into exact supports."""
        out = self._like({})
        for (U, m), Z in sorted(self.terms.items()):
            for A, XA in _redecompose(self.dims, U, Z).items():
                out.add_term(A, m, XA)
        return out

    def monomials(self) -> list[Monomial]:
        return sorted({m for _, m in self.terms}, key=lambda m: (sum(m), m))

    def to_dense(self, monomial: Monomial | None = None, values=None) -> np.ndarray:
        """Dense operator for one monomial, or evaluated at variable values."""
        D = prod(self.dims)
        out = np.zeros((D, D), dtype=complex)
        for (A, m), X in sorted(self.terms.items()):
            if monomial is not None and m != monomial:
                continue
            c = 1.0
            if values is not None:
                for v, k in zip(values, m):
                    c *= v**k
            out += c * embed(self.dims, A, X)
        return out

    def decomposition(self) -> LocalDecomposition:
        """Collapse monomials: one local term per support."""
        terms: dict[Subset, np.ndarray] = {}
        for (A, _), X in sorted(self.terms.items()):
            terms[A] = terms[A] + X if A in terms else X
        return LocalDecomposition(self.dims, terms, exact=False)

    def max_support(self, tol: float = 0.0) -> int:
        return max((len(A) for (A, _), X in self.terms.items() if operator_norm(X) > tol), default=0)

    def norm_1(self) -> float:
        """Interaction strength max_u sum_{A containing u} |X_A| (monomials summed per A)."""
        return interaction_strength(self.decomposition())


def _redecompose(dims, U: Subset, Z: np.ndarray) -> dict[Subset, np.ndarray]:
    sub = [dims[u] for u in U]
    dec = support_decompose(sub, Z, tol=1e-12 * scale(Z))
    return {tuple(U[i] for i in B): XB for B, XB in dec.terms.items()}


# -- local superoperators ----------------------------------------------------------

@dataclass
class LocalProjectors:
    """Cached P_A and pseudo-inverse of H_{0,A} on each subset's local space."""

    lattice: SpinLattice
    _cache: dict = field(default_factory=dict)

    def get(self, A: Subset) -> tuple[np.ndarray, np.ndarray]:
        if A not in self._cache:
            lat = self.lattice
            P = lat.local_projector(A)
            H = lat.local_h0(A)
            w, W = np.linalg.eigh(H)
            floor = lat.gap / 2.0 if np.isfinite(lat.gap) else 0.5
            inv = np.where(w > floor, 1.0 / np.where(w > floor, w, 1.0), 0.0)
            Hplus = (W * inv) @ dag(W)
            self._cache[A] = (P, Hplus)
        return self._cache[A]


def superop_L_A(lattice: SpinLattice, A: Subset, X: np.ndarray,
                projectors: LocalProjectors | None = None) -> np.ndarray:
    """H_{0,A}^+ Q_A X P_A - P_A X Q_A H_{0,A}^+ on the local space of A.

    This is the closed form of the time integral defining the local L, valid
    because H_{0,A} vanishes on P_A and is at least the gap on Q_A.
    """
    A = tuple(sorted(A))
    d = prod(lattice.dims[u] for u in A)
    X = np.asarray(X, dtype=complex)
    if X.shape != (d, d):
        raise SupportMismatch(f"operator of shape {X.shape} does not act on sites {A}")
    projectors = projectors or LocalProjectors(lattice)
    P, Hp = projectors.get(A)
    Q = np.eye(d) - P
    return Hp @ Q @ X @ P - P @ X @ Q @ Hp


def superop_D_A(lattice: SpinLattice, A: Subset, X: np.ndarray,
                projectors: LocalProjectors | None = None) -> np.ndarray:
    projectors = projectors or LocalProjectors(lattice)
    P, _ = projectors.get(tuple(sorted(A)))
    Q = np.eye(P.shape[0]) - P
    return P @ X @ P + Q @ X @ Q


# -- the recursion ---------------------------------------------------------------

class LocalSWSeries:
    """T_j, V^{(j)} and the block-diagonal parts sum_A D_A(V^{(j-1)}_A).

    ``edge_vars[e]`` is the formal variable attached to edge e.
    """

    def __init__(self, lattice: SpinLattice, n: int, edge_vars: list[int] | None = None,
                 nvars: int = 1):
        if n > MAX_LOCAL_ORDER:
            raise OrderTooLarge(f"local SW limited to order {MAX_LOCAL_ORDER}")
        if n < 1:
            raise ValueError("order must be at least 1")
        self.lattice = lattice
        self.n = n
        self.nvars = nvars
        self.edge_vars = [0] * len(lattice.edges) if edge_vars is None else list(edge_vars)
        self.proj = LocalProjectors(lattice)
        dims = lattice.dims
        zero = (0,) * nvars
        self.H0 = LocalOp(dims, nvars, {((u,), zero): s.h0 for u, s in enumerate(lattice.sites)})
        V = LocalOp(dims, nvars)
        for e, edge in enumerate(lattice.edges):
            m = tuple(1 if i == self.edge_vars[e] else 0 for i in range(nvars))
            V.add_term((edge.u, edge.v), m, edge.V)
        # V^(0) keeps the grouping of the model: a block-diagonal edge coupling
        # then yields no rotation, which exact-support splitting would spoil
        self.V = V
        self.T: dict[int, LocalOp] = {}
        self.Vseq: dict[int, LocalOp] = {0: self.V}
        self.D: dict[int, LocalOp] = {}
        self._W: dict = {}
        for j in range(1, n + 1):
            self.T[j] = self._make_T(self.Vseq[j - 1])
            self.D[j] = self._make_D(self.Vseq[j - 1])
            self.Vseq[j] = self._make_V(j + 1)

    def _W_of(self, which: str, q: int, j: int) -> LocalOp:
        """sum over j_1+...+j_q = j (each 1..n) of T^_{j_1} ... T^_{j_q}(X)."""
        key = (which, q, j)
        if key in self._W:
            return self._W[key]
        base = self.H0 if which == "H0" else self.V
        if q == 0:
            val = base if j == 0 else LocalOp(base.dims, self.nvars)
        else:
            val = LocalOp(base.dims, self.nvars)
            for j1 in range(1, min(self.n, j - (q - 1)) + 1):
                val = val + self.T[j1].comm(self._W_of(which, q - 1, j - j1))
        self._W[key] = val
        return val

    def _make_V(self, j: int) -> LocalOp:
        """V^{(j-1)} for j >= 2."""
        out = LocalOp(self.lattice.dims, self.nvars)
        for q in range(2, j + 1):
            out = out + self._W_of("H0", q, j) * (1.0 / factorial(q))
        for q in range(1, j):
            out = out + self._W_of("V", q, j - 1) * (1.0 / factorial(q))
        return out

    def _make_T(self, Vprev: LocalOp) -> LocalOp:
        out = LocalOp(self.lattice.dims, self.nvars)
        for (A, m), X in sorted(Vprev.terms.items()):
            if A:
                out.add_term(A, m, superop_L_A(self.lattice, A, X, self.proj))
        return out

    def _make_D(self, Vprev: LocalOp) -> LocalOp:
        out = LocalOp(self.lattice.dims, self.nvars)
        for (A, m), X in sorted(Vprev.terms.items()):
            out.add_term(A, m, superop_D_A(self.lattice, A, X, self.proj))
        return out

    def homological_residual(self, j: int) -> float:
        """|[T_j, H_0] + V^{(j-1)} - sum_A D_A(V^{(j-1)}_A)| (dense)."""
        T = self.T[j].to_dense()
        H0 = self.H0.to_dense()
        lhs = T @ H0 - H0 @ T + self.Vseq[j - 1].to_dense()
        return operator_norm(lhs - self.D[j].to_dense())


@dataclass
class LocalSWState:
    lattice: SpinLattice
    epsilon: float
    n: int
    series: LocalSWSeries
    T: list[np.ndarray]
    Vseq: list[LocalDecomposition]
    Hn: np.ndarray
    Heff_loc: np.ndarray

    def T_total(self) -> np.ndarray:
        out = np.zeros_like(self.Hn)
        for j, Tj in enumerate(self.T, start=1):
            out += self.epsilon**j * Tj
        return out


def build_local_sw(lattice: SpinLattice, epsilon: float, n: int) -> LocalSWState:
    if lattice.total_dim > MAX_DENSE_DIM:
        raise DimensionCap(f"dimension {lattice.total_dim} above {MAX_DENSE_DIM}")
    ser = LocalSWSeries(lattice, n)
    T = [ser.T[j].to_dense() for j in range(1, n + 1)]
    Hn = lattice.H0().astype(complex)
    for j in range(1, n + 1):
        Hn = Hn + epsilon**j * ser.D[j].to_dense()
    P0 = lattice.P0()
    return LocalSWState(
        lattice=lattice,
        epsilon=float(epsilon),
        n=n,
        series=ser,
        T=T,
        Vseq=[ser.Vseq[j].decomposition() for j in range(n + 1)],
        Hn=Hn,
        Heff_loc=P0 @ Hn @ P0,
    )


def garbage_norm(state: LocalSWState) -> float:
    """|e^T (H0 + eps V) e^{-T} - H^{<n>}| by dense exponentiation."""
    lat = state.lattice
    if lat.total_dim > MAX_DENSE_DIM:
        raise DimensionCap(f"dimension {lat.total_dim} above {MAX_DENSE_DIM}")
    if state.epsilon == 0:
        return 0.0
    H = lat.H0() + state.epsilon * lat.V()
    T = state.T_total()
    E = expm(T)
    Einv = expm(-T)
    return operator_norm(E @ H @ Einv - state.Hn)


def locality_report(state_or_series, tol: float | None = None) -> dict[str, list[int]]:
    """Largest exact support of T_j and V^{(j-1)}, measured by decomposing the dense operators."""
    ser = state_or_series.series if isinstance(state_or_series, LocalSWState) else state_or_series
    dims = ser.lattice.dims
    out = {"T": [], "V": []}
    for j in range(1, ser.n + 1):
        for name, op in (("T", ser.T[j]), ("V", ser.Vseq[j - 1])):
            X = op.to_dense()
            t = 1e-12 * scale(X) if tol is None else tol
            out[name].append(support_decompose(dims, X, tol=t).locality(t))
    return out


# -- block-diagonal stability --------------------------------------------------------

def stability_check(lattice: SpinLattice, dec: LocalDecomposition, delta: float | None = None,
                    tol: float = TOL_ROT) -> dict:
    """Sufficient condition for P0 to hold a ground state of H0 + V.

    Every term must commute with P_A.  Terms are grouped by support size k and
    the grouped bound sum_k 2^{k+2} J_k is compared against the single-class
    bound 2^{kmax+2} J; the smaller one is reported as ``lhs``.
    """
    delta = lattice.gap if delta is None else float(delta)
    classes: dict[int, dict[Subset, np.ndarray]] = {}
    for A, X in sorted(dec.terms.items()):
        P = lattice.local_projector(A)
        c = P @ X - X @ P
        if operator_norm(c) > tol * max(1.0, operator_norm(X)):
            raise NotBlockDiagonal(f"term on {A} does not preserve the low subspace")
        if operator_norm(X) > 0:
            classes.setdefault(len(A), {})[A] = X
    grouped = 0.0
    for k, terms in classes.items():
        grouped += 2 ** (k + 2) * interaction_strength(LocalDecomposition(dec.dims, terms))
    kmax = max(classes, default=0)
    single = 2 ** (kmax + 2) * interaction_strength(dec) if classes else 0.0
    lhs = min(grouped, single)
    return {"stable": bool(lhs < delta), "lhs": float(lhs), "grouped_lhs": float(grouped),
            "single_class_lhs": float(single), "delta": float(delta)}


def random_block_diagonal_edge(lattice: SpinLattice, u: int, v: int, rng: np.random.Generator) -> np.ndarray:
    """Random hermitian coupling on (u, v) that preserves P_u P_v, unit norm."""
    du, dv = lattice.dims[u], lattice.dims[v]
    d = du * dv
    P = lattice.local_projector((u, v))
    Q = np.eye(d) - P
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    X = P @ (A + dag(A)) @ P + Q @ (B + dag(B)) @ Q
    return X / operator_norm(X)
