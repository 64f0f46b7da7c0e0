"""Edge-labelled effective Hamiltonians and the rotation between local and global theories.

Each lattice edge carries its own formal variable.  Coefficients of the
resulting multivariate series are indexed by exponent tuples; the set of
edges with a positive exponent is the cluster C of that coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import OrderTooLarge, TooManyMonomials
from .exact_sw import make_split
from .lattice import SpinLattice, embed, is_connected_edge_set, support_decompose
from .local_sw import LocalSWSeries, build_local_sw
from .operator_core import block_split, dag, operator_norm, scale
from .perturbative_sw import (
    SeriesCoefficients,
    SWRecursion,
    generator_series,
    heff_series,
    make_L,
)
from .series import Monomial, Poly, poly_exp, poly_log, series_exp, series_log, series_mul

MAX_EDGES = 6
MAX_MULTI_ORDER = 4
MAX_MONOMIALS = 10**4
TOL_BLOCK = 1e-9


@dataclass
class EdgeMonomialSeries:
    """sum_m prod_e x_e^{m_e} K_m with full-space coefficients K_m."""

    lattice: SpinLattice
    n: int
    terms: dict[Monomial, np.ndarray]

    @property
    def nvars(self) -> int:
        return len(self.lattice.edges)

    def cluster(self, m: Monomial) -> tuple[int, ...]:
        return tuple(e for e, k in enumerate(m) if k > 0)

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def specialize(self) -> list[np.ndarray]:
        """Univariate coefficients obtained by setting every edge variable to epsilon."""
        D = self.lattice.total_dim
        out = [np.zeros((D, D), dtype=complex) for _ in range(self.n + 1)]
        for m, X in self.sorted_items():
            out[sum(m)] += X
        return out

    def mixed_norms(self) -> dict[Monomial, float]:
        """Norms of coefficients involving more than one edge."""
        return {m: operator_norm(X) for m, X in self.sorted_items() if len(self.cluster(m)) > 1}


def _check_size(lattice: SpinLattice, n: int) -> None:
    if len(lattice.edges) > MAX_EDGES:
        raise TooManyMonomials(f"{len(lattice.edges)} edges, limit {MAX_EDGES}")
    if n > MAX_MULTI_ORDER:
        raise OrderTooLarge(f"multivariate series limited to order {MAX_MULTI_ORDER}")


def lattice_split(lattice: SpinLattice):
    return make_split(lattice.H0(), lattice.ground_window())


def _global_recursion(lattice: SpinLattice, n: int):
    split = lattice_split(lattice)
    P0 = split.P0
    ops = [lattice.edge_operator(e) for e in range(len(lattice.edges))]
    parts = [block_split(X, P0) for X in ops]
    Vd = Poly.variable_sum([d for d, _ in parts], max_degree=n)
    Vod = Poly.variable_sum([o for _, o in parts], max_degree=n)
    rec = SWRecursion(Vd, Vod, make_L(split), P0, max_order=max(n, 2))
    return split, ops, rec


def _count(terms) -> None:
    if len(terms) > MAX_MONOMIALS:
        raise TooManyMonomials(f"{len(terms)} monomials, limit {MAX_MONOMIALS}")


def multivariate_heff(lattice: SpinLattice, n: int, method: str = "global_recursion") -> EdgeMonomialSeries:
    """Effective Hamiltonian as a series in one variable per edge, total degree <= n."""
    _check_size(lattice, n)
    E = len(lattice.edges)
    zero = (0,) * E
    P0 = lattice.P0()
    terms: dict[Monomial, np.ndarray] = {zero: lattice.H0() @ P0}
    if method == "global_recursion":
        _, ops, rec = _global_recursion(lattice, n)
        for e, X in enumerate(ops):
            terms[tuple(1 if i == e else 0 for i in range(E))] = P0 @ X @ P0
        for q in range(2, n + 1):
            for m, X in rec.heff(q).sorted_items():
                terms[m] = X
            _count(terms)
    elif method == "local_sw":
        ser = LocalSWSeries(lattice, n, edge_vars=list(range(E)), nvars=E)
        for j in range(1, n + 1):
            D = ser.D[j]
            for m in D.monomials():
                terms[m] = P0 @ D.to_dense(monomial=m) @ P0
            _count(terms)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EdgeMonomialSeries(lattice, n, terms)


def linked_cluster_report(series: EdgeMonomialSeries, tol: float = 1e-9, zero_tol: float = 1e-10) -> dict:
    """Support and connectivity of every coefficient, on the tensor-product low space.

    Coefficients are compressed to the product of the site ground spaces,
    decomposed by exact support, and the part acting outside the sites of the
    coefficient's cluster is measured.
    """
    lat = series.lattice
    B = lat.low_isometry()
    low_dims = lat.low_dims()
    rows = []
    violations = []
    for m, X in series.sorted_items():
        q = sum(m)
        if q == 0:
            continue
        C = series.cluster(m)
        sites = set(lat.edge_sites(C))
        K = dag(B) @ X @ B
        nrm = operator_norm(K)
        outside = np.zeros_like(K)
        if nrm > 0:
            dec = support_decompose(low_dims, K, tol=1e-12 * scale(K))
            for A, XA in dec.terms.items():
                if not set(A) <= sites:
                    outside += embed(low_dims, A, XA)
        resid = operator_norm(outside)
        connected = is_connected_edge_set(lat, C)
        nonzero = nrm > zero_tol * max(1.0, scale(K))
        row = {
            "monomial": list(m),
            "degree": q,
            "cluster": list(C),
            "norm": nrm,
            "connected": connected,
            "support_residual": resid,
            "nonzero": bool(nonzero),
        }
        bad = []
        if nonzero and not connected:
            bad.append("disconnected")
        if nonzero and len(C) > q:
            bad.append("oversized")
        if resid > tol * max(1.0, scale(K)):
            bad.append("support")
        row["violations"] = bad
        rows.append(row)
        if bad:
            violations.append({"monomial": list(m), "kinds": bad})
    return {
        "rows": rows,
        "violations": violations,
        "max_support_residual": max((r["support_residual"] for r in rows), default=0.0),
        "ok": not violations,
    }


# -- local/global equivalence ------------------------------------------------------

@dataclass
class EquivalenceGenerator:
    """K with e^K = e^S e^{-T} order by order; ``low`` is P0 K_j P0."""

    K: SeriesCoefficients
    low: list[np.ndarray]
    offdiag: list[float]

    @property
    def max_offdiag(self) -> float:
        return max(self.offdiag, default=0.0)


def equivalence_generator(S_series, T_series, P0: np.ndarray, n: int) -> EquivalenceGenerator:
    """Formal log of exp(S) exp(-T), truncated at order n."""
    S = [np.asarray(X, dtype=complex) for X in _coeff_list(S_series)][: n + 1]
    T = [np.asarray(X, dtype=complex) for X in _coeff_list(T_series)][: n + 1]
    d = P0.shape[0]
    pad = lambda L: L + [np.zeros((d, d), dtype=complex)] * (n + 1 - len(L))
    S, T = pad(S), pad(T)
    prod_ = series_mul(series_exp(S, n), series_exp([-X for X in T], n), n)
    K = series_log(prod_, n)
    Q0 = np.eye(d) - P0
    offdiag = [operator_norm(Q0 @ Kj @ P0) for Kj in K[1:]]
    return EquivalenceGenerator(SeriesCoefficients(K, "block_diagonal"), [P0 @ Kj @ P0 for Kj in K], offdiag)


def _coeff_list(s):
    return s.coeffs if isinstance(s, SeriesCoefficients) else list(s)


def local_generator_series(lattice: SpinLattice, n: int) -> list[np.ndarray]:
    ser = LocalSWSeries(lattice, n)
    D = lattice.total_dim
    return [np.zeros((D, D), dtype=complex)] + [ser.T[j].to_dense() for j in range(1, n + 1)]


def lattice_equivalence_generator(lattice: SpinLattice, n: int) -> EquivalenceGenerator:
    split = lattice_split(lattice)
    S = generator_series(split, n, lattice.V())
    T = local_generator_series(lattice, n)
    return equivalence_generator(S, T, split.P0, n)


def equivalence_details(lattice: SpinLattice, epsilon: float, n: int) -> dict:
    split = lattice_split(lattice)
    V = lattice.V()
    M = heff_series(split, n, V).evaluate(epsilon)
    state = build_local_sw(lattice, epsilon, n)
    L = state.Heff_loc
    S = generator_series(split, n, V)
    T = [np.zeros_like(M)] + state.T
    gen = equivalence_generator(S, T, split.P0, n)
    Kt = np.zeros_like(M)
    for j in range(n, 0, -1):
        Kt = (Kt + gen.K.coeffs[j]) * epsilon
    B = lattice.low_isometry()
    k, l, m = dag(B) @ Kt @ B, dag(B) @ L @ B, dag(B) @ M @ B
    rot = expm(k)
    resid = operator_norm(m - rot @ l @ dag(rot))
    return {"residual": resid, "max_offdiag": gen.max_offdiag, "K_norms": gen.K.norms()[1:]}


def equivalence_residual(lattice: SpinLattice, epsilon: float, n: int) -> float:
    """|M - e^K L e^{-K}| on the low subspace for the order-n local and global theories."""
    if epsilon == 0:
        return 0.0
    return equivalence_details(lattice, epsilon, n)["residual"]


def multivariate_K(lattice: SpinLattice, n: int) -> EdgeMonomialSeries:
    """P0 K P0 as an edge-labelled series, for linked-cluster checks on K."""
    _check_size(lattice, n)
    E = len(lattice.edges)
    split, _, rec = _global_recursion(lattice, n)
    S = Poly({}, E, n)
    for q in range(1, n + 1):
        S = S + rec.generator(q)
    ser = LocalSWSeries(lattice, n, edge_vars=list(range(E)), nvars=E)
    T = Poly({}, E, n)
    for j in range(1, n + 1):
        for m in ser.T[j].monomials():
            T = T + Poly({m: ser.T[j].to_dense(monomial=m)}, E, n)
    D = lattice.total_dim
    K = poly_log(poly_exp(S, n, D).matmul(poly_exp(-T, n, D)), n, D)
    P0 = lattice.P0()
    terms = {m: P0 @ X @ P0 for m, X in K.sorted_items()}
    _count(terms)
    return EdgeMonomialSeries(lattice, n, terms)


def fit_exponent(eps: list[float], values: list[float]) -> float:
    """Least-squares slope of log(value) against log(eps)."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
