"""Spin lattices: tensor embeddings, support decomposition, strengths, clusters.

Tensor ordering is site-major everywhere: site 0 is the slowest index, so a
product operator is ``kron(X_0, X_1, ..., X_{N-1})``.  Subsets of sites are
sorted tuples.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import prod
from typing import Iterable

import numpy as np

from .errors import DimensionCap, DimMismatch, TooManyClusters, ValidationError
from .operator_core import is_hermitian, operator_norm, scale, spectral_decompose

MAX_TOTAL_DIM = 2**12
MAX_CLUSTERS = 10**5
TOL_SUPPORT = 1e-12

Subset = tuple[int, ...]


# -- tensor plumbing on a list of local dimensions --------------------------------

def embed(dims, A: Iterable[int], X) -> np.ndarray:
    """X (acting on the sites A, in increasing order) tensored with identity elsewhere."""
    dims = list(dims)
    A = tuple(sorted(A))
    X = np.asarray(X, dtype=complex)
    N = len(dims)
    dA = prod(dims[a] for a in A)
    if X.shape != (dA, dA):
        raise DimMismatch(f"operator of shape {X.shape} does not act on sites {A}")
    rest = [s for s in range(N) if s not in A]
    dR = prod(dims[r] for r in rest)
    if not A:
        return X[0, 0] * np.eye(dR, dtype=complex)
    if not rest:
        return X.copy()
    order = list(A) + rest
    shape = [dims[s] for s in order]
    T = np.kron(X, np.eye(dR)).reshape(shape + shape)
    perm = [order.index(s) for s in range(N)]
    D = dA * dR
    return T.transpose(perm + [N + p for p in perm]).reshape(D, D)


def embed_into(dims, A: Subset, X, target: Subset) -> np.ndarray:
    """Embed X acting on A into the local space of the larger subset ``target``."""
    target = tuple(sorted(target))
    pos = [target.index(a) for a in sorted(A)]
    return embed([dims[t] for t in target], pos, X)


def partial_trace(dims, X, keep: Iterable[int]) -> np.ndarray:
    """Trace out every site not in ``keep``; result acts on ``keep`` in order."""
    dims = list(dims)
    keep = tuple(sorted(keep))
    N = len(dims)
    T = np.asarray(X).reshape(dims + dims)
    cur = list(range(N))
    for s in reversed(range(N)):
        if s in keep:
            continue
        i = cur.index(s)
        T = np.trace(T, axis1=i, axis2=i + len(cur))
        cur.pop(i)
    dk = prod(dims[k] for k in keep)
    return T.reshape(dk, dk)


def conditional_expectation(dims, X, B: Iterable[int]) -> np.ndarray:
    """Normalized partial trace onto B, re-embedded on the full space."""
    dims = list(dims)
    B = tuple(sorted(B))
    comp = prod(d for s, d in enumerate(dims) if s not in B)
    return embed(dims, B, partial_trace(dims, X, B) / comp)


def _drop_site(Y: np.ndarray, sub_dims: list[int], p: int) -> np.ndarray:
    """(tr_p Y / d_p) x I_p on the same local space."""
    k = len(sub_dims)
    T = Y.reshape(sub_dims + sub_dims)
    d = sub_dims[p]
    tr = np.trace(T, axis1=p, axis2=p + k) / d
    tr = np.expand_dims(np.expand_dims(tr, p), p + k)
    eye = np.eye(d).reshape([d if i in (p, p + k) else 1 for i in range(2 * k)])
    D = Y.shape[0]
    return (tr * eye).reshape(D, D)


def exact_support_part(sub_dims: list[int], Y: np.ndarray) -> np.ndarray:
    """Component of Y (on a subset's local space) acting nontrivially on every site."""
    out = Y
    for p in range(len(sub_dims)):
        out = out - _drop_site(out, sub_dims, p)
    return out


def _all_subsets(sites: Subset) -> list[Subset]:
    return [c for r in range(len(sites) + 1) for c in combinations(sites, r)]


@dataclass
class LocalDecomposition:
    """Operator written as sum_A X_A, each X_A a matrix on the local space of A.

    ``exact`` marks decompositions produced by inclusion-exclusion, where every
    term acts nontrivially on each site of its subset.
    """

    dims: tuple[int, ...]
    terms: dict[Subset, np.ndarray] = field(default_factory=dict)
    exact: bool = False

    @property
    def k_locality(self) -> int:
        return max((len(A) for A, X in self.terms.items() if operator_norm(X) > 0), default=0)

    def locality(self, tol: float) -> int:
        return max((len(A) for A, X in self.terms.items() if operator_norm(X) > tol), default=0)

    def norms(self) -> dict[Subset, float]:
        return {A: operator_norm(X) for A, X in self.terms.items()}

    def to_dense(self) -> np.ndarray:
        D = prod(self.dims)
        out = np.zeros((D, D), dtype=complex)
        for A, X in sorted(self.terms.items()):
            out += embed(self.dims, A, X)
        return out


def support_decompose(dims, X, tol: float | None = None, sites: Subset | None = None) -> LocalDecomposition:
    """X_A = sum_{B subset A} (-1)^{|A|-|B|} E_B(X), keeping terms above tol.

    ``sites`` restricts the candidate subsets to those inside the given sites
    (X must then act trivially outside them).
    """
    dims = tuple(dims)
    X = np.asarray(X, dtype=complex)
    D = prod(dims)
    if X.shape != (D, D):
        raise DimMismatch(f"operator {X.shape} vs lattice dimension {D}")
    tol = TOL_SUPPORT * scale(X) if tol is None else tol
    N = len(dims)
    sites = tuple(range(N)) if sites is None else tuple(sorted(sites))
    # reduced operators tr_{B^c} X / d_{B^c}, obtained top-down one site at a time
    reduced: dict[Subset, np.ndarray] = {}
    top = partial_trace(dims, X, sites) / prod(d for s, d in enumerate(dims) if s not in sites)
    reduced[sites] = top
    for B in sorted(_all_subsets(sites), key=len, reverse=True):
        if B in reduced:
            continue
        u = next(s for s in sites if s not in B)
        parent = tuple(sorted(B + (u,)))
        Y = reduced[parent]
        sub = [dims[s] for s in parent]
        p = parent.index(u)
        T = Y.reshape(sub + sub)
        tr = np.trace(T, axis1=p, axis2=p + len(sub)) / dims[u]
        dB = prod(dims[s] for s in B)
        reduced[B] = tr.reshape(dB, dB)
    terms = {}
    for A in _all_subsets(sites):
        XA = exact_support_part([dims[s] for s in A], reduced[A])
        if operator_norm(XA) > tol:
            terms[A] = XA
    return LocalDecomposition(dims, terms, exact=True)


def interaction_strength(dec: LocalDecomposition) -> float:
    """J = max_u sum_{A containing u} |V_A|."""
    per_site = np.zeros(len(dec.dims))
    for A, X in dec.terms.items():
        nrm = operator_norm(X)
        for u in A:
            per_site[u] += nrm
    return float(per_site.max()) if per_site.size else 0.0


def touching_norm_sum(dec: LocalDecomposition, M: Iterable[int]) -> float:
    """sum over terms meeting M of |V_A|; at most |M| * J."""
    M = set(M)
    return sum(operator_norm(X) for A, X in dec.terms.items() if M & set(A))


# -- lattices ---------------------------------------------------------------------

@dataclass(frozen=True)
class Site:
    h0: np.ndarray
    low_dim: int

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    V: np.ndarray


def _swap_factors(X: np.ndarray, du: int, dv: int) -> np.ndarray:
    T = X.reshape(du, dv, du, dv).transpose(1, 0, 3, 2)
    return T.reshape(du * dv, du * dv)


class SpinLattice:
    """Sites with local H_{0,u} >= 0 and two-site interactions on edges.

    Each H_{0,u} has ground energy 0 with multiplicity ``low_dim``; the lattice
    gap is the smallest local gap.
    """

    def __init__(self, sites: list[Site], edges: list[Edge], tol: float = 1e-10):
        self.sites = [Site(np.asarray(s.h0, dtype=complex), int(s.low_dim)) for s in sites]
        self.dims = tuple(s.dim for s in self.sites)
        self.N = len(self.sites)
        self.total_dim = prod(self.dims)
        if self.total_dim > MAX_TOTAL_DIM:
            raise DimensionCap(f"total dimension {self.total_dim} above {MAX_TOTAL_DIM}")
        self._low_bases = []
        gaps = []
        for i, s in enumerate(self.sites):
            if not is_hermitian(s.h0):
                raise ValidationError(f"h0 of site {i} not hermitian")
            if not 1 <= s.low_dim <= s.dim:
                raise ValidationError(f"site {i}: low_dim {s.low_dim} out of range")
            eig = spectral_decompose(s.h0)
            vals = eig.values
            t = tol * max(1.0, float(np.abs(vals).max()))
            if np.any(np.abs(vals[: s.low_dim]) > t):
                raise ValidationError(f"site {i}: ground level of h0 is not 0 with multiplicity {s.low_dim}")
            if s.low_dim < s.dim:
                g = float(vals[s.low_dim])
                if g <= t:
                    raise ValidationError(f"site {i}: no gap above the {s.low_dim} ground states")
                gaps.append(g)
            self._low_bases.append(eig.vectors[:, : s.low_dim])
        self.gap = min(gaps) if gaps else float("inf")
        norm_edges = []
        seen = set()
        for e in edges:
            u, v, V = int(e.u), int(e.v), np.asarray(e.V, dtype=complex)
            if u == v or not (0 <= u < self.N and 0 <= v < self.N):
                raise ValidationError(f"bad edge ({u}, {v})")
            du, dv = self.dims[u], self.dims[v]
            if V.shape != (du * dv, du * dv):
                raise ValidationError(f"edge ({u}, {v}): V has shape {V.shape}")
            if not is_hermitian(V):
                raise ValidationError(f"edge ({u}, {v}): V not hermitian")
            if u > v:
                u, v, V = v, u, _swap_factors(V, du, dv)
            if (u, v) in seen:
                raise ValidationError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            norm_edges.append(Edge(u, v, V))
        self.edges = norm_edges

    # structure
    @property
    def max_degree(self) -> int:
        deg = [0] * self.N
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return max(deg, default=0)

    def h0_norm_over_gap(self) -> float:
        return max(operator_norm(s.h0) for s in self.sites) / self.gap

    def edge_sites(self, C: Iterable[int]) -> Subset:
        """Lambda(C): sites touched by the edges with indices in C."""
        out = set()
        for i in C:
            out.update((self.edges[i].u, self.edges[i].v))
        return tuple(sorted(out))

    # local projectors
    def site_low_projector(self, u: int) -> np.ndarray:
        B = self._low_bases[u]
        return B @ B.conj().T

    def site_low_basis(self, u: int) -> np.ndarray:
        return self._low_bases[u]

    def local_projector(self, A: Iterable[int]) -> np.ndarray:
        """P_A on the local space of A."""
        out = np.ones((1, 1), dtype=complex)
        for u in sorted(A):
            out = np.kron(out, self.site_low_projector(u))
        return out

    def local_h0(self, A: Iterable[int]) -> np.ndarray:
        """H_{0,A} = sum_{u in A} H_{0,u} on the local space of A."""
        A = tuple(sorted(A))
        sub = [self.dims[u] for u in A]
        D = prod(sub)
        out = np.zeros((D, D), dtype=complex)
        for p, u in enumerate(A):
            out += embed(sub, (p,), self.sites[u].h0)
        return out

    def low_dims(self) -> tuple[int, ...]:
        return tuple(s.low_dim for s in self.sites)

    def low_isometry(self) -> np.ndarray:
        """Columns spanning P0 = tensor product of site ground spaces."""
        out = np.ones((1, 1), dtype=complex)
        for u in range(self.N):
            out = np.kron(out, self._low_bases[u])
        return out

    # full-space operators
    def H0(self) -> np.ndarray:
        return self.local_h0(range(self.N))

    def edge_operator(self, i: int) -> np.ndarray:
        e = self.edges[i]
        return embed(self.dims, (e.u, e.v), e.V)

    def V(self, weights: Iterable[float] | None = None) -> np.ndarray:
        w = [1.0] * len(self.edges) if weights is None else list(weights)
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for i, c in enumerate(w):
            if c:
                out += c * self.edge_operator(i)
        return out

    def P0(self) -> np.ndarray:
        return self.P_A(range(self.N))

    def P_A(self, A: Iterable[int]) -> np.ndarray:
        A = tuple(sorted(A))
        return embed(self.dims, A, self.local_projector(A))

    def edge_decomposition(self, weights: Iterable[float] | None = None) -> LocalDecomposition:
        """V grouped by edge, as written in the model (not inclusion-exclusion)."""
        w = [1.0] * len(self.edges) if weights is None else list(weights)
        terms: dict[Subset, np.ndarray] = {}
        for c, e in zip(w, self.edges):
            key = (e.u, e.v)
            terms[key] = terms.get(key, 0) + c * e.V
        return LocalDecomposition(self.dims, terms, exact=False)

    def ground_window(self) -> tuple[float, float]:
        """Narrow window around 0 selecting P0 in the spectrum of H0.

        Kept tight so that widening it by half the gap still excludes every
        perturbed excited level while |eps| < eps_c.
        """
        g = self.gap if np.isfinite(self.gap) else 1.0
        return (-1e-6 * g, 1e-6 * g)

    def restricted(self, keep_edges: Iterable[int]) -> "SpinLattice":
        keep = set(keep_edges)
        return SpinLattice(self.sites, [e for i, e in enumerate(self.edges) if i in keep])


@dataclass(frozen=True)
class Cluster:
    edges: tuple[int, ...]
    sites: Subset


def _connected(edge_ids, lattice: SpinLattice) -> bool:
    edge_ids = list(edge_ids)
    if not edge_ids:
        return False
    seen = {edge_ids[0]}
    frontier = [edge_ids[0]]
    while frontier:
        i = frontier.pop()
        a = {lattice.edges[i].u, lattice.edges[i].v}
        for j in edge_ids:
            if j not in seen and a & {lattice.edges[j].u, lattice.edges[j].v}:
                seen.add(j)
                frontier.append(j)
    return len(seen) == len(edge_ids)


def is_connected_edge_set(lattice: SpinLattice, edge_ids: Iterable[int]) -> bool:
    return _connected(edge_ids, lattice)


def connected_clusters(lattice: SpinLattice, max_edges: int, cap: int = MAX_CLUSTERS) -> list[Cluster]:
    """All connected edge subsets with 1..max_edges edges, grown edge by edge."""
    adj: dict[int, set[int]] = {i: set() for i in range(len(lattice.edges))}
    for i, j in combinations(range(len(lattice.edges)), 2):
        ei, ej = lattice.edges[i], lattice.edges[j]
        if {ei.u, ei.v} & {ej.u, ej.v}:
            adj[i].add(j)
            adj[j].add(i)
    found: set[frozenset] = set()
    layer = {frozenset([i]) for i in adj}
    while layer:
        found |= layer
        if len(found) > cap:
            raise TooManyClusters(f"more than {cap} clusters")
        nxt = set()
        for C in layer:
            if len(C) >= max_edges:
                continue
            for i in C:
                for j in adj[i] - C:
                    nxt.add(C | {j})
        layer = nxt - found
    out = [tuple(sorted(C)) for C in found if len(C) <= max_edges]
    out.sort(key=lambda c: (len(c), c))
    return [Cluster(c, lattice.edge_sites(c)) for c in out]


# -- builders ---------------------------------------------------------------------

def uniform_site(dim: int, low_dim: int, gap: float = 1.0) -> Site:
    """Diagonal h0 with ``low_dim`` zero levels and the rest at gap, gap+1, ..."""
    levels = [0.0] * low_dim + [gap + k for k in range(dim - low_dim)]
    return Site(np.diag(levels).astype(complex), low_dim)


def chain(sites: list[Site], couplings: list[np.ndarray]) -> SpinLattice:
    """Open chain 0-1-...-(N-1) with couplings[i] on edge (i, i+1)."""
    if len(couplings) != len(sites) - 1:
        raise ValidationError("a chain of N sites needs N-1 couplings")
    return SpinLattice(sites, [Edge(i, i + 1, V) for i, V in enumerate(couplings)])


def random_hermitian(rng: np.random.Generator, d: int, norm: float | None = 1.0) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (A + A.conj().T) / 2.0
    if norm is not None:
        H *= norm / operator_norm(H)
    return H
