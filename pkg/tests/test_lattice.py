from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swolff.errors import DimensionCap, DimMismatch, TooManyClusters, ValidationError
from swolff.lattice import (
    Edge,
    SpinLattice,
    chain,
    conditional_expectation,
    connected_clusters,
    embed,
    interaction_strength,
    is_connected_edge_set,
    partial_trace,
    random_hermitian,
    support_decompose,
    touching_norm_sum,
    uniform_site,
)
from swolff.operator_core import operator_norm

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
seeds = st.integers(0, 2**31 - 1)


def qubits(n):
    return [uniform_site(2, 1, 1.0) for _ in range(n)]


def test_embed_examples():
    assert np.allclose(embed([2, 2], (), np.array([[3.0]])), 3 * np.eye(4))
    assert np.allclose(embed([2, 2], (1,), SZ), np.diag([1, -1, 1, -1]))
    assert np.allclose(embed([2, 2], (0,), SZ), np.diag([1, 1, -1, -1]))
    with pytest.raises(DimMismatch):
        embed([2, 2], (0,), np.eye(3))


def test_embed_partial_trace_round_trip():
    rng = np.random.default_rng(0)
    dims = [2, 3, 2]
    X = random_hermitian(rng, 4)
    Y = embed(dims, (0, 2), X)
    assert np.allclose(partial_trace(dims, Y, (0, 2)), 3 * X)


def test_support_decompose_examples():
    dec = support_decompose([2, 2], np.eye(4))
    assert list(dec.terms) == [()]
    X = embed([2, 2], (0,), SZ) + embed([2, 2], (1,), SX)
    dec = support_decompose([2, 2], X)
    assert sorted(dec.terms) == [(0,), (1,)]
    assert np.allclose(dec.terms[(0,)], SZ) and np.allclose(dec.terms[(1,)], SX)
    with pytest.raises(DimMismatch):
        support_decompose([2, 2], np.eye(3))


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_two_local_reconstruction(seed):
    rng = np.random.default_rng(seed)
    dims = [2, 2, 2, 2]
    X = sum(embed(dims, A, random_hermitian(rng, 4)) for A in combinations(range(4), 2))
    dec = support_decompose(dims, X)
    assert operator_norm(dec.to_dense() - X) <= 1e-10
    assert dec.k_locality <= 2


def test_decompose_of_embedded_exact_term():
    rng = np.random.default_rng(1)
    dims = [2, 3, 2]
    dec0 = support_decompose([3, 2], random_hermitian(rng, 6))
    X = dec0.terms[(0, 1)]
    dec = support_decompose(dims, embed(dims, (1, 2), X))
    assert list(dec.terms) == [(1, 2)] and np.allclose(dec.terms[(1, 2)], X)


def test_conditional_expectations_compose():
    rng = np.random.default_rng(2)
    dims = [2, 2, 3]
    X = random_hermitian(rng, 12)
    for A in [(0, 1), (1, 2), (0,)]:
        for B in [(1,), (0, 2), (2,)]:
            lhs = conditional_expectation(dims, conditional_expectation(dims, X, B), A)
            rhs = conditional_expectation(dims, X, tuple(sorted(set(A) & set(B))))
            assert operator_norm(lhs - rhs) <= 1e-12


def test_interaction_strength_examples():
    one = SpinLattice(qubits(2), [Edge(0, 1, np.kron(SX, SX))])
    assert interaction_strength(one.edge_decomposition()) == pytest.approx(1.0)
    three = chain(qubits(3), [np.kron(SX, SX), np.kron(SZ, SZ)])
    dec = three.edge_decomposition()
    assert interaction_strength(dec) == pytest.approx(2.0)
    assert touching_norm_sum(dec, [0]) <= 1 * interaction_strength(dec) + 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_norm_bounded_by_sites_times_strength(seed):
    rng = np.random.default_rng(seed)
    lat = chain(qubits(4), [random_hermitian(rng, 4) for _ in range(3)])
    dec = lat.edge_decomposition()
    J = interaction_strength(dec)
    assert operator_norm(lat.V()) <= lat.N * J + 1e-12
    for M in [(0,), (1, 2), (0, 1, 2, 3)]:
        assert touching_norm_sum(dec, M) <= len(M) * J + 1e-12


def test_projectors():
    lat = chain([uniform_site(3, 2, 1.0), uniform_site(2, 1, 2.0)], [np.eye(6)])
    assert np.allclose(lat.P_A(()), np.eye(6))
    assert np.allclose(lat.P0(), lat.P_A((0, 1)))
    assert np.allclose(lat.P0(), lat.P_A((0,)) @ lat.P_A((1,)))
    assert lat.gap == 1.0 and np.trace(lat.P0()).real == pytest.approx(2)


def test_reversed_edge_is_reordered():
    rng = np.random.default_rng(3)
    sites = [uniform_site(2, 1), uniform_site(3, 1)]
    X = random_hermitian(rng, 6)
    fwd = SpinLattice(sites, [Edge(0, 1, X)])
    # same operator written with site 1 as the first tensor factor
    Xr = X.reshape(2, 3, 2, 3).transpose(1, 0, 3, 2).reshape(6, 6)
    rev = SpinLattice(sites, [Edge(1, 0, Xr)])
    assert np.allclose(fwd.V(), rev.V())


def test_cluster_examples():
    one = SpinLattice(qubits(2), [Edge(0, 1, np.eye(4))])
    assert [c.edges for c in connected_clusters(one, 2)] == [(0,)]
    path = chain(qubits(4), [np.eye(4)] * 3)
    cl = connected_clusters(path, 2)
    assert [c.edges for c in cl] == [(0,), (1,), (2,), (0, 1), (1, 2)]
    assert cl[3].sites == (0, 1, 2)
    disjoint = SpinLattice(qubits(4), [Edge(0, 1, np.eye(4)), Edge(2, 3, np.eye(4))])
    assert all(len(c.edges) == 1 for c in connected_clusters(disjoint, 2))
    assert not is_connected_edge_set(disjoint, (0, 1))
    with pytest.raises(TooManyClusters):
        connected_clusters(path, 3, cap=4)


def test_clusters_match_brute_force():
    edges = [(0, 1), (1, 2), (2, 3), (1, 3), (0, 4)]
    lat = SpinLattice(qubits(5), [Edge(u, v, np.eye(4)) for u, v in edges])
    brute = [c for k in range(1, 4) for c in combinations(range(5), k) if is_connected_edge_set(lat, c)]
    got = [c.edges for c in connected_clusters(lat, 3)]
    assert sorted(got) == sorted(brute)


def test_validation_errors():
    with pytest.raises(DimensionCap):
        SpinLattice(qubits(13), [])
    with pytest.raises(ValidationError):
        SpinLattice([uniform_site(2, 1)] * 2, [Edge(0, 1, np.triu(np.ones((4, 4))))])
    with pytest.raises(ValidationError):
        SpinLattice([uniform_site(2, 1)] * 2, [Edge(0, 0, np.eye(4))])
    with pytest.raises(ValidationError):
        SpinLattice([uniform_site(2, 1)] * 2, [Edge(0, 1, np.eye(3))])
    with pytest.raises(ValidationError):
        SpinLattice([type(uniform_site(2, 1))(np.diag([1.0, 2.0]), 1)], [])
    with pytest.raises(ValidationError):
        chain(qubits(3), [np.eye(4)])
