import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swolff.errors import NotBlockDiagonal, OrderTooLarge, SupportMismatch
from swolff.exact_sw import make_split
from swolff.lattice import Edge, LocalDecomposition, SpinLattice, chain, random_hermitian, uniform_site
from swolff.local_sw import (
    LocalSWSeries,
    build_local_sw,
    garbage_norm,
    locality_report,
    random_block_diagonal_edge,
    stability_check,
    superop_L_A,
)
from swolff.operator_core import block_split, operator_norm
from swolff.perturbative_sw import superop_L

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
seeds = st.integers(0, 2**31 - 1)


def random_chain(rng, n_sites, dim=2, low=1):
    sites = [uniform_site(dim, low, 1.0) for _ in range(n_sites)]
    return chain(sites, [random_hermitian(rng, dim * dim) for _ in range(n_sites - 1)])


def test_single_site_matches_global_L():
    lat = SpinLattice([uniform_site(2, 1, 2.0)], [])
    L = superop_L_A(lat, (0,), SX)
    assert np.allclose(L, [[0, -0.5], [0.5, 0]])
    assert np.allclose(L, superop_L(make_split(np.diag([0.0, 2.0]), (-0.5, 0.5)), SX))


def test_commuting_input_gives_zero():
    lat = SpinLattice([uniform_site(2, 1, 1.0)] * 2, [])
    X = np.diag([1.0, 2.0, 3.0, 4.0])
    assert operator_norm(superop_L_A(lat, (0, 1), X)) == 0.0
    with pytest.raises(SupportMismatch):
        superop_L_A(lat, (0, 1), np.eye(2))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_identity_and_bound_on_pair(seed):
    rng = np.random.default_rng(seed)
    lat = SpinLattice([uniform_site(3, 1, 1.0), uniform_site(2, 1, 1.5)], [])
    X = random_hermitian(rng, 6)
    H = lat.local_h0((0, 1))
    P = lat.local_projector((0, 1))
    _, O = block_split(X, P)
    L = superop_L_A(lat, (0, 1), X)
    assert operator_norm(H @ L - L @ H - O) <= 1e-10
    assert operator_norm(L) <= operator_norm(X) / lat.gap + 1e-12


def test_block_diagonal_couplings_give_no_rotation():
    rng = np.random.default_rng(0)
    base = SpinLattice([uniform_site(3, 1, 1.0)] * 3, [])
    edges = [Edge(0, 1, random_block_diagonal_edge(base, 0, 1, rng)),
             Edge(1, 2, random_block_diagonal_edge(base, 1, 2, rng))]
    lat = SpinLattice(base.sites, edges)
    state = build_local_sw(lat, 0.1, 3)
    assert all(operator_norm(T) <= 1e-12 for T in state.T)
    assert operator_norm(state.Hn - lat.H0() - 0.1 * lat.V()) <= 1e-12
    assert garbage_norm(state) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_homological_equation_and_locality(n):
    rng = np.random.default_rng(n)
    lat = random_chain(rng, 4)
    ser = LocalSWSeries(lat, n)
    for j in range(1, n + 1):
        assert ser.homological_residual(j) <= 1e-9
    rep = locality_report(ser)
    assert all(k <= j + 1 for j, k in enumerate(rep["T"], start=1))
    assert all(k <= j + 1 for j, k in enumerate(rep["V"], start=1))


def test_effective_hamiltonian_block_diagonal():
    rng = np.random.default_rng(5)
    lat = random_chain(rng, 3, dim=3)
    state = build_local_sw(lat, 0.05, 3)
    P0 = lat.P0()
    _, O = block_split(state.Hn, P0)
    assert operator_norm(O) <= 1e-9
    assert operator_norm(state.Heff_loc - P0 @ state.Hn @ P0) == 0.0


def test_garbage_vanishes_at_zero_and_scales():
    rng = np.random.default_rng(6)
    lat = random_chain(rng, 3)
    assert garbage_norm(build_local_sw(lat, 0.0, 2)) == 0.0
    eps = [0.02, 0.01, 0.005]
    g = [garbage_norm(build_local_sw(lat, e, 2)) for e in eps]
    assert np.polyfit(np.log(eps), np.log(g), 1)[0] >= 2.5


def test_order_limit():
    lat = random_chain(np.random.default_rng(7), 2)
    with pytest.raises(OrderTooLarge):
        LocalSWSeries(lat, 7)


def test_stability_examples():
    lat = SpinLattice([uniform_site(2, 1, 1.0)] * 2, [])
    r = stability_check(lat, LocalDecomposition(lat.dims, {}))
    assert r["stable"] and r["lhs"] == 0.0
    X = np.diag([1.0, -1.0, 0.5, 0.2]) / 32
    r = stability_check(lat, LocalDecomposition(lat.dims, {(0, 1): X}))
    assert r["lhs"] == pytest.approx(0.5) and r["stable"]
    with pytest.raises(NotBlockDiagonal):
        stability_check(lat, LocalDecomposition(lat.dims, {(0, 1): np.kron(SX, SX)}))


def test_stable_ground_state_lies_in_low_block():
    rng = np.random.default_rng(8)
    base = SpinLattice([uniform_site(3, 1, 1.0)] * 4, [])
    edges = [Edge(u, v, random_block_diagonal_edge(base, u, v, rng)) for u, v in [(0, 1), (1, 2), (2, 3)]]
    lat = SpinLattice(base.sites, edges)
    dec = lat.edge_decomposition()
    r = stability_check(lat, dec)
    c = 0.9 * lat.gap / r["lhs"]
    lat = SpinLattice(base.sites, [Edge(e.u, e.v, c * e.V) for e in edges])
    assert stability_check(lat, lat.edge_decomposition())["stable"]
    H = lat.H0() + lat.V()
    B = lat.low_isometry()
    low = np.linalg.eigvalsh(B.conj().T @ H @ B)[0]
    assert abs(low - np.linalg.eigvalsh(H)[0]) <= 1e-10
