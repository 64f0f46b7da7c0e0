import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swolff.errors import AmbiguousBoundary, EmptyWindow, EpsilonTooLarge
from swolff.exact_sw import (
    PerturbedProblem,
    additivity_residual,
    exact_heff_reference,
    exact_sw_transform,
    make_split,
    perturbed_projector,
)
from swolff.operator_core import operator_norm

from conftest import random_hermitian, random_split

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
seeds = st.integers(0, 2**31 - 1)


def two_level(eps):
    return PerturbedProblem(make_split(np.diag([0.0, 2.0]), (-0.5, 0.5)), SX, eps)


def test_make_split_examples():
    s = make_split(np.diag([0.0, 2.0]), (-0.5, 0.5))
    assert s.gap == 2.0 and np.allclose(s.P0, np.diag([1.0, 0.0]))
    s = make_split(np.diag([0.0, 0.0, 3.0]), (-0.1, 0.1))
    assert s.gap == 3.0 and s.rank == 2


def test_make_split_random_gap():
    rng = np.random.default_rng(2)
    H0 = random_hermitian(rng, 8, norm=4.0)
    E = np.linalg.eigvalsh(H0)
    s = make_split(H0, (E[0] - 0.01, (E[1] + E[2]) / 2))
    assert s.rank == 2
    assert s.gap == pytest.approx(E[2] - E[1], abs=1e-9)


def test_make_split_errors():
    with pytest.raises(EmptyWindow):
        make_split(np.diag([0.0, 2.0]), (0.5, 1.5))
    with pytest.raises(AmbiguousBoundary):
        make_split(np.diag([0.0, 2.0]), (-0.5, 2.0))


def test_perturbed_projector_two_level():
    assert np.allclose(perturbed_projector(two_level(0.0)), np.diag([1.0, 0.0]))
    P = perturbed_projector(two_level(0.3))
    assert np.trace(P).real == pytest.approx(1.0)
    assert operator_norm(P - np.diag([1.0, 0.0])) <= 0.3


def test_epsilon_too_large():
    with pytest.raises(EpsilonTooLarge):
        perturbed_projector(two_level(1.0))


def test_block_diagonal_v_gives_trivial_rotation():
    prob = PerturbedProblem(make_split(np.diag([0.0, 2.0]), (-0.5, 0.5)), np.diag([0.3, -0.7]), 0.5)
    res = exact_sw_transform(prob)
    assert operator_norm(res.S) <= 1e-12
    assert np.allclose(res.heff_full, prob.split.P0 @ prob.H @ prob.split.P0)


def test_two_level_closed_form():
    res = exact_sw_transform(two_level(0.2))
    assert res.heff_low[0, 0].real == pytest.approx(1 - np.sqrt(1.04), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_spectrum_matches_low_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    split = random_split(rng, 8, 3)
    V = random_hermitian(rng, 8)
    prob = PerturbedProblem(split, V, 0.0)
    prob = prob.with_epsilon(0.4 * prob.epsilon_c)
    res = exact_sw_transform(prob)
    vals, vecs = np.linalg.eigh(prob.H)
    # classify perturbed eigenvectors by their weight on P0
    weight = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), split.P0, vecs))
    low = np.sort(vals[np.argsort(weight)[-3:]])
    assert np.allclose(np.linalg.eigvalsh(res.heff_low), low, atol=1e-9)
    assert res.offdiag_residual <= 1e-9
    assert operator_norm(res.heff_full - res.heff_full.conj().T) <= 1e-10
    assert operator_norm(res.P - split.P0) <= 2 * abs(prob.epsilon) * operator_norm(V) / split.gap


def test_additivity_two_level_and_zero():
    a = two_level(0.2)
    b = PerturbedProblem(make_split(np.diag([0.0, 1.5]), (-0.2, 0.2)), np.array([[0.1, 0.4], [0.4, -0.3]]), 0.3)
    assert additivity_residual(a, b) <= 1e-9
    assert additivity_residual(two_level(0.0), two_level(0.0)) <= 1e-12


def test_extended_precision_reference_agrees():
    rng = np.random.default_rng(5)
    split = random_split(rng, 5, 2)
    prob = PerturbedProblem(split, random_hermitian(rng, 5), 0.0)
    prob = prob.with_epsilon(0.3 * prob.epsilon_c)
    ref = exact_heff_reference(prob, dps=30)
    arr = np.array([[complex(ref[i, j]) for j in range(2)] for i in range(2)])
    assert operator_norm(arr - exact_sw_transform(prob).heff_low) <= 1e-10
