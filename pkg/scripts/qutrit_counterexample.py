"""Fourth-order diagrams on two non-interacting qutrits.

Each admissible 4-node tree couples |0,0> to |1,1>, yet their weighted sum
is the sum of the single-qutrit fourth-order terms.
"""
import argparse

import numpy as np

from swolff.diagrams import DiagramContext, encode, enumerate_admissible, tree_weight
from swolff.exact_sw import PerturbedProblem, joint_problem, make_split
from swolff.lattice import random_hermitian
from swolff.operator_core import operator_norm
from swolff.perturbative_sw import heff_series


def qutrit(rng):
    split = make_split(np.diag([0.0, 0.0, 1.0]), (-0.3, 0.3))
    return PerturbedProblem(split, random_hermitian(rng, 3), 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    A, B = qutrit(rng), qutrit(rng)
    joint = joint_problem(A, B)
    ctx = DiagramContext(joint.split, joint.V)
    trees = enumerate_admissible(4)
    total = np.zeros_like(joint.split.P0, dtype=complex)
    for T in trees:
        O = ctx.root(T)
        w = tree_weight(T)
        total += float(w) * O
        # |0,0> is index 0 and |1,1> is index 4 in the product basis
        print(f"tree {encode(T)}  weight {str(w):>6}  |<00|O|11>| = {abs(O[0, 4]):.4e}")
    hA = heff_series(A.split, 4, A.V).coeffs[4]
    hB = heff_series(B.split, 4, B.V).coeffs[4]
    local = np.kron(hA, B.split.P0) + np.kron(A.split.P0, hB)
    print(f"weighted sum minus single-qutrit terms: {operator_norm(total - local):.2e}")
    print(f"|<00|sum|11>| = {abs(total[0, 4]):.2e}")


if __name__ == "__main__":
    main()
