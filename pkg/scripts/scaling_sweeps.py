"""Log-log slopes of the truncation, garbage and equivalence residuals.

Prints one line per (quantity, order) with the residuals over a halving
epsilon sweep and the fitted exponent; the expected exponent is n + 1.
"""
import argparse

import numpy as np

from swolff.cluster_equivalence import equivalence_residual, fit_exponent, lattice_split
from swolff.exact_sw import PerturbedProblem, exact_sw_transform
from swolff.lattice import chain, random_hermitian, uniform_site
from swolff.local_sw import build_local_sw, garbage_norm
from swolff.operator_core import operator_norm
from swolff.perturbative_sw import convergence_radius, heff_series, low_block


def qutrit_chain(rng, n_sites):
    sites = [uniform_site(3, 2, 1.0) for _ in range(n_sites)]
    return chain(sites, [random_hermitian(rng, 9) for _ in range(n_sites - 1)])


def report(name, n, eps, values):
    vals = " ".join(f"{v:.3e}" for v in values)
    if max(values) <= 1e-14:
        # nothing above round-off to fit
        print(f"{name:<12} n={n}  vanishing    residuals {vals}")
        return
    print(f"{name:<12} n={n}  slope {fit_exponent(eps, values):5.2f}  residuals {vals}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sites", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    lat = qutrit_chain(rng, args.sites)
    split = lattice_split(lat)
    V = lat.V()

    rho = convergence_radius(split, V)
    eps = list(rho / 4 / 2.0 ** np.arange(4))
    prob = PerturbedProblem(split, V, 0.0)
    for n in (2, 3, 4):
        low = low_block(heff_series(split, n, V), split)
        errs = []
        for e in eps:
            exact = exact_sw_transform(prob.with_epsilon(e)).heff_low
            errs.append(operator_norm(exact - sum(C * e**q for q, C in enumerate(low))))
        report("truncation", n, eps, errs)

    eps = [0.02, 0.01, 0.005]
    for n in (2, 3):
        report("garbage", n, eps, [garbage_norm(build_local_sw(lat, e, n)) for e in eps])
    for n in (2, 3):
        report("equivalence", n, eps, [equivalence_residual(lat, e, n) for e in eps])


if __name__ == "__main__":
    main()
