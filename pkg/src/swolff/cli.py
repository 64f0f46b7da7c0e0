"""Command line entry point: run JSON configs, print tree tables, run randomized suites.

Config schema (JSON)::

    {
      "model": {"type": "raw", "H0": M, "V": M, "I0": [lo, hi]}
             | {"type": "lattice",
                "sites": [{"h0": M | "levels": [..], "low_dim": k}, ...],
                "edges": [{"u": 0, "v": 1, "V": M}, ...]},
      "epsilon": 0.1 | [0.04, 0.02, 0.01],     # sweeps strictly positive, descending
      "order": 4,
      "tasks": ["exact", "series", "diagrams", "local",
                "linked_cluster", "equivalence", "stability"],
      "seed": 0
    }

Matrices are row-major nested lists; a complex entry is a number or [re, im].
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError, SWError, ValidationError
from .operator_core import TOL_STRUCT, is_hermitian, operator_norm

TASK_ORDER = ("exact", "series", "diagrams", "local", "linked_cluster", "equivalence", "stability")
SUITES = ("direct_rotation", "diagrams", "linked_cluster", "equivalence", "stability")
BASE_TOLERANCES = {
    "struct": TOL_STRUCT,
    "offdiag": 1e-9,
    "diagram_match": 1e-10,
    "support": 1e-9,
    "block_diagonal": 1e-9,
    "ground_energy": 1e-10,
    "vanishing": 1e-14,
}


# -- config parsing ----------------------------------------------------------------

@dataclass
class RunConfig:
    model_type: str
    H0: np.ndarray | None = None
    V: np.ndarray | None = None
    I0: tuple[float, float] | None = None
    lattice: object = None
    epsilons: list[float] = field(default_factory=list)
    order: int = 2
    tasks: list[str] = field(default_factory=lambda: ["exact"])
    seed: int = 0
    raw: dict = field(default_factory=dict)


def _entry(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ParseError(f"{where}: boolean is not a number")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise ParseError(f"{where}: expected number or [re, im], got {x!r}")


def parse_matrix(obj, where: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError(f"{where}: expected a non-empty list of rows")
    n = len(obj)
    if any(len(r) != n for r in obj):
        raise ParseError(f"{where}: matrix must be square")
    return np.array([[_entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(obj)])


def encode_matrix(X: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(X, dtype=complex)]


def _hermitian(X: np.ndarray, name: str) -> np.ndarray:
    if not is_hermitian(X):
        raise ValidationError(f"{name} not hermitian")
    return X


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ParseError(f"{where}: missing field '{key}'")
    return d[key]


def _build_lattice(model: dict):
    from .lattice import Edge, Site, SpinLattice

    sites = []
    for i, s in enumerate(_require(model, "sites", "model")):
        where = f"model.sites[{i}]"
        if "h0" in s:
            h0 = _hermitian(parse_matrix(s["h0"], f"{where}.h0"), f"{where}.h0")
        elif "levels" in s:
            h0 = np.diag([float(x) for x in s["levels"]]).astype(complex)
        else:
            raise ParseError(f"{where}: needs 'h0' or 'levels'")
        sites.append(Site(h0, int(_require(s, "low_dim", where))))
    edges = []
    for i, e in enumerate(model.get("edges", [])):
        where = f"model.edges[{i}]"
        V = _hermitian(parse_matrix(_require(e, "V", where), f"{where}.V"), f"{where}.V")
        edges.append(Edge(int(_require(e, "u", where)), int(_require(e, "v", where)), V))
    return SpinLattice(sites, edges)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ParseError("config root must be an object")
    model = _require(data, "model", "config")
    mtype = model.get("type", "raw")
    cfg = RunConfig(model_type=mtype, raw=data)
    if mtype == "raw":
        H0 = parse_matrix(_require(model, "H0", "model"), "model.H0")
        V = parse_matrix(_require(model, "V", "model"), "model.V")
        cfg.H0 = _hermitian(H0, "H0")
        cfg.V = _hermitian(V, "V")
        if H0.shape != V.shape:
            raise ValidationError(f"H0 {H0.shape} and V {V.shape} dimensions differ")
        I0 = _require(model, "I0", "model")
        if not (isinstance(I0, list) and len(I0) == 2):
            raise ParseError("model.I0: expected [lo, hi]")
        cfg.I0 = (float(I0[0]), float(I0[1]))
        if cfg.I0[0] >= cfg.I0[1]:
            raise ValidationError("I0 must satisfy lo < hi")
    elif mtype == "lattice":
        try:
            cfg.lattice = _build_lattice(model)
        except ParseError:
            raise
        except SWError as exc:
            raise ValidationError(str(exc)) from exc
    else:
        raise ParseError(f"model.type: unknown value {mtype!r}")
    eps = data.get("epsilon", 0.1)
    eps = [eps] if isinstance(eps, (int, float)) else eps
    if not isinstance(eps, list) or not eps or not all(isinstance(e, (int, float)) for e in eps):
        raise ParseError("epsilon: expected a number or a list of numbers")
    eps = [float(e) for e in eps]
    if any(e <= 0 for e in eps):
        raise ValidationError("epsilon values must be strictly positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValidationError("epsilon sweep must be strictly descending")
    cfg.epsilons = eps
    cfg.order = int(data.get("order", 2))
    if cfg.order < 1:
        raise ValidationError("order must be at least 1")
    tasks = data.get("tasks", ["exact"])
    bad = [t for t in tasks if t not in TASK_ORDER]
    if bad:
        raise ValidationError(f"unknown tasks {bad}")
    cfg.tasks = [t for t in TASK_ORDER if t in tasks]
    cfg.seed = int(data.get("seed", 0))
    return cfg


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_config(path) -> RunConfig:
    return config_from_dict(load_json(path))


# -- tasks -------------------------------------------------------------------------

def _problem_parts(cfg: RunConfig):
    from .exact_sw import make_split

    if cfg.model_type == "raw":
        return make_split(cfg.H0, cfg.I0), cfg.V
    lat = cfg.lattice
    return make_split(lat.H0(), lat.ground_window()), lat.V()


def _need_lattice(cfg: RunConfig):
    if cfg.lattice is None:
        raise ValidationError("task requires a lattice model")
    return cfg.lattice


def _slope_or_zero(eps, values, floor):
    from .cluster_equivalence import fit_exponent

    if len(eps) < 2:
        return None, False
    if max(values) <= floor:
        return None, True
    if min(values) <= 0:
        return None, False
    return fit_exponent(eps, values), False


def task_exact(cfg: RunConfig, tol: dict) -> dict:
    from .exact_sw import PerturbedProblem, exact_sw_transform

    split, V = _problem_parts(cfg)
    rows, ok = [], True
    for eps in cfg.epsilons:
        prob = PerturbedProblem(split, V, eps)
        res = exact_sw_transform(prob)
        dist = operator_norm(res.P - split.P0)
        bound = 2.0 * eps * operator_norm(V) / split.gap
        good = res.offdiag_residual <= tol["offdiag"] and dist <= bound + tol["struct"]
        ok &= good
        rows.append({
            "epsilon": eps,
            "heff_low_spectrum": [float(x) for x in np.linalg.eigvalsh(res.heff_low)],
            "offdiag_residual": res.offdiag_residual,
            "projector_distance": dist,
            "projector_bound": bound,
        })
    return {"passed": ok, "epsilon_c": PerturbedProblem(split, V, 0.0).epsilon_c, "gap": split.gap,
            "rank": split.rank, "runs": rows,
            "heff_low_spectrum": rows[0]["heff_low_spectrum"]}


def task_series(cfg: RunConfig, tol: dict) -> dict:
    from .exact_sw import PerturbedProblem, exact_sw_transform
    from .perturbative_sw import convergence_radius, heff_series, low_block

    split, V = _problem_parts(cfg)
    ser = heff_series(split, cfg.order, V)
    low = low_block(ser, split)
    errs = []
    for eps in cfg.epsilons:
        exact = exact_sw_transform(PerturbedProblem(split, V, eps)).heff_low
        approx = sum(C * eps**q for q, C in enumerate(low))
        errs.append(operator_norm(exact - approx))
    slope, vanishing = _slope_or_zero(cfg.epsilons, errs, tol["vanishing"])
    return {"passed": True, "coefficient_norms": ser.norms(), "convergence_radius": convergence_radius(split, V),
            "truncation_errors": errs, "fitted_exponent": slope, "vanishing": vanishing}


def task_diagrams(cfg: RunConfig, tol: dict) -> dict:
    from .diagrams import DiagramContext, enumerate_admissible, heff_via_diagrams
    from .perturbative_sw import heff_series

    order = cfg.order
    out = {
        "orders": list(range(3, order + 1)),
        "counts": [len(enumerate_admissible(q)) for q in range(3, order + 1)],
        "counts_by_order": {str(q): len(enumerate_admissible(q)) for q in range(2, order + 1)},
    }
    split, V = _problem_parts(cfg)
    q = min(order, 6)
    ctx = DiagramContext(split, V)
    d = heff_via_diagrams(ctx, q).coeffs
    r = heff_series(split, q, V).coeffs
    diff = max(operator_norm(a - b) for a, b in zip(d, r))
    out["max_diagram_recursion_diff"] = diff
    out["passed"] = bool(diff <= tol["diagram_match"] * max(1.0, max(operator_norm(x) for x in r)))
    return out


def task_local(cfg: RunConfig, tol: dict) -> dict:
    from .local_sw import build_local_sw, garbage_norm, locality_report

    lat = _need_lattice(cfg)
    n = cfg.order
    states = [build_local_sw(lat, eps, n) for eps in cfg.epsilons]
    loc = locality_report(states[0])
    loc_ok = all(k <= j + 2 for j, k in enumerate(loc["T"])) and all(k <= j + 2 for j, k in enumerate(loc["V"]))
    garb = [garbage_norm(s) for s in states]
    homo = [states[0].series.homological_residual(j) for j in range(1, n + 1)]
    slope, vanishing = _slope_or_zero(cfg.epsilons, garb, tol["vanishing"])
    scaling_ok = slope is None or slope >= n + 0.5
    return {"passed": bool(loc_ok and scaling_ok and max(homo) <= tol["offdiag"]),
            "locality": loc, "garbage_norms": garb, "fitted_exponent": slope, "vanishing": vanishing,
            "homological_residuals": homo,
            "strengths_V": [s.norm_1() for _, s in sorted(states[0].series.Vseq.items())]}


def task_linked_cluster(cfg: RunConfig, tol: dict) -> dict:
    from .cluster_equivalence import linked_cluster_report, multivariate_heff

    lat = _need_lattice(cfg)
    out, ok = {}, True
    for method in ("global_recursion", "local_sw"):
        rep = linked_cluster_report(multivariate_heff(lat, cfg.order, method), tol=tol["support"])
        ok &= rep["ok"]
        out[method] = {
            "ok": rep["ok"],
            "violations": rep["violations"],
            "max_support_residual": rep["max_support_residual"],
            "coefficients": [{k: r[k] for k in ("monomial", "norm", "connected", "nonzero")} for r in rep["rows"]],
        }
    out["passed"] = bool(ok)
    return out


def task_equivalence(cfg: RunConfig, tol: dict) -> dict:
    from .cluster_equivalence import equivalence_details

    lat = _need_lattice(cfg)
    det = [equivalence_details(lat, eps, cfg.order) for eps in cfg.epsilons]
    res = [d["residual"] for d in det]
    offd = max(d["max_offdiag"] for d in det)
    slope, vanishing = _slope_or_zero(cfg.epsilons, res, tol["vanishing"])
    scaling_ok = slope is None or slope >= cfg.order + 0.5
    return {"passed": bool(offd <= tol["block_diagonal"] and scaling_ok), "residuals": res,
            "max_K_offdiag": offd, "fitted_exponent": slope, "vanishing": vanishing,
            "K_norms": det[0]["K_norms"]}


def task_stability(cfg: RunConfig, tol: dict) -> dict:
    from .local_sw import stability_check

    lat = _need_lattice(cfg)
    eps = cfg.epsilons[0]
    dec = lat.edge_decomposition([eps] * len(lat.edges))
    chk = stability_check(lat, dec)
    H = lat.H0() + eps * lat.V()
    B = lat.low_isometry()
    e_full = float(np.linalg.eigvalsh(H)[0])
    e_low = float(np.linalg.eigvalsh(B.conj().T @ H @ B)[0])
    chk["ground_energy"] = e_full
    chk["low_block_ground_energy"] = e_low
    chk["passed"] = bool(not chk["stable"] or abs(e_full - e_low) <= tol["ground_energy"])
    return chk


TASKS = {
    "exact": task_exact,
    "series": task_series,
    "diagrams": task_diagrams,
    "local": task_local,
    "linked_cluster": task_linked_cluster,
    "equivalence": task_equivalence,
    "stability": task_stability,
}


def _tolerances(scale_: float) -> dict:
    return {k: v * scale_ for k, v in BASE_TOLERANCES.items()}


def _provenance(raw: dict, tol: dict, seed: int) -> dict:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return {
        "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
        "tolerances": tol,
        "seed": seed,
        "version": __version__,
    }


def _to_json(obj):
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def run(cfg: RunConfig, tolerance_scale: float = 1.0) -> dict:
    tol = _tolerances(tolerance_scale)
    results = {}
    for name in cfg.tasks:
        try:
            results[name] = TASKS[name](cfg, tol)
            results[name]["status"] = "passed" if results[name].pop("passed") else "failed"
        except (SWError, ValueError) as exc:
            results[name] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    report = {
        "header": {"tensor_ordering": "site-major (site 0 slowest)", "complex_encoding": "[re, im]"},
        "provenance": _provenance(cfg.raw, tol, cfg.seed),
        "tasks": results,
        "ok": all(r["status"] == "passed" for r in results.values()),
    }
    return _to_json(report)


def dump_report(report: dict) -> str:
    stamped = dict(report)
    stamped["timestamp"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(stamped, sort_keys=True, indent=2) + "\n"


# -- randomized verification suites -----------------------------------------------------

def _suite_direct_rotation(seed: int, tol: dict) -> dict:
    from .direct_rotation import RotationPair, direct_rotation, generator_block_residuals, rotation_generator
    from .operator_core import dag, projector_onto

    rng = np.random.default_rng(seed)
    worst = {"unitarity": 0.0, "rotation": 0.0, "offdiag": 0.0, "norm_S": 0.0}
    for _ in range(50):
        d = int(rng.integers(2, 9))
        r = int(rng.integers(1, d))
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        P0 = projector_onto(Q[:, :r])
        K = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        K = 0.3 * (K - dag(K)) / 2
        from scipy.linalg import expm
        W = expm(K)
        pair = RotationPair(W @ P0 @ dag(W), P0)
        if pair.distance >= 0.95:
            continue
        U = direct_rotation(pair)
        S = rotation_generator(pair)
        worst["unitarity"] = max(worst["unitarity"], operator_norm(dag(U) @ U - np.eye(d)))
        worst["rotation"] = max(worst["rotation"], operator_norm(U @ pair.P @ dag(U) - P0))
        worst["offdiag"] = max(worst["offdiag"], max(generator_block_residuals(S, pair).values()))
        worst["norm_S"] = max(worst["norm_S"], operator_norm(S))
    ok = (worst["unitarity"] <= 1e-10 and worst["rotation"] <= tol["offdiag"]
          and worst["offdiag"] <= tol["offdiag"] and worst["norm_S"] < np.pi / 2)
    return {"ok": bool(ok), **worst}


def _random_split(rng, d: int, r: int):
    from .exact_sw import make_split

    levels = np.sort(rng.uniform(0, 0.5, r)).tolist() + np.sort(rng.uniform(1.5, 3.0, d - r)).tolist()
    return make_split(np.diag(levels).astype(complex), (-0.1, 1.0))


def _suite_diagrams(seed: int, tol: dict) -> dict:
    from .diagrams import DiagramContext, generator_via_diagrams, heff_via_diagrams
    from .lattice import random_hermitian
    from .perturbative_sw import generator_series, heff_series

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        d = int(rng.integers(3, 9))
        split = _random_split(rng, d, int(rng.integers(1, d)))
        V = random_hermitian(rng, d)
        ctx = DiagramContext(split, V)
        pairs = zip(heff_via_diagrams(ctx, 6).coeffs + generator_via_diagrams(ctx, 6).coeffs,
                    heff_series(split, 6, V).coeffs + generator_series(split, 6, V).coeffs)
        worst = max(worst, max(operator_norm(a - b) for a, b in pairs))
    return {"ok": bool(worst <= tol["diagram_match"]), "max_diff": worst}


def _random_chain(rng, n_sites: int, levels, low: int):
    from .lattice import Site, chain, random_hermitian

    d = len(levels)
    sites = [Site(np.diag(levels).astype(complex), low) for _ in range(n_sites)]
    return chain(sites, [random_hermitian(rng, d * d) for _ in range(n_sites - 1)])


def _suite_linked_cluster(seed: int, tol: dict) -> dict:
    from .cluster_equivalence import linked_cluster_report, multivariate_heff

    rng = np.random.default_rng(seed)
    lat = _random_chain(rng, 3, [0.0, 0.0, 1.0], 2)
    reps = {m: linked_cluster_report(multivariate_heff(lat, 3, m), tol=tol["support"])
            for m in ("global_recursion", "local_sw")}
    return {"ok": all(r["ok"] for r in reps.values()),
            "max_support_residual": max(r["max_support_residual"] for r in reps.values())}


def _suite_equivalence(seed: int, tol: dict) -> dict:
    from .cluster_equivalence import equivalence_details, fit_exponent

    rng = np.random.default_rng(seed)
    lat = _random_chain(rng, 2, [0.0, 0.0, 1.0], 2)
    eps = [0.04, 0.02, 0.01]
    det = [equivalence_details(lat, e, 3) for e in eps]
    slope = fit_exponent(eps, [d["residual"] for d in det])
    offd = max(d["max_offdiag"] for d in det)
    return {"ok": bool(slope >= 3.5 and offd <= tol["block_diagonal"]), "fitted_exponent": slope,
            "max_K_offdiag": offd}


def _suite_stability(seed: int, tol: dict) -> dict:
    from .lattice import Edge, SpinLattice, uniform_site
    from .local_sw import random_block_diagonal_edge, stability_check

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        sites = [uniform_site(3, 1, 1.0) for _ in range(3)]
        base = SpinLattice(sites, [])
        edges = [Edge(0, 1, random_block_diagonal_edge(base, 0, 1, rng)),
                 Edge(1, 2, random_block_diagonal_edge(base, 1, 2, rng))]
        lat = SpinLattice(sites, edges)
        c = 0.9 * lat.gap / stability_check(lat, lat.edge_decomposition())["lhs"]
        H = lat.H0() + c * lat.V()
        B = lat.low_isometry()
        worst = max(worst, abs(np.linalg.eigvalsh(H)[0] - np.linalg.eigvalsh(B.conj().T @ H @ B)[0]))
    return {"ok": bool(worst <= tol["ground_energy"]), "max_ground_energy_gap": worst}


SUITE_FUNCS = {
    "direct_rotation": _suite_direct_rotation,
    "diagrams": _suite_diagrams,
    "linked_cluster": _suite_linked_cluster,
    "equivalence": _suite_equivalence,
    "stability": _suite_stability,
}


def verify(suite: str, seed: int, tolerance_scale: float = 1.0) -> dict:
    tol = _tolerances(tolerance_scale)
    names = list(SUITES) if suite == "all" else [suite]
    threads = max(1, int(os.environ.get("SWOLFF_THREADS", "1")))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(SUITE_FUNCS[n], seed, tol) for n in names]
        results = {n: f.result() for n, f in zip(names, futures)}
    return _to_json({
        "header": {"tensor_ordering": "site-major (site 0 slowest)"},
        "provenance": _provenance({"suite": suite}, tol, seed),
        "suites": results,
        "ok": all(r["ok"] for r in results.values()),
    })


# -- entry point -------------------------------------------------------------------------

def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swolff", description="Schrieffer-Wolff effective Hamiltonian toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the tasks listed in a JSON config")
    r.add_argument("config")
    r.add_argument("--output")
    r.add_argument("--order", type=int)
    r.add_argument("--epsilon", type=float, nargs="+")
    r.add_argument("--tolerance-scale", type=float, default=1.0)

    t = sub.add_parser("trees", help="print admissible tree counts and weights")
    t.add_argument("--order", type=int, required=True)
    t.add_argument("--output")

    v = sub.add_parser("verify", help="run a randomized verification suite")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output")
    v.add_argument("--tolerance-scale", type=float, default=1.0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            data = load_json(args.config)
            if args.order is not None:
                data["order"] = args.order
            if args.epsilon is not None:
                data["epsilon"] = args.epsilon
            cfg = config_from_dict(data)
            report = run(cfg, args.tolerance_scale)
            _emit(dump_report(report), args.output)
            return 0 if report["ok"] else 1
        if args.command == "trees":
            from .diagrams import tree_table

            _emit(json.dumps({"trees": tree_table(args.order)}, sort_keys=True, indent=2) + "\n", args.output)
            return 0
        report = verify(args.suite, args.seed, args.tolerance_scale)
        _emit(dump_report(report), args.output)
        return 0 if report["ok"] else 1
    except (ParseError, ValidationError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
