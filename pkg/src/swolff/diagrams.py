"""Tree-diagram expansion of the effective Hamiltonian and of the generator.

Ordered rooted trees are nested tuples: a node is the tuple of its child
subtrees, a leaf is ``()``.  The canonical encoding of a tree is the preorder
list of child counts, e.g. the three-node chain is ``(1, 1, 0)``.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import NotAdmissible, OrderTooLarge
from .exact_sw import SpectralSplit
from .operator_core import block_split
from .perturbative_sw import SeriesCoefficients, bernoulli_coefficients, make_L

MAX_TREE_ORDER = 10

Tree = tuple


def encode(tree: Tree) -> tuple[int, ...]:
    out = [len(tree)]
    for child in tree:
        out.extend(encode(child))
    return tuple(out)


def decode(code) -> Tree:
    code = list(code)
    pos = 0

    def node():
        nonlocal pos
        k = code[pos]
        pos += 1
        return tuple(node() for _ in range(k))

    tree = node()
    if pos != len(code):
        raise ValueError("trailing entries in tree encoding")
    return tree


def size(tree: Tree) -> int:
    return 1 + sum(size(c) for c in tree)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _s_trees(n: int) -> tuple[Tree, ...]:
    """Ordered trees with n nodes in which no node has an odd count > 1 of children."""
    if n == 1:
        return ((),)
    out = []
    for k in range(1, n):
        if k > 1 and k % 2:
            continue
        for sizes in _compositions(n - 1, k):
            for kids in product(*(_s_trees(s) for s in sizes)):
                out.append(tuple(kids))
    return tuple(sorted(out, key=encode))


def _check_order(n: int) -> None:
    if n > MAX_TREE_ORDER:
        raise OrderTooLarge(f"tree enumeration limited to {MAX_TREE_ORDER} nodes")


def enumerate_s_admissible(n: int) -> list[Tree]:
    _check_order(n)
    if n < 1:
        return []
    return list(_s_trees(n))


def enumerate_admissible(n: int) -> list[Tree]:
    """Ordered trees with n nodes: root has odd NOC, others have NOC 1 or even."""
    _check_order(n)
    if n < 2:
        return []
    out = []
    for k in range(1, n, 2):
        for sizes in _compositions(n - 1, k):
            for kids in product(*(_s_trees(s) for s in sizes)):
                out.append(tuple(kids))
    return sorted(out, key=encode)


def _s_admissible_node(tree: Tree) -> bool:
    k = len(tree)
    return (k <= 1 or k % 2 == 0) and all(_s_admissible_node(c) for c in tree)


def is_s_admissible(tree: Tree) -> bool:
    return _s_admissible_node(tree)


def is_admissible(tree: Tree) -> bool:
    return len(tree) % 2 == 1 and all(_s_admissible_node(c) for c in tree)


def _inner_weight(tree: Tree, a) -> Fraction:
    k = len(tree)
    w = Fraction(1) if k == 1 else a[k]
    for c in tree:
        w *= _inner_weight(c, a)
    return w


def tree_weight(tree: Tree) -> Fraction:
    """w(T): b_k at the root, a_k at non-root nodes with k even children, 1 otherwise."""
    if not is_admissible(tree):
        raise NotAdmissible(f"tree {encode(tree)} is not admissible")
    t = bernoulli_coefficients(max(size(tree), 2))
    w = t.b[len(tree)]
    for c in tree:
        w *= _inner_weight(c, t.a)
    return w


def tree_weight_s(tree: Tree) -> Fraction:
    """w'(T): product over all nodes of 1 (one child) or a_k (k even children)."""
    if not is_s_admissible(tree):
        raise NotAdmissible(f"tree {encode(tree)} is not S-admissible")
    t = bernoulli_coefficients(max(size(tree), 2))
    return _inner_weight(tree, t.a)


class DiagramContext:
    """Shared data for evaluating node operators on one (split, V) instance."""

    def __init__(self, split: SpectralSplit, V: np.ndarray):
        self.split = split
        self.P0 = split.P0
        self.Vd, self.Vod = block_split(V, self.P0)
        self.L = make_L(split)
        self.S1 = self.L(self.Vod)
        self._cache: dict[Tree, np.ndarray] = {}

    def _chain(self, kids) -> np.ndarray:
        # ad(O_1) ... ad(O_k) (V_od): the rightmost child acts first
        X = self.Vod
        for c in reversed(kids):
            O = self.inner(c)
            X = O @ X - X @ O
        return X

    def inner(self, tree: Tree) -> np.ndarray:
        """O'_u for a non-root node (also the S-diagram operator)."""
        if tree in self._cache:
            return self._cache[tree]
        k = len(tree)
        if k == 0:
            val = self.S1
        elif k == 1:
            O = self.inner(tree[0])
            val = -self.L(self.Vd @ O - O @ self.Vd)
        elif k % 2 == 0:
            val = self.L(self._chain(tree))
        else:
            val = np.zeros_like(self.S1)
        self._cache[tree] = val
        return val

    def root(self, tree: Tree) -> np.ndarray:
        if len(tree) % 2 == 0:
            return np.zeros_like(self.S1)
        return self.P0 @ self._chain(tree) @ self.P0


def evaluate_tree(tree: Tree, ctx: DiagramContext) -> np.ndarray:
    if not is_admissible(tree):
        raise NotAdmissible(f"tree {encode(tree)} is not admissible")
    return ctx.root(tree)


def evaluate_tree_s(tree: Tree, ctx: DiagramContext) -> np.ndarray:
    if not is_s_admissible(tree):
        raise NotAdmissible(f"tree {encode(tree)} is not S-admissible")
    return ctx.inner(tree)


def heff_via_diagrams(ctx: DiagramContext, n: int) -> SeriesCoefficients:
    """[H0 P0, P0 V P0, sum_{T in T(2)} w O, ..., sum_{T in T(n)} w O]."""
    _check_order(n)
    P0 = ctx.P0
    V = ctx.Vd + ctx.Vod
    coeffs = [ctx.split.H0 @ P0, P0 @ V @ P0]
    for q in range(2, n + 1):
        acc = np.zeros_like(ctx.S1)
        for T in enumerate_admissible(q):
            acc = acc + float(tree_weight(T)) * ctx.root(T)
        coeffs.append(acc)
    return SeriesCoefficients(coeffs[: n + 1], "low_block")


def generator_via_diagrams(ctx: DiagramContext, n: int) -> SeriesCoefficients:
    """[0, S_1, ..., S_n] with S_q = sum over S-admissible trees of w' O'."""
    _check_order(n)
    coeffs = [np.zeros_like(ctx.S1)]
    for q in range(1, n + 1):
        acc = np.zeros_like(ctx.S1)
        for T in enumerate_s_admissible(q):
            acc = acc + float(tree_weight_s(T)) * ctx.inner(T)
        coeffs.append(acc)
    return SeriesCoefficients(coeffs, "off_diagonal")


def tree_table(max_order: int) -> dict:
    """Counts, encodings and weights of admissible trees, for reports."""
    _check_order(max_order)
    rows = {}
    for q in range(2, max_order + 1):
        trees = enumerate_admissible(q)
        rows[str(q)] = {
            "count": len(trees),
            "trees": [
                {"encoding": list(encode(T)), "weight": str(tree_weight(T))} for T in trees
            ],
        }
    return rows
