"""Operator-valued polynomials in several commuting formal variables.

A :class:`Poly` maps exponent tuples (one entry per variable) to operator
coefficients.  Only the operations needed by the recursions are provided:
linear combinations, commutators, products, coefficient-wise maps and
truncation in total degree.  The helpers ``commutator`` and ``apply`` accept
either a Poly or a bare ndarray so the same recursion code serves both.
"""
from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

Monomial = tuple[int, ...]


def _madd(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


class Poly:
    __slots__ = ("terms", "nvars", "max_degree")

    def __init__(self, terms: dict[Monomial, np.ndarray] | None = None, nvars: int = 1,
                 max_degree: int | None = None):
        self.terms = dict(terms or {})
        self.nvars = nvars
        self.max_degree = max_degree

    @classmethod
    def variable_sum(cls, ops: list[np.ndarray], max_degree: int | None = None) -> "Poly":
        """sum_e x_e ops[e]: each operator attached to its own degree-one variable."""
        n = len(ops)
        terms = {}
        for e, X in enumerate(ops):
            m = tuple(1 if i == e else 0 for i in range(n))
            terms[m] = np.asarray(X, dtype=complex)
        return cls(terms, n, max_degree)

    def _like(self, terms: dict) -> "Poly":
        return Poly(terms, self.nvars, self.max_degree)

    def _keep(self, m: Monomial) -> bool:
        return self.max_degree is None or sum(m) <= self.max_degree

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, X in other.terms.items():
            out[m] = out[m] + X if m in out else X
        return self._like(out)

    def __neg__(self) -> "Poly":
        return self._like({m: -X for m, X in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, c) -> "Poly":
        return self._like({m: c * X for m, X in self.terms.items()})

    __rmul__ = __mul__

    def matmul(self, other: "Poly") -> "Poly":
        out: dict[Monomial, np.ndarray] = {}
        for m1, X in self.terms.items():
            for m2, Y in other.terms.items():
                m = _madd(m1, m2)
                if not self._keep(m):
                    continue
                Z = X @ Y
                out[m] = out[m] + Z if m in out else Z
        return self._like(out)

    def comm(self, other: "Poly") -> "Poly":
        out: dict[Monomial, np.ndarray] = {}
        for m1, X in self.terms.items():
            for m2, Y in other.terms.items():
                m = _madd(m1, m2)
                if not self._keep(m):
                    continue
                Z = X @ Y - Y @ X
                out[m] = out[m] + Z if m in out else Z
        return self._like(out)

    def map(self, f: Callable[[np.ndarray], np.ndarray]) -> "Poly":
        return self._like({m: f(X) for m, X in self.terms.items()})

    def homogeneous(self, degree: int) -> "Poly":
        return self._like({m: X for m, X in self.terms.items() if sum(m) == degree})

    def specialize(self, values: Iterable[float]) -> np.ndarray:
        """Evaluate at the given variable values."""
        values = list(values)
        out = None
        for m, X in sorted(self.terms.items()):
            c = 1.0
            for v, k in zip(values, m):
                c *= v**k
            out = c * X if out is None else out + c * X
        return out

    def sorted_items(self) -> list[tuple[Monomial, np.ndarray]]:
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __len__(self) -> int:
        return len(self.terms)


def commutator(a, b):
    if isinstance(a, Poly):
        return a.comm(b)
    return a @ b - b @ a


def apply(f: Callable[[np.ndarray], np.ndarray], x):
    if isinstance(x, Poly):
        return x.map(f)
    return f(x)


def zero_like(x):
    if isinstance(x, Poly):
        return x._like({})
    return np.zeros_like(x)


# -- univariate formal power series with operator coefficients ---------------

def series_mul(A: list[np.ndarray], B: list[np.ndarray], n: int) -> list[np.ndarray]:
    """Cauchy product of two coefficient lists, truncated at order n."""
    d = A[0].shape[0]
    out = [np.zeros((d, d), dtype=complex) for _ in range(n + 1)]
    for i, X in enumerate(A[: n + 1]):
        for j, Y in enumerate(B[: n + 1 - i]):
            out[i + j] = out[i + j] + X @ Y
    return out


def series_exp(X: list[np.ndarray], n: int) -> list[np.ndarray]:
    """exp of a series with zero constant term, truncated at order n."""
    d = X[0].shape[0]
    if np.any(X[0]):
        raise ValueError("series_exp needs a vanishing constant term")
    out = [np.eye(d, dtype=complex)] + [np.zeros((d, d), dtype=complex) for _ in range(n)]
    power = [np.eye(d, dtype=complex)] + [np.zeros((d, d), dtype=complex) for _ in range(n)]
    fact = 1.0
    for k in range(1, n + 1):
        power = series_mul(power, X, n)
        fact *= k
        for q in range(n + 1):
            out[q] = out[q] + power[q] / fact
    return out


def series_log(Y: list[np.ndarray], n: int) -> list[np.ndarray]:
    """log of a series with identity constant term, truncated at order n."""
    d = Y[0].shape[0]
    if np.max(np.abs(Y[0] - np.eye(d))) > 1e-12:
        raise ValueError("series_log needs an identity constant term")
    Z = [np.zeros((d, d), dtype=complex)] + [np.asarray(y, dtype=complex) for y in Y[1: n + 1]]
    Z += [np.zeros((d, d), dtype=complex)] * (n + 1 - len(Z))
    out = [np.zeros((d, d), dtype=complex) for _ in range(n + 1)]
    power = [np.eye(d, dtype=complex)] + [np.zeros((d, d), dtype=complex) for _ in range(n)]
    for k in range(1, n + 1):
        power = series_mul(power, Z, n)
        sign = 1.0 if k % 2 else -1.0
        for q in range(n + 1):
            out[q] = out[q] + sign * power[q] / k
    return out


def poly_exp(X: Poly, n: int, dim: int) -> Poly:
    """exp of a multivariate series with no constant term, total degree <= n."""
    X = Poly(X.terms, X.nvars, n)
    one = Poly({(0,) * X.nvars: np.eye(dim, dtype=complex)}, X.nvars, n)
    out, power, fact = one, one, 1.0
    for k in range(1, n + 1):
        power = power.matmul(X)
        fact *= k
        out = out + power * (1.0 / fact)
    return out


def poly_log(Y: Poly, n: int, dim: int) -> Poly:
    """log of a multivariate series whose constant term is the identity."""
    zero = (0,) * Y.nvars
    Z = Poly({m: X for m, X in Y.terms.items() if m != zero}, Y.nvars, n)
    if zero in Y.terms and np.max(np.abs(Y.terms[zero] - np.eye(dim))) > 1e-12:
        raise ValueError("poly_log needs an identity constant term")
    out = Poly({}, Y.nvars, n)
    power = Poly({zero: np.eye(dim, dtype=complex)}, Y.nvars, n)
    for k in range(1, n + 1):
        power = power.matmul(Z)
        out = out + power * ((1.0 if k % 2 else -1.0) / k)
    return out
