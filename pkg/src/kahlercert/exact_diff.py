"""Exact derivatives of expressions via truncated multivariate Taylor arithmetic.

A field is represented near a base point x0 by the coefficients c_alpha of

    f(x0 + h) = sum_{|alpha| <= order} c_alpha h^alpha,   c_alpha = d^alpha f(x0) / alpha!

Products are truncated convolutions and elementary functions are composed with
their univariate Taylor series, so every derivative is exact up to rounding.
``TaylorJet`` carries a tensor of such polynomials (trailing axis = monomials)
and is the currency of all curvature computations downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

import numpy as np

from .dsl import BinOp, Const, EvaluationDomainError, Expr, Func, Neg, Pow, Var, real_power

MAX_PUBLIC_ORDER = 4
# the B0-distribution check needs d(k), one order above the curvature pipeline
MAX_INTERNAL_ORDER = 5


class DerivativeOrderError(ValueError):
    pass


# --------------------------------------------------------------------------
# monomial bookkeeping


@lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of total degree <= order, graded (degree-major)."""
    out = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            out.append(tuple(alpha))
    return tuple(out)


def n_monomials(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


@lru_cache(maxsize=None)
def monomial_index(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {alpha: k for k, alpha in enumerate(monomials(nvars, order))}


@dataclass(frozen=True)
class _ProductTable:
    left: np.ndarray
    right: np.ndarray
    starts: np.ndarray  # reduceat offsets, pairs sorted by target monomial


@lru_cache(maxsize=None)
def product_table(nvars: int, order: int) -> _ProductTable:
    monos = monomials(nvars, order)
    index = monomial_index(nvars, order)
    triples = []
    for i, a in enumerate(monos):
        da = sum(a)
        for j, b in enumerate(monos):
            if da + sum(b) > order:
                continue
            triples.append((index[tuple(x + y for x, y in zip(a, b))], i, j))
    triples.sort()
    target = np.array([t[0] for t in triples])
    starts = np.searchsorted(target, np.arange(len(monos)))
    return _ProductTable(
        np.array([t[1] for t in triples]), np.array([t[2] for t in triples]), starts
    )


@lru_cache(maxsize=None)
def derivative_table(nvars: int, order: int, var: int) -> tuple[np.ndarray, np.ndarray]:
    """Source index and factor mapping an order-`order` polynomial to its
    partial in `var` (an order-1 lower polynomial)."""
    index = monomial_index(nvars, order)
    src, fac = [], []
    for alpha in monomials(nvars, order - 1):
        beta = list(alpha)
        beta[var] += 1
        src.append(index[tuple(beta)])
        fac.append(beta[var])
    return np.array(src), np.array(fac, dtype=float)


@lru_cache(maxsize=None)
def factorials(nvars: int, order: int) -> np.ndarray:
    return np.array([math.prod(math.factorial(a) for a in alpha) for alpha in monomials(nvars, order)],
                    dtype=float)


# --------------------------------------------------------------------------
# tensor-valued jets


class TaylorJet:
    """Tensor of truncated Taylor polynomials; ``data[..., k]`` is the
    coefficient of monomial k."""

    __slots__ = ("data", "order", "nvars")

    def __init__(self, data: np.ndarray, order: int, nvars: int):
        self.data = data
        self.order = order
        self.nvars = nvars

    # construction ----------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int, nvars: int) -> "TaylorJet":
        value = np.asarray(value, dtype=float)
        data = np.zeros(value.shape + (n_monomials(nvars, order),))
        data[..., 0] = value
        return cls(data, order, nvars)

    @classmethod
    def variable(cls, point: Sequence[float], var: int, order: int) -> "TaylorJet":
        nvars = len(point)
        data = np.zeros(n_monomials(nvars, order))
        data[0] = point[var]
        if order >= 1:
            data[1 + var] = 1.0
        return cls(data, order, nvars)

    @classmethod
    def stack(cls, jets: Sequence["TaylorJet"], shape: tuple[int, ...]) -> "TaylorJet":
        order = min(j.order for j in jets)
        nv = jets[0].nvars
        m = n_monomials(nv, order)
        data = np.stack([j.data[..., :m] for j in jets]).reshape(shape + (m,))
        return cls(data, order, nv)

    # basic properties ----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.data[..., 0]

    def truncate(self, order: int) -> "TaylorJet":
        if order > self.order:
            raise DerivativeOrderError(f"cannot raise jet order {self.order} to {order}")
        return TaylorJet(self.data[..., : n_monomials(self.nvars, order)], order, self.nvars)

    def __getitem__(self, idx) -> "TaylorJet":
        # indexes tensor axes only; the monomial axis is always kept
        return TaylorJet(self.data[idx], self.order, self.nvars)

    def partials(self) -> np.ndarray:
        """Actual partial derivatives d^alpha f, monomial axis last."""
        return self.data * factorials(self.nvars, self.order)

    # linear algebra ----------------------------------------------------------
    def _align(self, other: "TaylorJet") -> tuple[np.ndarray, np.ndarray, int]:
        order = min(self.order, other.order)
        m = n_monomials(self.nvars, order)
        return self.data[..., :m], other.data[..., :m], order

    def __add__(self, other):
        if isinstance(other, TaylorJet):
            a, b, order = self._align(other)
            return TaylorJet(a + b, order, self.nvars)
        out = self.data.copy()
        out[..., 0] += other
        return TaylorJet(out, self.order, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(-self.data, self.order, self.nvars)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "TaylorJet":
        """Multiply by a constant scalar or broadcastable constant array."""
        factor = np.asarray(factor, dtype=float)
        return TaylorJet(factor[..., None] * self.data, self.order, self.nvars)

    def __mul__(self, other):
        if isinstance(other, TaylorJet):
            return einsum("...,...->...", self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorJet):
            return self * other.reciprocal()
        return self.scale(1.0 / np.asarray(other, dtype=float))

    def lin(self, subscripts: str, *consts) -> "TaylorJet":
        """Contract with constant arrays: ``jet.lin('ij,jk->ik', A)``."""
        ins, out = subscripts.split("->")
        parts = ins.split(",")
        spec = ",".join([parts[0] + "Z"] + parts[1:]) + "->" + out + "Z"
        return TaylorJet(np.einsum(spec, self.data, *consts), self.order, self.nvars)

    # calculus ----------------------------------------------------------
    def d(self) -> "TaylorJet":
        """Gradient; the new derivative axis is prepended."""
        if self.order < 1:
            raise DerivativeOrderError("cannot differentiate an order-0 jet")
        parts = []
        for v in range(self.nvars):
            src, fac = derivative_table(self.nvars, self.order, v)
            parts.append(self.data[..., src] * fac)
        return TaylorJet(np.stack(parts), self.order - 1, self.nvars)

    def compose(self, derivs: Sequence[float]) -> "TaylorJet":
        """f(self) for a scalar jet, given f^(k)(value) for k = 0..order."""
        h = self - self.data[..., 0] if self.shape == () else None
        if h is None:
            raise ValueError("compose applies to scalar jets")
        out = TaylorJet.constant(derivs[0], self.order, self.nvars)
        power = TaylorJet.constant(1.0, self.order, self.nvars)
        for k in range(1, self.order + 1):
            power = power * h
            out = out + power.scale(derivs[k] / math.factorial(k))
        return out

    def reciprocal(self) -> "TaylorJet":
        x = float(self.value)
        if x == 0:
            raise EvaluationDomainError("division by zero")
        return self.compose([(-1) ** k * math.factorial(k) / x ** (k + 1) for k in range(self.order + 1)])


def einsum(subscripts: str, a: TaylorJet, b: TaylorJet) -> TaylorJet:
    """Tensor contraction of two jets with truncated polynomial products."""
    order = min(a.order, b.order)
    nv = a.nvars
    table = product_table(nv, order)
    m = n_monomials(nv, order)
    A = a.data[..., :m][..., table.left]
    B = b.data[..., :m][..., table.right]
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", A, B)
    return TaylorJet(np.add.reduceat(prod, table.starts, axis=-1), order, nv)


def matrix_inverse(g: TaylorJet) -> TaylorJet:
    """Inverse of a matrix-valued jet via the nilpotent Neumann series."""
    g0 = g.value
    g0inv = np.linalg.inv(g0)
    h = g - TaylorJet.constant(g0, g.order, g.nvars)
    x = -(h.lin("ij,ki->kj", g0inv))  # -g0inv @ h
    term = TaylorJet.constant(g0inv, g.order, g.nvars)
    total = term
    for _ in range(g.order):
        term = einsum("ij,jk->ik", x, term)
        total = total + term
    return total


# --------------------------------------------------------------------------
# univariate derivative tables


def _power_derivs(x: float, r: float, order: int, node) -> list[float]:
    out = []
    coef = 1.0
    for k in range(order + 1):
        e = r - k
        if coef == 0:
            out.append(0.0)
        else:
            v = real_power(x, e)
            if v is None:
                raise EvaluationDomainError(f"power {r} outside real domain at base {x}", node)
            out.append(coef * v)
        coef *= e
    return out


def _tanh_derivs(x: float, order: int) -> list[float]:
    T = math.tanh(x)
    poly = np.polynomial.Polynomial([0.0, 1.0])
    one_minus = np.polynomial.Polynomial([1.0, 0.0, -1.0])
    out = []
    for _ in range(order + 1):
        out.append(float(poly(T)))
        poly = poly.deriv() * one_minus
    return out


def function_derivs(name: str, x: float, order: int, node=None) -> list[float]:
    if name == "exp":
        try:
            return [math.exp(x)] * (order + 1)
        except OverflowError as exc:
            raise EvaluationDomainError("exp overflow", node) from exc
    if name == "sin":
        cyc = [math.sin(x), math.cos(x), -math.sin(x), -math.cos(x)]
        return [cyc[k % 4] for k in range(order + 1)]
    if name == "cos":
        cyc = [math.cos(x), -math.sin(x), -math.cos(x), math.sin(x)]
        return [cyc[k % 4] for k in range(order + 1)]
    if name == "ln":
        if not x > 0:
            raise EvaluationDomainError(f"ln of non-positive value {x}", node)
        return [math.log(x)] + [(-1) ** (k - 1) * math.factorial(k - 1) / x ** k for k in range(1, order + 1)]
    if name == "sqrt":
        if not x > 0:
            raise EvaluationDomainError(f"sqrt of non-positive value {x}", node)
        return _power_derivs(x, 0.5, order, node)
    if name == "tanh":
        return _tanh_derivs(x, order)
    raise ValueError(f"unknown function {name}")


# --------------------------------------------------------------------------
# expression evaluation


def taylor(f: Expr, point: Sequence[float], order: int) -> TaylorJet:
    """Truncated Taylor expansion of an expression around point."""
    point = [float(x) for x in point]
    if order > MAX_INTERNAL_ORDER:
        raise DerivativeOrderError(f"order {order} exceeds {MAX_INTERNAL_ORDER}")
    cache: dict[int, TaylorJet] = {}

    def rec(node: Expr) -> TaylorJet:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = TaylorJet.constant(node.value, order, len(point))
        elif isinstance(node, Var):
            if node.index >= len(point):
                raise ValueError(f"coordinate {node.name} missing from point")
            out = TaylorJet.variable(point, node.index, order)
        elif isinstance(node, Neg):
            out = -rec(node.arg)
        elif isinstance(node, BinOp):
            a, b = rec(node.left), rec(node.right)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                if float(b.value) == 0.0:
                    raise EvaluationDomainError("division by zero", node)
                out = a * b.reciprocal()
        elif isinstance(node, Pow):
            base = rec(node.base)
            r = node.exponent
            if r == int(r) and 0 <= r <= 8:
                out = TaylorJet.constant(1.0, order, len(point))
                for _ in range(int(r)):
                    out = out * base
            else:
                out = base.compose(_power_derivs(float(base.value), r, order, node))
        elif isinstance(node, Func):
            arg = rec(node.arg)
            out = arg.compose(function_derivs(node.name, float(arg.value), order, node))
        else:
            raise TypeError(node)
        cache[key] = out
        return out

    return rec(f)


def evaluate(f: Expr, point: Sequence[float]) -> float:
    return float(taylor(f, point, 0).value)


def partial_derivative(f: Expr, alpha: Sequence[int], point: Sequence[float]) -> float:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != len(point):
        raise ValueError("multi-index length must match the point dimension")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be non-negative")
    order = sum(alpha)
    if order > MAX_PUBLIC_ORDER:
        raise DerivativeOrderError(f"derivative order {order} > {MAX_PUBLIC_ORDER}")
    t = taylor(f, point, order)
    k = monomial_index(len(point), order)[alpha]
    return float(t.data[k] * math.prod(math.factorial(a) for a in alpha))


@dataclass(frozen=True)
class Jet:
    point: tuple[float, ...]
    order: int
    table: Mapping[tuple[int, ...], float]

    def __getitem__(self, alpha) -> float:
        return self.table[tuple(alpha)]


def jet(f: Expr, point: Sequence[float], order: int) -> Jet:
    if order > MAX_PUBLIC_ORDER or order < 0:
        raise DerivativeOrderError(f"jet order {order} outside 0..{MAX_PUBLIC_ORDER}")
    t = taylor(f, point, order)
    vals = t.partials()
    table = {alpha: float(vals[k]) for k, alpha in enumerate(monomials(len(point), order))}
    return Jet(tuple(float(x) for x in point), order, table)


def expr_matrix_jet(rows, point: Sequence[float], order: int) -> TaylorJet:
    """Jet of a matrix of expressions, entries expanded independently."""
    dim = len(rows)
    jets = [taylor(e, point, order) for row in rows for e in row]
    return TaylorJet.stack(jets, (dim, len(rows[0])))
