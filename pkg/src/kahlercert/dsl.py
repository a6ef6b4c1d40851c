"""Manifold specification documents and the component expression language.

Expressions are small arithmetic trees over named chart coordinates.  Grammar::

    expr   = term { ("+"|"-") term } ;
    term   = factor { ("*"|"/") factor } ;
    factor = ["-"] base [ "^" exponent ] ;
    base   = number | ident | "(" expr ")" | func "(" expr ")" ;
    func   = "sin"|"cos"|"exp"|"ln"|"sqrt"|"tanh" ;

``^`` binds tighter than unary minus.  The exponent must fold to a real
constant once parameters are substituted (``x^2``, ``x^-1``, ``p^(-1/3)``).
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "tanh")


class SpecError(ValueError):
    """Malformed specification document or expression."""


class ExprSyntaxError(SpecError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownIdentifierError(ExprSyntaxError):
    pass


class NonConstantExponentError(ExprSyntaxError):
    pass


class EvaluationDomainError(ArithmeticError):
    """An expression was evaluated outside its domain (ln/sqrt of a non-positive
    argument, division by zero, fractional power of a negative base)."""

    def __init__(self, message: str, subexpr: "Expr | None" = None):
        if subexpr is not None:
            message = f"{message} in {to_text(subexpr)}"
        super().__init__(message)
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# expression tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Const | Var | Neg | BinOp | Pow | Func


def _fold_real(fn: str, x: float) -> float | None:
    try:
        if fn == "sin":
            return math.sin(x)
        if fn == "cos":
            return math.cos(x)
        if fn == "exp":
            return math.exp(x)
        if fn == "tanh":
            return math.tanh(x)
        if fn == "ln":
            return math.log(x) if x > 0 else None
        if fn == "sqrt":
            return math.sqrt(x) if x > 0 else None
    except OverflowError:
        return None
    raise ValueError(fn)


def real_power(x: float, r: float) -> float | None:
    """x**r restricted to the real domain; None outside it."""
    if r == int(r):
        if x == 0 and r < 0:
            return None
        return float(x ** int(r))
    if x <= 0:
        return None
    return x ** r


def _fold(node: Expr) -> Expr:
    # constant folding only; anything that would leave the real domain stays a tree
    if isinstance(node, Neg) and isinstance(node.arg, Const):
        return Const(-node.arg.value)
    if isinstance(node, BinOp) and isinstance(node.left, Const) and isinstance(node.right, Const):
        a, b = node.left.value, node.right.value
        if node.op == "+":
            return Const(a + b)
        if node.op == "-":
            return Const(a - b)
        if node.op == "*":
            return Const(a * b)
        if b != 0:
            return Const(a / b)
        return node
    if isinstance(node, Pow) and isinstance(node.base, Const):
        v = real_power(node.base.value, node.exponent)
        return node if v is None else Const(v)
    if isinstance(node, Func) and isinstance(node.arg, Const):
        v = _fold_real(node.name, node.arg.value)
        return node if v is None else Const(v)
    return node


# --------------------------------------------------------------------------
# tokenizer / recursive-descent parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coordinates: Sequence[str], params: Mapping[str, float]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coordinates)}
        self.params = dict(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos, self.text)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos, self.text)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _fold(BinOp(op, node, self.term()))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _fold(BinOp(op, node, self.factor()))
        return node

    def factor(self) -> Expr:
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            negate = True
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            pos = self.peek()[2]
            exponent = self.exponent()
            if not isinstance(exponent, Const):
                raise NonConstantExponentError("exponent is not a constant", pos, self.text)
            node = _fold(Pow(node, exponent.value))
        return _fold(Neg(node)) if negate else node

    def exponent(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return _fold(Neg(self.base()))
        if self.peek()[:2] == ("op", "+"):
            self.take()
        return self.base()

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _fold(Func(val, arg))
            if val in self.coords:
                return Var(self.coords[val], val)
            if val in self.params:
                return Const(float(self.params[val]))
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos, self.text)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos, self.text)


def parse_expression(
    text: str, coordinates: Sequence[str], params: Mapping[str, float] | None = None
) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    return _Parser(text, coordinates, params or {}).parse()


def to_text(node: Expr) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Const):
        r = repr(float(node.value))
        return f"({r})" if node.value < 0 or r.startswith("-") else r
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-({to_text(node.arg)}))"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)})^({repr(float(node.exponent))})"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(node)


def variables(node: Expr) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Pow):
        return variables(node.base)
    return variables(node.arg)


# --------------------------------------------------------------------------
# manifold specification


@dataclass(frozen=True)
class ManifoldSpec:
    name: str
    dim: int
    coordinates: tuple[str, ...]
    params: Mapping[str, float]
    metric: tuple[tuple[Expr, ...], ...]
    complex_structure: tuple[tuple[Expr, ...], ...]  # J^i_j, row = upper index
    potential_u: Expr | None
    domain: tuple[tuple[float | None, float | None], ...]

    @property
    def n(self) -> int:
        return self.dim // 2

    def without_potential(self) -> "ManifoldSpec":
        return _replace(self, potential_u=None)

    def with_potential(self, u: Expr | None) -> "ManifoldSpec":
        return _replace(self, potential_u=u)

    def scaled(self, factor: float) -> "ManifoldSpec":
        """The homothetic spec with metric factor * g (J and potential dropped/kept as is)."""
        if not factor > 0:
            raise SpecError("homothety factor must be positive")
        c = Const(float(factor))
        metric = tuple(tuple(_fold(BinOp("*", c, e)) for e in row) for row in self.metric)
        return _replace(self, name=f"{self.name}_x{factor:g}", metric=metric)

    def sample_box(self) -> np.ndarray:
        lo_hi = []
        for name, (lo, hi) in zip(self.coordinates, self.domain):
            if lo is None or hi is None:
                raise SpecError(f"coordinate {name!r} has an unbounded domain and no sample box")
            lo_hi.append((lo, hi))
        return np.array(lo_hi, dtype=float)

    def in_domain(self, point) -> bool:
        for x, (lo, hi) in zip(point, self.domain):
            if lo is not None and x < lo or hi is not None and x > hi:
                return False
        return True


def _replace(spec: ManifoldSpec, **kw) -> ManifoldSpec:
    from dataclasses import replace

    return replace(spec, **kw)


def _require(cond: bool, message: str):
    if not cond:
        raise SpecError(message)


def spec_from_dict(doc: Mapping) -> ManifoldSpec:
    keys = ("name", "dim", "coordinates", "metric", "complex_structure")
    for key in keys:
        _require(key in doc, f"missing field {key!r}")
    name = doc["name"]
    _require(isinstance(name, str), "name must be a string")
    dim = doc["dim"]
    _require(isinstance(dim, int) and not isinstance(dim, bool), "dim must be an integer")
    _require(dim % 2 == 0, f"odd dimension {dim}: a Kähler chart has even dimension")
    _require(dim >= 4, f"dimension {dim} < 4")
    coords = doc["coordinates"]
    _require(isinstance(coords, list) and all(isinstance(c, str) for c in coords),
             "coordinates must be a list of strings")
    _require(len(coords) % 2 == 0, f"odd dimension: {len(coords)} coordinates")
    _require(len(coords) == dim, f"dimension mismatch: dim={dim} but {len(coords)} coordinates")
    _require(len(set(coords)) == len(coords), "coordinate names must be distinct")
    for c in coords:
        _require(re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", c) is not None and c not in FUNCTIONS,
                 f"invalid coordinate name {c!r}")
    params = doc.get("params") or {}
    _require(isinstance(params, dict), "params must be an object")
    for k, v in params.items():
        _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"param {k!r} must be a number")
        _require(k not in coords, f"param {k!r} shadows a coordinate")
    params = {k: float(v) for k, v in params.items()}

    def matrix(key: str):
        rows = doc[key]
        _require(isinstance(rows, list) and len(rows) == dim, f"{key} must have {dim} rows")
        out = []
        for i, row in enumerate(rows):
            _require(isinstance(row, list) and len(row) == dim, f"{key} row {i} must have {dim} entries")
            parsed = []
            for j, text in enumerate(row):
                if isinstance(text, (int, float)) and not isinstance(text, bool):
                    text = repr(float(text))
                _require(isinstance(text, str), f"{key}[{i}][{j}] must be a string")
                try:
                    parsed.append(parse_expression(text, coords, params))
                except ExprSyntaxError as exc:
                    raise SpecError(f"{key}[{i}][{j}]: {exc}") from exc
            out.append(tuple(parsed))
        return tuple(out)

    metric = matrix("metric")
    cs = matrix("complex_structure")
    u = doc.get("potential_u")
    if u is not None:
        _require(isinstance(u, str), "potential_u must be a string or null")
        try:
            u = parse_expression(u, coords, params)
        except ExprSyntaxError as exc:
            raise SpecError(f"potential_u: {exc}") from exc
    dom_doc = doc.get("domain") or {}
    _require(isinstance(dom_doc, dict), "domain must be an object")
    for key in dom_doc:
        _require(key in coords, f"domain names unknown coordinate {key!r}")
    domain = []
    for c in coords:
        iv = dom_doc.get(c)
        if iv is None:
            domain.append((None, None))
            continue
        _require(isinstance(iv, list) and len(iv) == 2, f"domain[{c!r}] must be [lo, hi]")
        lo, hi = (None if v is None else float(v) for v in iv)
        _require(lo is None or hi is None or lo <= hi, f"domain[{c!r}] is empty")
        domain.append((lo, hi))
    return ManifoldSpec(name, dim, tuple(coords), params, metric, cs, u, tuple(domain))


def parse_manifold_spec(document: str) -> ManifoldSpec:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "spec document must be a JSON object")
    return spec_from_dict(doc)


def spec_to_dict(spec: ManifoldSpec) -> dict:
    return {
        "name": spec.name,
        "dim": spec.dim,
        "coordinates": list(spec.coordinates),
        "params": dict(spec.params),
        "metric": [[to_text(e) for e in row] for row in spec.metric],
        "complex_structure": [[to_text(e) for e in row] for row in spec.complex_structure],
        "potential_u": None if spec.potential_u is None else to_text(spec.potential_u),
        "domain": {c: [lo, hi] for c, (lo, hi) in zip(spec.coordinates, spec.domain)},
    }


def serialize_spec(spec: ManifoldSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


# --------------------------------------------------------------------------
# validation


@dataclass
class InvariantResult:
    name: str
    threshold: float
    worst: float = 0.0
    worst_point: tuple[float, ...] | None = None
    passed: bool = True

    def record(self, residual: float, point) -> None:
        if not np.isfinite(residual):
            residual = math.inf
        if self.worst_point is None or residual > self.worst:
            self.worst = float(residual)
            self.worst_point = tuple(float(x) for x in point)
        if not residual < self.threshold:
            self.passed = False


@dataclass
class ValidationReport:
    results: dict[str, InvariantResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())


class DomainViolation(ValueError):
    pass


class SingularMetricError(ArithmeticError):
    pass


MAX_CONDITION = 1e12


def validate_spec(spec: ManifoldSpec, probes) -> ValidationReport:
    """Check symmetry, positivity, J^2 = -1 and the Hermitian property at probes."""
    from .exact_diff import evaluate

    report = ValidationReport({
        "symmetric": InvariantResult("symmetric", 1e-12),
        "positive_definite": InvariantResult("positive_definite", 0.5),
        "complex_structure": InvariantResult("complex_structure", 1e-10),
        "hermitian": InvariantResult("hermitian", 1e-10),
    })
    dim = spec.dim
    for point in probes:
        point = np.asarray(point, dtype=float)
        if point.shape != (dim,) or not spec.in_domain(point):
            raise DomainViolation(f"probe {tuple(point)} outside the chart domain")
        g = np.array([[evaluate(spec.metric[i][j], point) for j in range(dim)] for i in range(dim)])
        J = np.array([[evaluate(spec.complex_structure[i][j], point) for j in range(dim)] for i in range(dim)])
        scale = max(1.0, float(np.abs(g).max()))
        report.results["symmetric"].record(float(np.abs(g - g.T).max()) / scale, point)
        sym = 0.5 * (g + g.T)
        if not np.all(np.isfinite(sym)):
            report.results["positive_definite"].record(math.inf, point)
            continue
        eig = np.linalg.eigvalsh(sym)
        if eig[0] > 0 and eig[-1] / eig[0] > MAX_CONDITION:
            raise SingularMetricError(f"metric condition {eig[-1] / eig[0]:.3g} at {tuple(point)}")
        # 0 when positive definite, 1 otherwise
        report.results["positive_definite"].record(0.0 if eig[0] > 0 else 1.0, point)
        jscale = max(1.0, float(np.abs(J).max()) ** 2)
        report.results["complex_structure"].record(float(np.abs(J @ J + np.eye(dim)).max()) / jscale, point)
        report.results["hermitian"].record(float(np.abs(J.T @ g @ J - g).max()) / (scale * jscale), point)
    return report
