"""Built-in manifold specifications.

* ``flat``: C^n with the Euclidean metric and an optional linear potential.
* ``space_form``: complex space form of holomorphic curvature c from the
  Kähler potential (4/c) ln(1 + c|z|^2/4).
* ``perturbed_flat``: a Kähler but non-Bochner-flat perturbation of C^3,
  used as a negative control.
* ``warped_type9``: the warped product over the Sasakian space form
  R^{2n-1}(-3) generated by p(t) = (1 - 3(t - t0))^(-1/3), with the
  potential u = -ln(-tau)/2 that flattens the complex conformal connection.
  The metric is incomplete; only the chart t < t0 + 1/3 is used.

In the warped model the normal 1-form is eta = sqrt(p'(t)) dt = p^2 dt, so
g_tt = p^4 (equal to 1 at t = t0).  With eta = dt the metric
p^2 g0 + p^2 (p' - 1) eta0 (x) eta0 + dt^2 admits no parallel J of this shape;
the Kähler condition forces the arclength s with dp/ds = sqrt(p'(t)).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .dsl import ManifoldSpec, SpecError, spec_from_dict


class ModelParamError(SpecError):
    pass


def _hermitian_doc(name, n, A, B, params, domain, potential=None):
    """Spec dict on (x1, y1, ..., xn, yn) from h = A + iB (A symmetric, B skew)."""
    coords = [c for a in range(1, n + 1) for c in (f"x{a}", f"y{a}")]
    dim = 2 * n
    metric = [["0"] * dim for _ in range(dim)]
    J = [["0"] * dim for _ in range(dim)]
    for a in range(n):
        J[2 * a + 1][2 * a] = "1"  # J d/dx_a = d/dy_a
        J[2 * a][2 * a + 1] = "-1"
        for b in range(n):
            metric[2 * a][2 * b] = A[a][b]
            metric[2 * a + 1][2 * b + 1] = A[a][b]
            metric[2 * a][2 * b + 1] = B[a][b]
            metric[2 * a + 1][2 * b] = B[b][a]
    return {
        "name": name,
        "dim": dim,
        "coordinates": coords,
        "params": params,
        "metric": metric,
        "complex_structure": J,
        "potential_u": potential,
        "domain": {c: list(domain) for c in coords},
    }


def flat(n: int = 3, lee: float = 0.0) -> ManifoldSpec:
    A = [["1" if a == b else "0" for b in range(n)] for a in range(n)]
    B = [["0"] * n for _ in range(n)]
    return spec_from_dict(_hermitian_doc(f"flat_C{n}", n, A, B, {"lee": lee}, (-1.0, 1.0), "lee*x1"))


def space_form(c: float = -4.0, n: int = 3) -> ManifoldSpec:
    if c == 0:
        raise ModelParamError("space_form needs c != 0 (c = 0 is the flat model)")
    r2 = " + ".join(f"x{a}^2 + y{a}^2" for a in range(1, n + 1))
    D = f"(1 + c/4*({r2}))"
    A, B = [], []
    for a in range(1, n + 1):
        rowA, rowB = [], []
        for b in range(1, n + 1):
            delta = f"1/{D}" if a == b else "0"
            rowA.append(f"{delta} - c/4*(x{a}*x{b} + y{a}*y{b})/{D}^2")
            rowB.append("0" if a == b else f"-c/4*(x{a}*y{b} - y{a}*x{b})/{D}^2")
        A.append(rowA)
        B.append(rowB)
    if c < 0:
        # keep |z|^2 < 4/|c| on the whole box
        half = 0.9 * np.sqrt(4.0 / abs(c) / (2 * n))
    else:
        half = 1.0
    half = float(np.round(half, 6))
    return spec_from_dict(_hermitian_doc(f"space_form_c{c:g}", n, A, B, {"c": c}, (-half, half)))


def perturbed_flat(eps: float = 0.3) -> ManifoldSpec:
    """Potential |z|^2 + eps(|z1|^2|z2|^2 + |z3|^4)."""
    A = [
        ["1 + eps*(x2^2 + y2^2)", "eps*(x1*x2 + y1*y2)", "0"],
        ["eps*(x1*x2 + y1*y2)", "1 + eps*(x1^2 + y1^2)", "0"],
        ["0", "0", "1 + 4*eps*(x3^2 + y3^2)"],
    ]
    B = [
        ["0", "eps*(x1*y2 - y1*x2)", "0"],
        ["-eps*(x1*y2 - y1*x2)", "0", "0"],
        ["0", "0", "0"],
    ]
    return spec_from_dict(_hermitian_doc("perturbed_flat", 3, A, B, {"eps": eps}, (-0.5, 0.5)))


# J maps the unit normal p^-2 d/dt to sigma p^-3 xi0; only sigma = -1 gives
# nabla J = 0 (see scripts/sign_search.py)
WARPED_SIGMA = -1.0


@dataclass(frozen=True)
class WarpedParams:
    t0: float = 0.0
    n: int = 3
    alpha0: float = 1.0
    sigma: float = WARPED_SIGMA
    potential: bool = True

    def __post_init__(self):
        if self.alpha0 != 1.0:
            raise ModelParamError("only alpha0 = 1 (base R^{2n-1}(-3)) is built")
        if self.n < 3:
            raise ModelParamError("warped_type9 needs n >= 3 (dim >= 6)")
        if self.sigma not in (1.0, -1.0):
            raise ModelParamError("sigma must be +1 or -1")

    @property
    def t_box(self) -> tuple[float, float]:
        return (self.t0 - 2.0, self.t0 + 1.0 / 3.0 - 0.05)

    @property
    def tau_constant(self) -> float:
        # tau = -C p^2 solves |d tau|^2 = -tau^3/((n+1)(n+2)) with g_tt = p^4, p' = p^4
        return 4.0 * (self.n + 1) * (self.n + 2)


def warped_type9(t0: float = 0.0, n: int = 3, sigma: float = WARPED_SIGMA,
                 potential: bool = True) -> ManifoldSpec:
    wp = WarpedParams(t0=t0, n=n, sigma=sigma, potential=potential)
    m = n - 1
    coords = ["t"] + [c for i in range(1, m + 1) for c in (f"x{i}", f"y{i}")] + ["z"]
    dim = 2 * n
    ix = {c: k for k, c in enumerate(coords)}
    base = "(1 - 3*(t - t0))"  # = p^-3
    p2 = f"{base}^(-2/3)"
    p6 = f"{base}^(-2)"
    g = [["0"] * dim for _ in range(dim)]
    g[0][0] = f"{base}^(-4/3)"  # p' = p^4
    for i in range(1, m + 1):
        x, y = ix[f"x{i}"], ix[f"y{i}"]
        g[y][y] = f"{p2}/4"
        for j in range(1, m + 1):
            xj = ix[f"x{j}"]
            extra = f"{p6}*y{i}*y{j}/4"
            g[x][xj] = f"{p2}/4 + {extra}" if i == j else extra
        g[x][ix["z"]] = g[ix["z"]][x] = f"-{p6}*y{i}/4"
    g[ix["z"]][ix["z"]] = f"{p6}/4"
    # J = phi on the contact distribution (phi 2d_y = 2(d_x + y d_z)),
    # J d_t = sigma p^-1 xi0 and J xi0 = -sigma p d_t, xi0 = 2 d_z
    s = "1" if sigma > 0 else "(-1)"
    J = [["0"] * dim for _ in range(dim)]
    J[ix["z"]][0] = f"2*{s}*{base}^(1/3)"
    J[0][ix["z"]] = f"-{s}*{base}^(-1/3)/2"
    for i in range(1, m + 1):
        x, y = ix[f"x{i}"], ix[f"y{i}"]
        J[y][x] = "-1"
        J[0][x] = f"{s}*y{i}*{base}^(-1/3)/2"
        J[x][y] = "1"
        J[ix["z"]][y] = f"y{i}"
    u = f"-0.5*ln({wp.tau_constant!r}*{p2})" if potential else None
    lo, hi = wp.t_box
    domain = {c: [-1.0, 1.0] for c in coords}
    domain["t"] = [lo, hi]
    doc = {
        "name": f"warped_type9_n{n}",
        "dim": dim,
        "coordinates": coords,
        "params": {"t0": float(t0)},
        "metric": g,
        "complex_structure": J,
        "potential_u": u,
        "domain": domain,
    }
    return spec_from_dict(doc)


@dataclass(frozen=True)
class ModelInfo:
    build: Callable[..., ManifoldSpec]
    params: Mapping[str, tuple[type, object, str]]
    summary: str


MODELS: dict[str, ModelInfo] = {
    "flat": ModelInfo(flat, {
        "n": (int, 3, "complex dimension"),
        "lee": (float, 0.0, "potential u = lee*x1 (0 gives u = 0)"),
    }, "Euclidean C^n, standard J; Bochner-flat control with tau = 0"),
    "space_form": ModelInfo(space_form, {
        "c": (float, -4.0, "holomorphic sectional curvature, nonzero"),
        "n": (int, 3, "complex dimension"),
    }, "complex space form from the potential (4/c) ln(1 + c|z|^2/4); Bochner-flat with d tau = 0"),
    "perturbed_flat": ModelInfo(perturbed_flat, {
        "eps": (float, 0.3, "perturbation strength"),
    }, "Kähler potential |z|^2 + eps(|z1|^2|z2|^2 + |z3|^4); not Bochner-flat"),
    "warped_type9": ModelInfo(warped_type9, {
        "t0": (float, 0.0, "shift of the generating function p(t) = (1 - 3(t - t0))^(-1/3)"),
        "n": (int, 3, "complex dimension (base R^{2n-1}(-3))"),
        "sigma": (float, WARPED_SIGMA, "orientation of J d/dt relative to the Reeb field"),
        "potential": (int, 1, "attach u = -ln(-tau)/2 (1) or not (0)"),
    }, "warped product Kähler metric of type 9 over the Sasakian space form R^5(-3)"),
}


def builtin_model(name: str, params: Mapping[str, float] | None = None) -> ManifoldSpec:
    if name not in MODELS:
        raise ModelParamError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    info = MODELS[name]
    kwargs = {}
    for key, value in (params or {}).items():
        if key not in info.params:
            raise ModelParamError(f"model {name!r} has no parameter {key!r}")
        typ = info.params[key][0]
        if typ is int and float(value) != int(float(value)):
            raise ModelParamError(f"parameter {key!r} must be an integer")
        kwargs[key] = typ(float(value)) if typ is int else float(value)
    if name == "warped_type9" and "potential" in kwargs:
        kwargs["potential"] = bool(kwargs["potential"])
    return info.build(**kwargs)


def sample_points(spec: ManifoldSpec, count: int, seed: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    box = spec.sample_box()
    rng = np.random.default_rng(seed)
    return rng.uniform(box[:, 0], box[:, 1], size=(count, spec.dim))
