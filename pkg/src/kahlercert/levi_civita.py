"""Christoffel symbols, curvature and covariant derivatives from metric jets.

Sign convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
rho(Y,Z) = trace(X -> R(X,Y)Z).  With it the complex hyperbolic space has
negative scalar curvature.  The Laplacian is the trace of the Hessian.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dsl import DomainViolation, ManifoldSpec
from .exact_diff import TaylorJet, einsum, expr_matrix_jet, matrix_inverse, taylor
from .tensors import MetricFrame, frame_from_arrays, lower_first, rel_max

_LETTERS = "abcdefgh"


def covariant_derivative(T: TaylorJet, slots: str, conn: TaylorJet) -> TaylorJet:
    """nabla T for a tensor jet with variance string `slots` ('u'/'l' per axis).

    `conn[k, i, j]` is the e_k component of D_{e_i} e_j; the connection need
    not be symmetric.  The derivative slot is prepended.
    """
    if len(slots) != len(T.shape):
        raise ValueError("variance string does not match tensor rank")
    out = T.d()
    letters = _LETTERS[: len(slots)]
    for p, kind in enumerate(slots):
        inner = letters[:p] + "s" + letters[p + 1:]
        if kind == "u":
            out = out + einsum(f"{letters[p]}ms,{inner}->m{letters}", conn, T)
        else:
            out = out - einsum(f"sm{letters[p]},{inner}->m{letters}", conn, T)
    return out


def connection_curvature(C: TaylorJet) -> TaylorJet:
    """(1,3) curvature ``R[l,k,i,j]`` of a connection-coefficient jet (torsion allowed)."""
    dC = C.d()  # dC[i, l, j, k] = d_i C^l_{jk}
    lin = np.einsum("iljkZ->lkijZ", dC.data) - np.einsum("jlikZ->lkijZ", dC.data)
    quad = einsum("lim,mjk->lkij", C, C) - einsum("ljm,mik->lkij", C, C)
    return TaylorJet(lin, dC.order, C.nvars) + quad


class Geometry:
    """Lazily computed jets of the Levi-Civita geometry of a spec at one point.

    ``order`` is the Taylor order of the metric expansion; each derivative
    level consumes one order (curvature is available to order-2, Delta tau to
    order-4).
    """

    def __init__(self, spec: ManifoldSpec, point, order: int = 4):
        point = np.asarray(point, dtype=float)
        if point.shape != (spec.dim,):
            raise ValueError(f"point must have {spec.dim} coordinates")
        if not spec.in_domain(point):
            raise DomainViolation(f"point {tuple(point)} outside the chart domain")
        self.spec = spec
        self.point = point
        self.order = order
        self.n = spec.n
        self.dim = spec.dim

    # raw fields ----------------------------------------------------------
    @cached_property
    def g(self) -> TaylorJet:
        return expr_matrix_jet(self.spec.metric, self.point, self.order)

    @cached_property
    def J(self) -> TaylorJet:
        return expr_matrix_jet(self.spec.complex_structure, self.point, min(self.order, 3))

    @cached_property
    def frame(self) -> MetricFrame:
        return frame_from_arrays(self.g.value, self.J.value, self.point)

    @cached_property
    def g_inv(self) -> TaylorJet:
        self.frame  # condition check
        return matrix_inverse(self.g)

    @cached_property
    def Omega(self) -> TaylorJet:
        return einsum("ai,aj->ij", self.J, self.g)

    # connection and curvature ------------------------------------------------
    @cached_property
    def gamma_lower(self) -> TaylorJet:
        dg = self.g.d()  # dg[m, i, j] = d_m g_ij
        data = 0.5 * (np.einsum("ijkZ->kijZ", dg.data) + np.einsum("jikZ->kijZ", dg.data) - dg.data)
        return TaylorJet(data, dg.order, dg.nvars)

    @cached_property
    def gamma(self) -> TaylorJet:
        """gamma[l, i, j] = Gamma^l_ij (nabla_{e_i} e_j = Gamma^l_ij e_l)."""
        return einsum("lk,kij->lij", self.g_inv, self.gamma_lower)

    @cached_property
    def riemann(self) -> TaylorJet:
        return connection_curvature(self.gamma)

    @cached_property
    def ricci(self) -> TaylorJet:
        return TaylorJet(np.einsum("ikijZ->jkZ", self.riemann.data), self.riemann.order, self.dim)

    @cached_property
    def tau(self) -> TaylorJet:
        return einsum("jk,jk->", self.g_inv, self.ricci)

    @cached_property
    def dtau(self) -> TaylorJet:
        return self.tau.d()

    @cached_property
    def grad_tau(self) -> TaylorJet:
        return einsum("ij,j->i", self.g_inv, self.dtau)

    @cached_property
    def nabla_rho(self) -> TaylorJet:
        return covariant_derivative(self.ricci, "ll", self.gamma)

    @cached_property
    def hess_tau(self) -> TaylorJet:
        return covariant_derivative(self.dtau, "l", self.gamma)

    @cached_property
    def laplace_tau(self) -> TaylorJet:
        return einsum("ij,ij->", self.g_inv, self.hess_tau)

    def nabla(self, T: TaylorJet, slots: str) -> TaylorJet:
        return covariant_derivative(T, slots, self.gamma)


@dataclass(frozen=True)
class CurvatureBundle:
    point: tuple[float, ...]
    n: int
    frame: MetricFrame
    Gamma: np.ndarray
    Riemann: np.ndarray
    Riemann_lower: np.ndarray
    Ricci: np.ndarray
    tau: float
    dtau: np.ndarray | None
    grad_tau: np.ndarray | None
    nabla_rho: np.ndarray | None
    laplace_tau: float | None
    ricci_norm_sq: float
    dtau_norm_sq: float | None

    def invariant_residuals(self) -> dict[str, float]:
        g_inv = self.frame.g_inv
        scale = max(1.0, float(np.abs(self.Riemann_lower).max()))
        R = self.Riemann_lower
        return {
            "ricci_symmetric": rel_max(self.Ricci - self.Ricci.T, np.abs(self.Ricci).max()),
            "tau_trace": abs(self.tau - float(np.einsum("ij,ij->", g_inv, self.Ricci))) / max(1.0, abs(self.tau)),
            "skew_last_pair": float(np.abs(R + R.transpose(0, 1, 3, 2)).max()) / scale,
            "pair_exchange": float(np.abs(R - R.transpose(2, 3, 0, 1)).max()) / scale,
        }


def bundle_from_geometry(geo: Geometry) -> CurvatureBundle:
    frame = geo.frame
    ric = geo.ricci.value
    g_inv = frame.g_inv
    # an order-2 metric jet gives the curvature value only, without d tau
    dtau = geo.dtau.value if geo.order >= 3 else None
    riem = geo.riemann.value
    has4 = geo.order >= 4
    return CurvatureBundle(
        point=tuple(float(x) for x in geo.point),
        n=geo.n,
        frame=frame,
        Gamma=geo.gamma.value,
        Riemann=riem,
        Riemann_lower=lower_first(riem, frame.g),
        Ricci=ric,
        tau=float(geo.tau.value),
        dtau=dtau,
        grad_tau=g_inv @ dtau if dtau is not None else None,
        nabla_rho=geo.nabla_rho.value if geo.order >= 3 else None,
        laplace_tau=float(geo.laplace_tau.value) if has4 else None,
        ricci_norm_sq=float(np.einsum("ij,kl,ik,jl->", ric, ric, g_inv, g_inv)),
        dtau_norm_sq=float(dtau @ g_inv @ dtau) if dtau is not None else None,
    )


def christoffel(spec: ManifoldSpec, point) -> np.ndarray:
    return Geometry(spec, point, order=1).gamma.value


def curvature_bundle(spec: ManifoldSpec, point, order: int = 4) -> CurvatureBundle:
    return bundle_from_geometry(Geometry(spec, point, order))


def covariant_derivative_of_field(spec: ManifoldSpec, point, field_exprs, slots: str) -> np.ndarray:
    """nabla of an expression-backed tensor field (nested lists of Expr) at a point."""
    geo = Geometry(spec, point, order=1)
    arr = np.asarray(field_exprs, dtype=object)
    jets = [taylor(e, geo.point, 1) for e in arr.ravel()]
    T = TaylorJet.stack(jets, arr.shape)
    return geo.nabla(T, slots).value


@dataclass(frozen=True)
class KahlerResiduals:
    nabla_J_max: float
    hermitian_max: float
    dOmega_max: float

    def passed(self, tol: float = 1e-8) -> bool:
        return max(self.nabla_J_max, self.hermitian_max, self.dOmega_max) < tol


def kahler_residuals_at(geo: Geometry) -> KahlerResiduals:
    g = geo.g.value
    J = geo.J.value
    gscale = max(1.0, float(np.abs(g).max()))
    nJ = geo.nabla(geo.J.truncate(min(geo.J.order, geo.order)), "ul").value
    dO = geo.Omega.d().value  # dO[i, j, k] = d_i Omega_jk
    cyc = dO + np.einsum("jki->ijk", dO) + np.einsum("kij->ijk", dO)
    jscale = max(1.0, float(np.abs(J).max()))
    gam = max(1.0, float(np.abs(geo.gamma.value).max()))
    return KahlerResiduals(
        nabla_J_max=float(np.abs(nJ).max()) / (jscale * gam),
        hermitian_max=float(np.abs(J.T @ g @ J - g).max()) / gscale,
        dOmega_max=float(np.abs(cyc).max()) / (gscale * gam),
    )


def kahler_residuals(spec: ManifoldSpec, points) -> KahlerResiduals:
    """Worst residuals of nabla J = 0, g(J.,J.) = g and d Omega = 0 over points."""
    worst = [0.0, 0.0, 0.0]
    for p in points:
        r = kahler_residuals_at(Geometry(spec, p, order=1))
        worst = [max(a, b) for a, b in zip(worst, (r.nabla_J_max, r.hermitian_max, r.dOmega_max))]
    return KahlerResiduals(*worst)
