"""The complex conformal connection of a Kähler structure (g, J) and a
potential u.

With omega = du and P = grad u the connection is

    D_X Y = nabla_X Y + omega(X)Y + omega(Y)X - g(X,Y)P
            - omega(JX)JY - omega(JY)JX - g(JX,Y)JP.

Its curvature is computed directly from the coefficient field (curvature of a
connection with torsion); the closed-form relation to the Riemannian
curvature is evaluated separately so that the two routes check each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dsl import ManifoldSpec
from .exact_diff import TaylorJet, einsum, taylor
from .levi_civita import Geometry, connection_curvature, covariant_derivative
from .tensors import kahler_curvature_operator, rel_max

FLATNESS_TOL = 1e-7


class MissingPotentialError(ValueError):
    pass


@dataclass(frozen=True)
class LeeData:
    u: float
    omega: np.ndarray
    P: np.ndarray
    omega_J: np.ndarray
    JP: np.ndarray
    omega_P: float
    conformal_factor: float
    lee_form_bar: np.ndarray  # Lee form of (e^{2u} g, J), equal to 2 omega
    lee_vector_bar: np.ndarray  # its e^{2u} g dual, 2 e^{-2u} P
    lee_form_residual: float  # | d Omega_bar - lee_form_bar ^ Omega_bar |


@dataclass(frozen=True)
class ConformalData:
    D_coeffs: np.ndarray  # D[k, i, j]: e_k component of D_{e_i} e_j
    torsion: np.ndarray  # T[k, i, j]: e_k component of T(e_i, e_j)
    R_script: np.ndarray  # [l, k, i, j]: e_l component of R_D(e_i, e_j) e_k
    L: np.ndarray


def _wedge_one_two(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    # (a ^ B)_{ijk} as the cyclic sum matching (dB)_{ijk} = d_i B_jk + cyclic
    return np.einsum("i,jk->ijk", a, B) + np.einsum("j,ki->ijk", a, B) + np.einsum("k,ij->ijk", a, B)


class ConformalGeometry:
    """Jets of the complex conformal connection at one point.

    `u` is a scalar jet of order >= 2; it comes from the spec's potential
    expression or, in the inverse certification, from -ln(-tau)/2.
    """

    def __init__(self, geo: Geometry, u: TaylorJet):
        if u.order < 2:
            raise ValueError("the potential jet must have order >= 2")
        self.geo = geo
        self.u = u

    @classmethod
    def from_spec(cls, spec: ManifoldSpec, point, order: int = 4, geo: Geometry | None = None):
        if spec.potential_u is None:
            raise MissingPotentialError(f"spec {spec.name!r} has no potential_u")
        geo = geo or Geometry(spec, point, order)
        return cls(geo, taylor(spec.potential_u, geo.point, geo.order))

    # Lee data -------------------------------------------------------------
    @cached_property
    def omega(self) -> TaylorJet:
        return self.u.d()

    @cached_property
    def P(self) -> TaylorJet:
        return einsum("ij,j->i", self.geo.g_inv, self.omega)

    @cached_property
    def omega_J(self) -> TaylorJet:
        return einsum("a,ai->i", self.omega, self.geo.J)

    @cached_property
    def JP(self) -> TaylorJet:
        return einsum("ia,a->i", self.geo.J, self.P)

    @cached_property
    def omega_P(self) -> TaylorJet:
        return einsum("i,i->", self.omega, self.P)

    def lee_data(self) -> LeeData:
        geo = self.geo
        u0 = float(self.u.value)
        factor = float(np.exp(2 * u0))
        w = self.omega.value
        P = self.P.value
        # Omega_bar = e^{2u} Omega; its exterior derivative needs first jets
        e2u = self.u.truncate(1).scale(2.0).compose([factor, factor])
        Ob = geo.Omega.truncate(1) * e2u
        dOb = Ob.d().value
        dOb = dOb + np.einsum("jki->ijk", dOb) + np.einsum("kij->ijk", dOb)
        Ob0 = Ob.value
        res = rel_max(dOb - _wedge_one_two(2 * w, Ob0), np.abs(dOb).max())
        return LeeData(
            u=u0,
            omega=w,
            P=P,
            omega_J=self.omega_J.value,
            JP=self.JP.value,
            omega_P=float(self.omega_P.value),
            conformal_factor=factor,
            lee_form_bar=2 * w,
            lee_vector_bar=2 * P / factor,
            lee_form_residual=res,
        )

    # connection -------------------------------------------------------------
    @cached_property
    def coefficients(self) -> TaylorJet:
        geo = self.geo
        o = min(self.omega.order, geo.gamma.order, self.omega_J.order, self.JP.order)
        w, P, wJ, JP = (x.truncate(o) for x in (self.omega, self.P, self.omega_J, self.JP))
        g, J, Om = geo.g.truncate(o), geo.J.truncate(min(o, geo.J.order)), geo.Omega.truncate(min(o, geo.Omega.order))
        d = np.eye(geo.dim)
        corr = (
            w.lin("i,kj->kij", d)
            + w.lin("j,ki->kij", d)
            - einsum("ij,k->kij", g, P)
            - einsum("i,kj->kij", wJ, J)
            - einsum("j,ki->kij", wJ, J)
            - einsum("ij,k->kij", Om, JP)
        )
        return geo.gamma.truncate(o) + corr

    @cached_property
    def torsion(self) -> TaylorJet:
        C = self.coefficients
        return C - TaylorJet(np.einsum("kijZ->kjiZ", C.data), C.order, C.nvars)

    @cached_property
    def curvature(self) -> TaylorJet:
        # only the value of the curvature is ever consumed
        return connection_curvature(self.coefficients.truncate(1))

    def nabla(self, T: TaylorJet, slots: str) -> TaylorJet:
        """Covariant derivative with respect to D (not Levi-Civita)."""
        return covariant_derivative(T, slots, self.coefficients)

    def L(self) -> np.ndarray:
        w, wJ = self.omega.value, self.omega_J.value
        return np.outer(w, w) + np.outer(wJ, wJ) + 0.5 * float(self.omega_P.value) * self.geo.g.value

    def conformal_data(self) -> ConformalData:
        return ConformalData(self.coefficients.value, self.torsion.value, self.curvature.value, self.L())

    # residuals ------------------------------------------------------------
    @cached_property
    def nabla_omega(self) -> np.ndarray:
        return self.geo.nabla(self.omega, "l").value

    def defining_residuals(self) -> dict[str, float]:
        """Residuals of DJ = 0, Dg = -2 omega(x)g, T = -2 Omega(x)JP and of
        the same conditions written for g_bar = e^{2u} g."""
        geo = self.geo
        o = self.coefficients.order
        g = geo.g.truncate(o)
        J = geo.J.truncate(min(o, geo.J.order))
        g0 = g.value
        w = self.omega.value
        Om = geo.Omega.value
        JP = self.JP.value
        gscale = float(np.abs(g0).max())
        DJ = self.nabla(J, "ul").value
        Dg = self.nabla(g, "ll").value
        T = self.torsion.value
        factor = float(np.exp(2 * float(self.u.value)))
        e2u = self.u.truncate(o).scale(2.0).compose([factor] * (o + 1))
        gbar = g * e2u
        Dgbar = self.nabla(gbar, "ll").value
        Ombar = factor * Om
        JPbar = 2 * JP / factor
        cscale = max(float(np.abs(self.coefficients.value).max()), 1.0)
        return {
            "DJ": rel_max(DJ, cscale * max(1.0, float(np.abs(J.value).max()))),
            "Dg": rel_max(Dg + 2 * np.einsum("m,ab->mab", w, g0), cscale * gscale),
            "torsion": rel_max(T + 2 * np.einsum("ij,k->kij", Om, JP), cscale),
            "Dgbar": rel_max(Dgbar, cscale * gscale * factor),
            "torsion_bar": rel_max(T + np.einsum("ij,k->kij", Ombar, JPbar), cscale),
        }

    def relation_rhs(self) -> np.ndarray:
        """Curvature of D expressed through R, nabla omega and nabla P."""
        geo = self.geo
        g = geo.g.value
        J = geo.J.value
        R = geo.riemann.value
        d = np.eye(geo.dim)
        w = self.omega.value
        wJ = self.omega_J.value
        P = self.P.value
        JP = self.JP.value
        wP = float(self.omega_P.value)
        gJ = g @ J  # g(e_a, J e_b)
        Nw = self.nabla_omega
        NwJ = Nw @ J  # (nabla_a omega)(J e_b)
        NP = geo.nabla(self.P, "u").value  # NP[a, l]
        NJP = geo.nabla(self.JP, "u").value
        W = Nw - np.outer(w, w) + np.outer(wJ, wJ) + 0.5 * wP * g
        V = NP - np.outer(w, P) - np.outer(wJ, JP) + 0.5 * wP * d
        U = NwJ - np.outer(w, wJ) - np.outer(wJ, w) + 0.5 * wP * gJ
        Vv = NJP - np.outer(w, JP) + np.outer(wJ, P) + 0.5 * wP * J.T
        out = (
            R
            - np.einsum("jk,li->lkij", W, d) + np.einsum("ik,lj->lkij", W, d)
            - np.einsum("jk,il->lkij", g, V) + np.einsum("ik,jl->lkij", g, V)
            + np.einsum("jk,li->lkij", U, J) - np.einsum("ik,lj->lkij", U, J)
            + np.einsum("jk,il->lkij", gJ, Vv) - np.einsum("ik,jl->lkij", gJ, Vv)
            - np.einsum("ij,lk->lkij", NwJ, J) + np.einsum("ji,lk->lkij", NwJ, J)
            + 2 * np.einsum("ij,k,l->lkij", gJ, wJ, P) + 2 * np.einsum("ij,k,l->lkij", gJ, w, JP)
        )
        return out

    def curvature_scale(self) -> float:
        return max(float(np.abs(self.geo.riemann.value).max()), float(np.abs(self.curvature.value).max()))

    def relation_residual(self) -> float:
        return rel_max(self.curvature.value - self.relation_rhs(), self.curvature_scale())

    def lee_hessian_residual(self) -> float:
        g = self.geo.g.value
        wJ = self.omega_J.value
        wP = float(self.omega_P.value)
        Nw = self.nabla_omega
        scale = max(float(np.abs(Nw).max()), abs(wP) * float(np.abs(g).max()))
        return rel_max(Nw + 2 * np.outer(wJ, wJ) + wP * g, scale)

    def split_residual(self) -> float:
        geo = self.geo
        K = kahler_curvature_operator(self.L(), geo.g.value, geo.J.value, geo.frame.g_inv)
        return rel_max(self.curvature.value - (geo.riemann.value + K), self.curvature_scale())

    def res_DP(self) -> float:
        DP = self.nabla(self.P.truncate(self.coefficients.order), "u").value
        NP = self.geo.nabla(self.P, "u").value
        return rel_max(DP, max(float(np.abs(NP).max()), float(np.abs(self.coefficients.value).max())
                               * float(np.abs(self.P.value).max())))

    def flatness(self) -> float:
        """max |R_D| / max(1, max |R|)."""
        return rel_max(self.curvature.value, np.abs(self.geo.riemann.value).max())


# --------------------------------------------------------------------------
# spec-level operations


def lee_data(spec: ManifoldSpec, point) -> LeeData:
    return ConformalGeometry.from_spec(spec, point, order=2).lee_data()


def ccc_coefficients(spec: ManifoldSpec, point) -> np.ndarray:
    return ConformalGeometry.from_spec(spec, point, order=2).coefficients.value


def defining_condition_residuals(spec: ManifoldSpec, point) -> dict[str, float]:
    return ConformalGeometry.from_spec(spec, point, order=2).defining_residuals()


def ccc_curvature(spec: ManifoldSpec, point) -> np.ndarray:
    return ConformalGeometry.from_spec(spec, point, order=2).curvature.value


def relation_residuals(spec: ManifoldSpec, point, tol_hessian: float = FLATNESS_TOL) -> dict[str, float | None]:
    cg = ConformalGeometry.from_spec(spec, point, order=2)
    rh = cg.lee_hessian_residual()
    return {
        "relation_residual": cg.relation_residual(),
        "lee_hessian_residual": rh,
        # only meaningful where the Bianchi condition holds
        "split_residual": cg.split_residual() if rh < tol_hessian else None,
    }


@dataclass(frozen=True)
class FlatnessVerdict:
    passed: bool
    max_curvature: float
    mean_curvature: float
    max_lee_hessian_residual: float
    threshold: float


def flatness_verdict(spec: ManifoldSpec, points, tol: float = FLATNESS_TOL) -> FlatnessVerdict:
    curv, rh = [], []
    for p in points:
        cg = ConformalGeometry.from_spec(spec, p, order=2)
        curv.append(cg.flatness())
        rh.append(cg.lee_hessian_residual())
    curv = np.asarray(curv)
    return FlatnessVerdict(bool(curv.max() < tol), float(curv.max()), float(curv.mean()), float(max(rh)), tol)
