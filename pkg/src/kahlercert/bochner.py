"""The tensor Q, the Bochner curvature tensor, the nabla-rho identity of
Bochner-Kähler manifolds and the Bochner constant."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl import ManifoldSpec
from .levi_civita import CurvatureBundle, Geometry, bundle_from_geometry
from .tensors import MetricFrame, kahler_curvature_operator, lower_first, rel_max

BOCHNER_FLAT_TOL = 1e-7


def q_tensor(bundle: CurvatureBundle, frame: MetricFrame | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Q = rho/(2(n+2)) - tau g/(8(n+1)(n+2)) as (0,2) and (1,1) arrays."""
    frame = frame or bundle.frame
    n = bundle.n
    Q = bundle.Ricci / (2 * (n + 2)) - bundle.tau * frame.g / (8 * (n + 1) * (n + 2))
    return Q, frame.g_inv @ Q


def bochner_tensor(bundle: CurvatureBundle, frame: MetricFrame | None = None) -> np.ndarray:
    """Fully lowered B(R): ``B[l,k,i,j] = g(B(R)(e_i,e_j)e_k, e_l)``."""
    frame = frame or bundle.frame
    Q, _ = q_tensor(bundle, frame)
    K = kahler_curvature_operator(Q, frame.g, frame.J, frame.g_inv)
    return lower_first(bundle.Riemann - K, frame.g)


def bochner_trace(B: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """Ricci-type contraction g^{lj} B_{lkjm} over the lowered layout."""
    # B_low[l,k,i,j] = B(e_l, e_k, e_i, e_j) with R(X,Y)Z paired as (l=W, k=Z, i=X, j=Y)
    return np.einsum("li,lkij->kj", g_inv, B)


def nabla_rho_rhs(bundle: CurvatureBundle) -> np.ndarray:
    """Right side of the Bochner-Kähler identity for (nabla_X rho)(Y,Z), indexed [X,Y,Z]."""
    n = bundle.n
    g, J = bundle.frame.g, bundle.frame.J
    dt = bundle.dtau
    dtJ = dt @ J  # dtau(J e_a)
    gJ = g @ J  # gJ[x, z] = g(e_x, J e_z)
    rhs = (
        2 * np.einsum("x,yz->xyz", dt, g)
        + np.einsum("y,xz->xyz", dt, g)
        + np.einsum("z,xy->xyz", dt, g)
        + np.einsum("y,xz->xyz", dtJ, gJ)
        + np.einsum("z,xy->xyz", dtJ, gJ)
    )
    return rhs / (4 * (n + 1))


def nabla_rho_residual_from_bundle(bundle: CurvatureBundle) -> float:
    lhs = bundle.nabla_rho
    return rel_max(lhs - nabla_rho_rhs(bundle), np.abs(lhs).max())


def bochner_constant_from_bundle(bundle: CurvatureBundle) -> float:
    n = bundle.n
    return bundle.ricci_norm_sq - bundle.tau ** 2 / (2 * (n + 1)) + bundle.laplace_tau / (n + 1)


@dataclass(frozen=True)
class BochnerData:
    Q: np.ndarray
    Q_up: np.ndarray
    B: np.ndarray
    bochner_flat_residual: float
    nabla_rho_residual: float
    frak_B: float
    trace_residual: float

    @property
    def symmetry_residual(self) -> float:
        B = self.B
        scale = max(1.0, float(np.abs(B).max()))
        return max(
            float(np.abs(B + B.transpose(0, 1, 3, 2)).max()),
            float(np.abs(B + B.transpose(1, 0, 2, 3)).max()),
            float(np.abs(B - B.transpose(2, 3, 0, 1)).max()),
        ) / scale


def bochner_data(bundle: CurvatureBundle) -> BochnerData:
    frame = bundle.frame
    Q, Qup = q_tensor(bundle, frame)
    B = bochner_tensor(bundle, frame)
    rscale = float(np.abs(bundle.Riemann_lower).max())
    return BochnerData(
        Q=Q,
        Q_up=Qup,
        B=B,
        bochner_flat_residual=rel_max(B, rscale),
        nabla_rho_residual=nabla_rho_residual_from_bundle(bundle) if bundle.nabla_rho is not None else float("nan"),
        frak_B=bochner_constant_from_bundle(bundle) if bundle.laplace_tau is not None else float("nan"),
        trace_residual=rel_max(bochner_trace(B, frame.g_inv), rscale),
    )


@dataclass(frozen=True)
class ResidualStats:
    max: float
    mean: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max < self.threshold


def _stats(values, tol) -> ResidualStats:
    values = np.asarray(values, dtype=float)
    return ResidualStats(float(values.max()), float(values.mean()), tol)


def bochner_flat_residual(spec: ManifoldSpec, points, tol: float = BOCHNER_FLAT_TOL) -> ResidualStats:
    """max |B| / max(1, max |R|) over points, with verdict against tol."""
    vals = []
    for p in points:
        bundle = bundle_from_geometry(Geometry(spec, p, order=2))
        vals.append(rel_max(bochner_tensor(bundle), np.abs(bundle.Riemann_lower).max()))
    return _stats(vals, tol)


def nabla_rho_identity_residual(spec: ManifoldSpec, point) -> float:
    return nabla_rho_residual_from_bundle(bundle_from_geometry(Geometry(spec, point, order=3)))


def bochner_constant(spec: ManifoldSpec, point) -> float:
    return bochner_constant_from_bundle(bundle_from_geometry(Geometry(spec, point, order=4)))
