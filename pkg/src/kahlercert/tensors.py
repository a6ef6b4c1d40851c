"""Pointwise tensor values on a chart.

Index conventions used throughout the package:

* ``J[a, b]`` is J^a_b, the a-th component of J e_b.
* ``Omega[i, j] = g(J e_i, e_j)``.
* a (1,3) curvature-type array ``R[l, k, i, j]`` is the e_l component of
  R(e_i, e_j) e_k, and the lowered form is ``R_low[l, k, i, j] = g(R(e_i, e_j) e_k, e_l)``.
* a connection array ``C[k, i, j]`` is the e_k component of D_{e_i} e_j.
* a covariant derivative carries the differentiation slot first:
  ``nabla_T[m, ...] = (nabla_{e_m} T)(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl import ManifoldSpec, SingularMetricError, DomainViolation, MAX_CONDITION
from .exact_diff import evaluate


class FrameInvariantError(ValueError):
    """The manifold specification does not define a Hermitian structure at this point."""


def safe_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse with a condition-number guard (pivoted LU underneath)."""
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMetricError(f"metric condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    return np.linalg.inv(g)


@dataclass(frozen=True)
class MetricFrame:
    point: tuple[float, ...]
    g: np.ndarray
    g_inv: np.ndarray
    J: np.ndarray
    Omega: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    def inner(self, v, w) -> float:
        return float(v @ self.g @ w)

    def norm_sq(self, v) -> float:
        return self.inner(v, v)

    def invariant_residuals(self) -> dict[str, float]:
        dim = self.dim
        scale = max(1.0, float(np.abs(self.g).max()))
        return {
            "inverse": float(np.abs(self.g @ self.g_inv - np.eye(dim)).max()),
            "omega_skew": float(np.abs(self.Omega + self.Omega.T).max()) / scale,
            "hermitian": float(np.abs(self.J.T @ self.g @ self.J - self.g).max()) / scale,
        }


def frame_from_arrays(g: np.ndarray, J: np.ndarray, point=()) -> MetricFrame:
    g = np.asarray(g, dtype=float)
    J = np.asarray(J, dtype=float)
    return MetricFrame(tuple(point), g, safe_inverse(g), J, J.T @ g)


def metric_frame(spec: ManifoldSpec, point, check: bool = True) -> MetricFrame:
    point = np.asarray(point, dtype=float)
    if not spec.in_domain(point):
        raise DomainViolation(f"point {tuple(point)} outside the chart domain")
    dim = spec.dim
    g = np.array([[evaluate(spec.metric[i][j], point) for j in range(dim)] for i in range(dim)])
    J = np.array([[evaluate(spec.complex_structure[i][j], point) for j in range(dim)] for i in range(dim)])
    frame = frame_from_arrays(g, J, point)
    if check:
        res = frame.invariant_residuals()
        limits = {"inverse": 1e-10, "omega_skew": 1e-12, "hermitian": 1e-10}
        bad = {k: v for k, v in res.items() if not v < limits[k]}
        if bad:
            raise FrameInvariantError(f"frame invariants violated at {tuple(point)}: {bad}")
    return frame


# --------------------------------------------------------------------------
# tensors with explicit slot variance


@dataclass(frozen=True)
class TensorValue:
    """Dense components with a variance string: 'u' contravariant, 'l' covariant."""

    components: np.ndarray
    slots: str
    point: tuple[float, ...] = ()

    def __post_init__(self):
        if self.components.ndim != len(self.slots) or set(self.slots) - {"u", "l"}:
            raise ValueError("slot string must match the component rank and use only 'u'/'l'")
        if len(set(self.components.shape)) > 1:
            raise ValueError("all slots must share the chart dimension")

    @property
    def valence(self) -> tuple[int, int]:
        """(covariant, contravariant) slot counts."""
        return self.slots.count("l"), self.slots.count("u")


def musical(t: TensorValue, slot: int, direction: str, frame: MetricFrame) -> TensorValue:
    if not 0 <= slot < len(t.slots):
        raise IndexError(f"slot {slot} out of range for valence {t.slots!r}")
    if direction not in ("raise", "lower"):
        raise ValueError("direction must be 'raise' or 'lower'")
    want = "l" if direction == "raise" else "u"
    if t.slots[slot] != want:
        raise ValueError(f"slot {slot} is already {'contravariant' if want == 'l' else 'covariant'}")
    mat = frame.g_inv if direction == "raise" else frame.g
    comps = np.moveaxis(np.tensordot(mat, t.components, axes=([1], [slot])), 0, slot)
    slots = t.slots[:slot] + ("u" if direction == "raise" else "l") + t.slots[slot + 1:]
    return TensorValue(comps, slots, t.point)


# --------------------------------------------------------------------------
# algebraic curvature operators


def kahler_curvature_operator(S: np.ndarray, g: np.ndarray, J: np.ndarray,
                              g_inv: np.ndarray | None = None) -> np.ndarray:
    """(1,3) array of the map built from a symmetric (0,2) tensor S:

    S(Y,Z)X - S(X,Z)Y + g(Y,Z)S(X) - g(X,Z)S(Y)
    + S(JY,Z)JX - S(JX,Z)JY - 2S(JX,Y)JZ
    + g(JY,Z)JS(X) - g(JX,Z)JS(Y) - 2g(JX,Y)JS(Z)

    The Bochner tensor is R minus this map for S = Q, and the flat conformal
    curvature relation adds it for S = L.
    """
    if g_inv is None:
        g_inv = np.linalg.inv(g)
    dim = g.shape[0]
    d = np.eye(dim)
    Sup = g_inv @ S  # Sup[l, i]: component l of S(e_i)
    SJ = J.T @ S  # SJ[a, b] = S(J e_a, e_b)
    gJ = J.T @ g
    JSup = J @ Sup
    K = (
        np.einsum("jk,li->lkij", S, d)
        - np.einsum("ik,lj->lkij", S, d)
        + np.einsum("jk,li->lkij", g, Sup)
        - np.einsum("ik,lj->lkij", g, Sup)
        + np.einsum("jk,li->lkij", SJ, J)
        - np.einsum("ik,lj->lkij", SJ, J)
        - 2 * np.einsum("ij,lk->lkij", SJ, J)
        + np.einsum("jk,li->lkij", gJ, JSup)
        - np.einsum("ik,lj->lkij", gJ, JSup)
        - 2 * np.einsum("ij,lk->lkij", gJ, JSup)
    )
    return K


def lower_first(T: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Lower the leading (contravariant) slot of a (1,k) array."""
    return np.tensordot(g, T, axes=([1], [0]))


def rel_max(diff, scale) -> float:
    """max|diff| normalised by max(1, scale)."""
    return float(np.max(np.abs(diff))) / max(1.0, float(scale)) if np.size(diff) else 0.0
