"""Scalar distribution of a Kähler manifold and the flat-conformal-connection
theorem.

Where d tau != 0 the unit field xi = grad tau / |d tau| and J xi span the
complement of the scalar distribution D_tau.  The B0 conditions read

    nabla_X xi = (k/2){X - eta(X)xi + eta(JX)J xi} + p* eta(JX) J xi,
    dk = xi(k) eta,   p* = -(xi(k) + k^2)/k.

``certify_forward`` evaluates, for a spec with a potential, the chain of
identities forced by flatness of the complex conformal connection;
``certify_inverse`` starts from the curvature hypotheses, builds
u = -ln(-tau)/2 from the jets of tau and checks that the connection is flat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bochner import bochner_constant_from_bundle, bochner_tensor, nabla_rho_residual_from_bundle
from .conformal import ConformalGeometry
from .dsl import ManifoldSpec
from .exact_diff import TaylorJet, einsum, function_derivs
from .levi_civita import CurvatureBundle, Geometry, bundle_from_geometry
from .report import Check, ConstantEstimate
from .tensors import MetricFrame, rel_max

DTAU_FLOOR = 1e-8
K_FLOOR = 1e-8
IDENTITY_TOL = 1e-7
CONSTANT_TOL = 1e-6


class DegenerateScalarField(ArithmeticError):
    """|d tau| vanishes (relative to tau): no scalar distribution at this point."""


class DegenerateDistribution(ArithmeticError):
    """k vanishes: the scalar distribution is not a B0-distribution."""


def _fmt_point(point) -> str:
    return "(" + ", ".join(f"{float(x):.6g}" for x in point) + ")"


def _dtau_floor(tau: float) -> float:
    return DTAU_FLOOR * max(1.0, abs(tau))


@dataclass(frozen=True)
class DistributionData:
    xi: np.ndarray
    eta: np.ndarray
    Jxi: np.ndarray
    k: float
    p_star: float
    a: float
    b: float
    frak_b0: float
    a_plus_k2: float
    label: str

    def frame_residuals(self, frame: MetricFrame) -> dict[str, float]:
        return {
            "xi_unit": abs(frame.norm_sq(self.xi) - 1.0),
            "eta_xi": abs(float(self.eta @ self.xi) - 1.0),
            "eta_Jxi": abs(float(self.eta @ self.Jxi)),
            "b0_formula": abs(self.frak_b0 - (2 * self.a - self.b) / 2),
        }


def scalar_frame(bundle: CurvatureBundle, frame: MetricFrame | None = None):
    """(xi, eta, J xi) at the bundle's point."""
    frame = frame or bundle.frame
    if bundle.dtau is None:
        raise ValueError("the curvature bundle was built without d tau (metric order < 3)")
    norm = math.sqrt(max(bundle.dtau_norm_sq, 0.0))
    if not norm > _dtau_floor(bundle.tau):
        raise DegenerateScalarField(f"d tau = 0 at {_fmt_point(bundle.point)}: no scalar distribution")
    xi = bundle.grad_tau / norm
    eta = bundle.dtau / norm
    return xi, eta, frame.J @ xi


def class_label(a_plus_k2: float, scale: float, tol: float = CONSTANT_TOL) -> str:
    if abs(a_plus_k2) < tol * max(1.0, scale):
        return "zero"
    return "positive" if a_plus_k2 > 0 else "negative"


# --------------------------------------------------------------------------
# curvature model tensors


def pi_tensor(g: np.ndarray, J: np.ndarray) -> np.ndarray:
    d = np.eye(g.shape[0])
    Om = J.T @ g  # g(J e_i, e_j)
    four_pi = (
        np.einsum("jk,li->lkij", g, d) - np.einsum("ik,lj->lkij", g, d)
        - 2 * np.einsum("ij,lk->lkij", Om, J)
        + np.einsum("jk,li->lkij", Om, J) - np.einsum("ik,lj->lkij", Om, J)
    )
    return four_pi / 4


def phi_tensor(g: np.ndarray, J: np.ndarray, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    d = np.eye(g.shape[0])
    Om = J.T @ g
    Jxi = J @ xi
    e, eJ = eta, eta @ J
    ein = np.einsum
    eight_phi = (
        ein("jk,i,l->lkij", g, e, xi) - ein("jk,i,l->lkij", g, eJ, Jxi)
        - ein("ik,j,l->lkij", g, e, xi) + ein("ik,j,l->lkij", g, eJ, Jxi)
        + ein("jk,i,l->lkij", Om, e, Jxi) + ein("jk,i,l->lkij", Om, eJ, xi)
        - ein("ik,j,l->lkij", Om, e, Jxi) - ein("ik,j,l->lkij", Om, eJ, xi)
        - 2 * ein("ij,k,l->lkij", Om, e, Jxi) - 2 * ein("ij,k,l->lkij", Om, eJ, xi)
        + ein("j,k,li->lkij", e, e, d) + ein("j,k,li->lkij", eJ, eJ, d)
        - ein("i,k,lj->lkij", e, e, d) - ein("i,k,lj->lkij", eJ, eJ, d)
        - ein("j,k,li->lkij", e, eJ, J) + ein("j,k,li->lkij", eJ, e, J)
        + ein("i,k,lj->lkij", e, eJ, J) - ein("i,k,lj->lkij", eJ, e, J)
        + 2 * ein("i,j,lk->lkij", e, eJ, J) - 2 * ein("i,j,lk->lkij", eJ, e, J)
    )
    return eight_phi / 8


def fit_pi_phi(R: np.ndarray, pi: np.ndarray, phi: np.ndarray | None) -> tuple[np.ndarray, float]:
    """Least-squares coefficients of R over (pi, phi) and the normalised residual."""
    cols = [pi.ravel()] if phi is None else [pi.ravel(), phi.ravel()]
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, R.ravel(), rcond=None)
    resid = R.ravel() - A @ coef
    return coef, rel_max(resid, np.abs(R).max())


def geometric_functions(bundle: CurvatureBundle, frak_b0: float | None = None,
                        fit: tuple[float, float] | None = None, k: float | None = None) -> dict[str, float]:
    """a, b from tau and b0; b0 taken from the (pi, Phi) fit when not given."""
    n = bundle.n
    if frak_b0 is None:
        if fit is None:
            raise ValueError("need frak_b0 or a fitted (a, b)")
        frak_b0 = (2 * fit[0] - fit[1]) / 2
    c = (n + 1) * (n + 2)
    a = bundle.tau / c + 2 * frak_b0 / (n + 2)
    b = 2 * bundle.tau / c - 2 * n * frak_b0 / (n + 2)
    out = {"a": a, "b": b, "frak_b0": frak_b0, "frak_b0_check": (2 * a - b) / 2}
    if k is not None:
        out["a_plus_k2"] = a + k * k
    return out


# --------------------------------------------------------------------------
# jets of the scalar frame


class ScalarGeometry:
    """Jets of xi, nabla xi and k; the metric expansion needs order 5 for dk."""

    def __init__(self, geo: Geometry):
        self.geo = geo
        tau = float(geo.tau.value)
        nsq = float(einsum("i,i->", geo.dtau.truncate(0), geo.grad_tau.truncate(0)).value)
        if not math.sqrt(max(nsq, 0.0)) > _dtau_floor(tau):
            raise DegenerateScalarField(f"d tau = 0 at {_fmt_point(geo.point)}: no scalar distribution")

    @cached_property
    def dtau_norm(self) -> TaylorJet:
        nsq = einsum("i,i->", self.geo.dtau, self.geo.grad_tau)
        x = float(nsq.value)
        return nsq.compose(function_derivs("sqrt", x, nsq.order))

    @cached_property
    def xi(self) -> TaylorJet:
        return einsum("i,->i", self.geo.grad_tau, self.dtau_norm.reciprocal())

    @cached_property
    def eta(self) -> TaylorJet:
        return einsum("i,->i", self.geo.dtau, self.dtau_norm.reciprocal())

    @cached_property
    def Jxi(self) -> TaylorJet:
        return einsum("ia,a->i", self.geo.J, self.xi)

    @cached_property
    def projector(self) -> TaylorJet:
        """Pi[l, x]: X - eta(X) xi + eta(JX) J xi, the orthogonal projection onto D_tau."""
        etaJ = einsum("a,ax->x", self.eta, self.geo.J)
        d = np.eye(self.geo.dim)
        return TaylorJet.constant(d, self.xi.order, self.geo.dim) - einsum("l,x->lx", self.xi, self.eta) \
            + einsum("l,x->lx", self.Jxi, etaJ)

    @cached_property
    def nabla_xi(self) -> TaylorJet:
        """nabla_xi[m, l] = (nabla_{e_m} xi)^l."""
        return self.geo.nabla(self.xi, "u")

    @cached_property
    def k(self) -> TaylorJet:
        A = self.nabla_xi
        Pi = self.projector
        tr = einsum("ml,ml->", A, Pi)  # trace(Pi o nabla xi) over D_tau
        return tr.scale(1.0 / (self.geo.n - 1))

    def p_star(self) -> float:
        Jxi = self.Jxi.value
        A = self.nabla_xi.value
        return -float(Jxi @ A @ self.geo.g.value @ Jxi)

    def ansatz(self, k: float, p_star: float) -> np.ndarray:
        eta = self.eta.value
        etaJ = eta @ self.geo.J.value
        Pi = self.projector.value
        return 0.5 * k * Pi.T + p_star * np.outer(etaJ, self.Jxi.value)

    def b0_record(self) -> dict[str, float]:
        k = float(self.k.value)
        if not abs(k) > K_FLOOR:
            raise DegenerateDistribution(f"k = {k:.3g}: not a B0-distribution")
        ps = self.p_star()
        A = self.nabla_xi.value
        dk = self.k.d().value
        xik = float(dk @ self.xi.value)
        eta = self.eta.value
        return {
            "k": k,
            "p_star": ps,
            "xi_k": xik,
            "ansatz": rel_max(A - self.ansatz(k, ps), np.abs(A).max()),
            "dk_collinear": rel_max(dk - xik * eta, max(np.abs(dk).max(), k * k)),
            "p_star_formula": abs(ps + (xik + k * k) / k) / max(1.0, abs(ps)),
        }


def b0_residuals(spec: ManifoldSpec, point) -> dict[str, float]:
    return ScalarGeometry(Geometry(spec, point, order=5)).b0_record()


def pi_phi_decomposition_residual(spec: ManifoldSpec, point, pi_only: bool = False) -> dict[str, float]:
    """Fit R = a pi + b Phi (or R = a pi) at a point."""
    bundle = bundle_from_geometry(Geometry(spec, point, order=2 if pi_only else 3))
    f = bundle.frame
    pi = pi_tensor(f.g, f.J)
    if pi_only:
        coef, res = fit_pi_phi(bundle.Riemann, pi, None)
        return {"a": float(coef[0]), "residual": res}
    xi, eta, _ = scalar_frame(bundle)
    coef, res = fit_pi_phi(bundle.Riemann, pi, phi_tensor(f.g, f.J, xi, eta))
    return {"a": float(coef[0]), "b": float(coef[1]), "residual": res}


# --------------------------------------------------------------------------
# theorem certification


@dataclass
class TheoremReport:
    direction: str
    checks: dict[str, Check] = field(default_factory=dict)
    constants: dict[str, ConstantEstimate] = field(default_factory=dict)
    excluded: list[tuple[int, str]] = field(default_factory=list)
    reasons: list[str] = field(default_factory=list)  # failures
    notes: list[str] = field(default_factory=list)  # informational
    applicable: bool = True
    class_label: str | None = None
    potential: str | None = None

    def check(self, name: str, tol: float, note: str = "") -> Check:
        if name not in self.checks:
            self.checks[name] = Check(name, tol, note=note)
        return self.checks[name]

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "N/A"
        if self.reasons or any(c.verdict == "FAIL" for c in self.checks.values()):
            return "FAIL"
        return "PASS"


CONNECTION_CHECKS = ["connection_DJ", "connection_Dg", "connection_torsion", "connection_Dgbar",
                     "connection_torsion_bar", "curvature_relation", "curvature_split"]
FORWARD_CHECKS = CONNECTION_CHECKS + [
    "lee_hessian", "flatness", "bochner_flat", "nabla_rho_bochner", "ricci_from_lee", "ricci_on_lee_vector",
    "tau_from_lee", "nabla_rho_from_lee", "lee_form_from_tau", "lee_vector_from_tau", "dtau_norm", "nabla_xi",
    "xi_along_lee", "k_value", "p_star_value", "b0_shape", "b0_dk", "b0_p_star", "pi_phi_fit", "a_value",
    "b_value", "laplace_tau", "ricci_norm", "tau_negative",
]
CONSTANT_CHECKS = ["const_frak_B", "const_frak_b0", "const_a_plus_k2"]
INVERSE_HYPOTHESES = ["bochner_flat", "b0_shape", "b0_dk", "b0_p_star", "pi_phi_fit", "tau_negative"]
INVERSE_CONCLUSIONS = ["flatness", "lee_hessian", "lee_form", "k_value", "dtau_norm", "p_star_value",
                       "dtau_along_xi", "nabla_eta"]


def default_tolerances(names) -> dict[str, float]:
    return {name: (CONSTANT_TOL if name.startswith("const") else IDENTITY_TOL) for name in names}


def _hypothesis_record(geo: Geometry) -> dict[str, float]:
    """Curvature-side quantities shared by both directions (needs order 5)."""
    cached = getattr(geo, "_hypothesis_record", None)
    if cached is None:
        cached = _compute_hypothesis_record(geo)
        geo._hypothesis_record = cached
    return dict(cached)


def _compute_hypothesis_record(geo: Geometry) -> dict[str, float]:
    n = geo.n
    c = (n + 1) * (n + 2)
    bundle = bundle_from_geometry(geo)
    f = bundle.frame
    tau = bundle.tau
    rec: dict[str, float] = {"tau": tau}
    rscale = np.abs(bundle.Riemann_lower).max()
    rec["bochner_flat"] = rel_max(bochner_tensor(bundle), rscale)
    rec["nabla_rho_bochner"] = nabla_rho_residual_from_bundle(bundle)
    fB = bochner_constant_from_bundle(bundle)
    rec["frak_B"] = fB / max(1.0, tau * tau)
    sg = ScalarGeometry(geo)
    b0 = sg.b0_record()
    k, ps = b0["k"], b0["p_star"]
    rec.update({"k": k, "p_star": ps, "b0_shape": b0["ansatz"], "b0_dk": b0["dk_collinear"],
                "b0_p_star": b0["p_star_formula"]})
    xi, eta, Jxi = sg.xi.value, sg.eta.value, sg.Jxi.value
    coef, res = fit_pi_phi(bundle.Riemann, pi_tensor(f.g, f.J), phi_tensor(f.g, f.J, xi, eta))
    a_fit, b_fit = float(coef[0]), float(coef[1])
    rec["pi_phi_fit"] = res
    gf = geometric_functions(bundle, fit=(a_fit, b_fit), k=k)
    ascale = max(1.0, abs(a_fit))
    rec["frak_b0"] = gf["frak_b0"] / ascale
    rec["a_plus_k2"] = (a_fit + k * k) / ascale
    rec["a"], rec["b"] = a_fit, b_fit
    s_ref = math.sqrt(-tau / c) if tau < 0 else float("nan")
    rec["s_ref"] = s_ref
    # quantities used by both proofs
    rec["dtau_norm"] = abs(bundle.dtau_norm_sq + tau ** 3 / c) / max(1.0, abs(tau) ** 3 / c)
    rec["k_value"] = abs(k + s_ref) / max(1.0, s_ref) if tau < 0 else math.inf
    rec["p_star_value"] = abs(ps - 1.5 * s_ref) / max(1.0, s_ref) if tau < 0 else math.inf
    rec["a_value"] = abs(a_fit - tau / c) / max(1.0, abs(tau) / c)
    rec["b_value"] = abs(b_fit - 2 * tau / c) / max(1.0, 2 * abs(tau) / c)
    lt = bundle.laplace_tau
    rec["laplace_tau"] = abs(lt + tau ** 2 / (n + 1)) / max(1.0, tau ** 2 / (n + 1))
    rn = (n + 3) * tau ** 2 / (2 * (n + 1) ** 2)
    rec["ricci_norm"] = abs(bundle.ricci_norm_sq - rn) / max(1.0, rn)
    A = sg.nabla_xi.value
    if tau < 0:
        target = -0.5 * s_ref * (np.eye(geo.dim) - np.outer(eta, xi) - 2 * np.outer(eta @ f.J, Jxi))
        rec["nabla_xi"] = rel_max(A - target, np.abs(A).max())
    else:
        rec["nabla_xi"] = math.inf
    rec["_bundle"] = bundle  # type: ignore[assignment]
    rec["_scalar"] = sg  # type: ignore[assignment]
    return rec


def forward_point(spec: ManifoldSpec, point, geo: Geometry | None = None) -> dict:
    """Per-point residuals of the forward chain."""
    geo = geo or Geometry(spec, point, order=5)
    cg = ConformalGeometry.from_spec(spec, point, geo=geo)
    out: dict = {f"connection_{k}": v for k, v in cg.defining_residuals().items()}
    out["curvature_relation"] = cg.relation_residual()
    out["curvature_split"] = cg.split_residual()
    out["lee_hessian"] = cg.lee_hessian_residual()
    out["flatness"] = cg.flatness()
    lee = cg.lee_data()
    w, P, wJ, wP = lee.omega, lee.P, lee.omega_J, lee.omega_P
    out["omega_P"] = wP
    if not np.abs(w).max() > 0:
        out["vacuous"] = "omega = 0"
        return out
    n = geo.n
    c = (n + 1) * (n + 2)
    g = geo.g.value
    J = geo.J.value
    ric = geo.ricci.value
    tau = float(geo.tau.value)
    out["tau"] = tau
    out["tau_negative"] = 0.0 if tau < 0 else 1.0
    out["ricci_from_lee"] = rel_max(ric + 2 * (n + 2) * (np.outer(w, w) + np.outer(wJ, wJ) + wP * g), np.abs(ric).max())
    rP = ric @ P
    # contracting the Ricci identity with P gives 4(n+2); omega_J(P) = 0
    out["ricci_on_lee_vector"] = rel_max(rP + 4 * (n + 2) * wP * w, np.abs(rP).max())
    out["ricci_on_lee_vector_half"] = rel_max(rP + 2 * (n + 2) * wP * w, np.abs(rP).max())
    out["tau_from_lee"] = abs(tau + 4 * c * wP) / max(1.0, abs(tau))
    nr = geo.nabla_rho.value
    gJ = g @ J
    rhs_nr = 2 * (n + 2) * wP * (
        2 * np.einsum("x,yz->xyz", w, g) + np.einsum("y,xz->xyz", w, g) + np.einsum("z,xy->xyz", w, g)
        + np.einsum("y,xz->xyz", wJ, gJ) + np.einsum("z,xy->xyz", wJ, gJ)
    )
    out["nabla_rho_from_lee"] = rel_max(nr - rhs_nr, np.abs(nr).max())
    dtau = geo.dtau.value
    out["lee_form_from_tau"] = rel_max(w + dtau / (2 * tau), np.abs(w).max()) if tau != 0 else math.inf
    out["lee_vector_from_tau"] = rel_max(P + (geo.g_inv.value @ dtau) / (2 * tau), np.abs(P).max()) if tau != 0 else math.inf
    try:
        rec = _hypothesis_record(geo)
    except (DegenerateScalarField, DegenerateDistribution) as exc:
        out["excluded"] = str(exc)
        return out
    sg = rec.pop("_scalar")
    rec.pop("_bundle")
    out.update(rec)
    if tau < 0:
        xi = sg.xi.value
        out["xi_along_lee"] = rel_max(xi - 2 * math.sqrt(c / -tau) * P, 1.0)
    else:
        out["xi_along_lee"] = math.inf
    return out


def inverse_point(spec: ManifoldSpec, point, geo: Geometry | None = None) -> dict:
    """Per-point hypotheses and conclusions of the inverse direction.

    The potential of ``spec`` (if any) is ignored; a shared ``geo`` is fine
    since the Levi-Civita data do not depend on it.
    """
    geo = geo or Geometry(spec.without_potential(), point, order=5)
    rec = _hypothesis_record(geo)
    sg = rec.pop("_scalar")
    bundle = rec.pop("_bundle")
    n = geo.n
    c = (n + 1) * (n + 2)
    tau = rec["tau"]
    out = dict(rec)
    out["tau_negative"] = 0.0 if tau < 0 else 1.0
    if tau >= 0:
        return out
    u = inverse_potential(geo)
    cg = ConformalGeometry(geo, u)
    out["flatness"] = cg.flatness()
    out["lee_hessian"] = cg.lee_hessian_residual()
    k = rec["k"]
    eta = sg.eta.value
    w = cg.omega.value
    out["lee_form"] = rel_max(w + 0.5 * k * eta, np.abs(w).max())
    s = math.sqrt(-tau / c)
    # |d tau| = xi(tau) = (n+1)(n+2) k b / 2
    dnorm = math.sqrt(bundle.dtau_norm_sq)
    xi_tau = float(bundle.dtau @ sg.xi.value)
    out["dtau_along_xi"] = max(abs(dnorm - xi_tau), abs(dnorm - c * k * rec["b"] / 2)) / max(1.0, dnorm)
    # (nabla_X eta)(Y) = -(s/2){g - eta eta + 2 eta(J.) eta(J.)}
    neta = geo.nabla(sg.eta, "l").value
    etaJ = eta @ geo.J.value
    target = -0.5 * s * (geo.g.value - np.outer(eta, eta) + 2 * np.outer(etaJ, etaJ))
    out["nabla_eta"] = rel_max(neta - target, np.abs(neta).max())
    return out


def guarded(fn, spec, point, geo=None) -> dict:
    """Run a per-point function, turning a missing scalar distribution into an exclusion."""
    try:
        return fn(spec, point, geo)
    except (DegenerateScalarField, DegenerateDistribution) as exc:
        return {"excluded": str(exc)}


def _run_points(fn, spec, points, threads: int = 1) -> list:
    pts = [np.asarray(p, dtype=float) for p in points]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda p: guarded(fn, spec, p), pts))
    return [guarded(fn, spec, p) for p in pts]


def _collect(report: TheoremReport, names, records, tol, constants=True):
    for name in names:
        chk = report.check(name, tol[name])
        for r in records:
            if name in r:
                chk.add(r[name])
    if not constants:
        return
    for key, label in (("frak_B", "const_frak_B"), ("frak_b0", "const_frak_b0"), ("a_plus_k2", "const_a_plus_k2")):
        vals = [r[key] for r in records if key in r]
        if vals:
            est = ConstantEstimate(key, tol[label], vals)
            report.constants[key] = est
            chk = report.check(label, tol[label], note="|normalised value|")
            for v in vals:
                chk.add(abs(v))
            if est.spread is not None and est.spread >= tol[label]:
                report.reasons.append(f"{key} is not constant (spread {est.spread:.3g})")
    a_k = [r["a_plus_k2"] for r in records if "a_plus_k2" in r]
    if a_k:
        report.class_label = class_label(float(np.mean(a_k)), 1.0)


def summarize_forward(records: list[dict], tol: dict | None = None) -> TheoremReport:
    """Aggregate per-point forward records (ordered by point index)."""
    tol = {**default_tolerances(FORWARD_CHECKS + CONSTANT_CHECKS), **(tol or {})}
    report = TheoremReport("forward")
    for i, r in enumerate(records):
        if "excluded" in r:
            report.excluded.append((i, r["excluded"]))
    if all("vacuous" in r for r in records):
        report.applicable = False
        flat = report.check("flatness", tol["flatness"])
        for r in records:
            flat.add(r["flatness"])
        report.notes.append("NOT APPLICABLE: omega = 0 (constant potential)")
        return report
    if report.excluded:
        report.reasons.append(f"{len(report.excluded)} point(s) without a scalar distribution: "
                              f"{report.excluded[0][1]}")
    _collect(report, FORWARD_CHECKS, records, tol)
    diag = Check("ricci_on_lee_vector_half", tol["ricci_on_lee_vector"], applicable=False,
                 note="coefficient 2(n+2); not gated, contradicts the Ricci identity")
    for r in records:
        if "ricci_on_lee_vector_half" in r:
            diag.add(r["ricci_on_lee_vector_half"])
    report.checks[diag.name] = diag
    if report.checks["lee_hessian"].verdict == "FAIL":
        report.checks["curvature_split"].applicable = False
        report.checks["curvature_split"].note = "skipped: needs the Lee hessian identity"
    if report.checks["flatness"].verdict == "FAIL":
        report.reasons.append("the complex conformal connection is not flat: forward chain is vacuous")
    return report


def certify_forward(spec: ManifoldSpec, points, tol: dict | None = None, threads: int = 1) -> TheoremReport:
    """Flat connection => Bochner-Kähler, B0, a + k^2 = 0 and vanishing constants."""
    if spec.potential_u is None:
        report = TheoremReport("forward", applicable=False)
        report.notes.append("NOT APPLICABLE: spec has no potential_u")
        return report
    return summarize_forward(_run_points(forward_point, spec, points, threads), tol)


def inverse_potential(geo: Geometry) -> TaylorJet:
    """u = -ln(-tau)/2 as a jet, composed from the jets of tau."""
    minus_tau = -geo.tau.truncate(3)
    t0 = float(minus_tau.value)
    if not t0 > 0:
        raise DegenerateDistribution(f"tau = {-t0:.3g} >= 0: -ln(-tau) undefined")
    return minus_tau.compose(function_derivs("ln", t0, minus_tau.order)).scale(-0.5)


def summarize_inverse(records: list[dict], tol: dict | None = None) -> TheoremReport:
    """Aggregate per-point inverse records: hypotheses first, conclusions only if they hold."""
    tol = {**default_tolerances(INVERSE_HYPOTHESES + INVERSE_CONCLUSIONS + CONSTANT_CHECKS), **(tol or {})}
    report = TheoremReport("inverse", potential="u = -ln(-tau)/2 (from tau jets)")
    bad = [(i, r["excluded"]) for i, r in enumerate(records) if "excluded" in r]
    if bad:
        report.excluded = bad
        msg = bad[0][1]
        if "d tau = 0" in msg:
            report.reasons.append("hypothesis failed: dτ = 0: no scalar distribution")
        else:
            report.reasons.append(f"hypothesis failed: {msg}")
        records = [r for r in records if "excluded" not in r]
        if not records:
            return report
    _collect(report, INVERSE_HYPOTHESES, records, tol)
    failed = [h for h in INVERSE_HYPOTHESES + CONSTANT_CHECKS if report.checks[h].verdict == "FAIL"]
    if failed:
        report.reasons.append("hypothesis failed: " + ", ".join(failed))
        return report
    _collect(report, INVERSE_CONCLUSIONS, records, tol, constants=False)
    return report


def certify_inverse(spec: ManifoldSpec, points, tol: dict | None = None, threads: int = 1) -> TheoremReport:
    """Bochner-Kähler + B0 + a + k^2 = 0 + vanishing constants => flat connection."""
    return summarize_inverse(_run_points(inverse_point, spec.without_potential(), points, threads), tol)
