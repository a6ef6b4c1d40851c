import math

import numpy as np
import pytest

from kahlercert.distribution import (
    DegenerateScalarField,
    b0_residuals,
    certify_forward,
    certify_inverse,
    class_label,
    fit_pi_phi,
    geometric_functions,
    pi_phi_decomposition_residual,
    pi_tensor,
    scalar_frame,
)
from kahlercert.levi_civita import curvature_bundle
from kahlercert.models import flat, sample_points, space_form


def test_constants_for_tau_minus_twenty(warped):
    # n = 3, tau = -20: a = tau/20 = -1, b = tau/10 = -2 when b0 = 0
    b = curvature_bundle(warped, sample_points(warped, 1, 0)[0], order=3)
    fake = type(b)(**{**b.__dict__, "tau": -20.0})
    gf = geometric_functions(fake, frak_b0=0.0, k=-1.0)
    assert gf["a"] == pytest.approx(-1.0) and gf["b"] == pytest.approx(-2.0)
    assert gf["a_plus_k2"] == pytest.approx(0.0, abs=1e-15)
    assert gf["frak_b0_check"] == pytest.approx(0.0, abs=1e-15)


def test_class_label():
    assert class_label(0.0, 1.0) == "zero"
    assert class_label(0.3, 1.0) == "positive"
    assert class_label(-0.3, 1.0) == "negative"
    assert class_label(1e-3, 1e4) == "zero"


@pytest.mark.parametrize("c", [-4.0, 3.0])
def test_space_form_curvature_is_a_multiple_of_pi(c):
    spec = space_form(c)
    for p in sample_points(spec, 3, 0):
        fit = pi_phi_decomposition_residual(spec, p, pi_only=True)
        assert fit["a"] == pytest.approx(c, rel=1e-10)
        assert fit["residual"] < 1e-10


def test_pi_fit_recovers_exact_multiple():
    g = np.diag([1.0, 1.0, 2.0, 2.0])
    J = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
    pi = pi_tensor(g, J)
    coef, res = fit_pi_phi(2.5 * pi, pi, None)
    assert coef[0] == pytest.approx(2.5) and res < 1e-14


def test_space_form_has_no_scalar_distribution(hyperbolic):
    b = curvature_bundle(hyperbolic, sample_points(hyperbolic, 1, 0)[0], order=3)
    with pytest.raises(DegenerateScalarField, match="d tau = 0"):
        scalar_frame(b)


def test_scalar_frame_is_orthonormal(warped):
    for p in sample_points(warped, 5, 1):
        b = curvature_bundle(warped, p, order=3)
        xi, eta, Jxi = scalar_frame(b)
        fr = b.frame
        assert fr.norm_sq(xi) == pytest.approx(1.0, rel=1e-12)
        assert fr.norm_sq(Jxi) == pytest.approx(1.0, rel=1e-12)
        assert abs(fr.inner(xi, Jxi)) < 1e-12
        assert float(eta @ xi) == pytest.approx(1.0, rel=1e-12)
        assert abs(float(eta @ Jxi)) < 1e-12


def test_warped_distribution_is_b0(warped):
    for p in sample_points(warped, 3, 2):
        rec = b0_residuals(warped, p)
        assert rec["ansatz"] < 1e-9 and rec["dk_collinear"] < 1e-9 and rec["p_star_formula"] < 1e-9
        tau = curvature_bundle(warped, p, order=3).tau
        # consistency: k^2 = -a with a = tau/20 and k < 0
        assert rec["k"] == pytest.approx(-math.sqrt(-tau / 20), rel=1e-10)
        assert rec["p_star"] == pytest.approx(1.5 * math.sqrt(-tau / 20), rel=1e-10)


def test_warped_curvature_decomposition(warped):
    for p in sample_points(warped, 3, 3):
        tau = curvature_bundle(warped, p, order=3).tau
        fit = pi_phi_decomposition_residual(warped, p)
        assert fit["residual"] < 1e-10
        assert fit["a"] == pytest.approx(tau / 20, rel=1e-10)
        assert fit["b"] == pytest.approx(tau / 10, rel=1e-10)


def test_forward_passes_on_warped(warped):
    rep = certify_forward(warped, sample_points(warped, 3, 0))
    assert rep.verdict == "PASS", rep.reasons
    assert rep.class_label == "zero"
    assert rep.checks["ricci_on_lee_vector_half"].verdict == "N/A"


def test_forward_controls(flat3, hyperbolic):
    pts = sample_points(flat3, 2, 0)
    rep = certify_forward(flat(lee=1.0), pts)
    assert rep.verdict == "FAIL"
    assert rep.checks["lee_hessian"].verdict == "FAIL"
    assert rep.checks["flatness"].verdict == "FAIL"
    assert rep.checks["curvature_split"].verdict == "N/A"
    vac = certify_forward(flat3, pts)
    assert vac.verdict == "N/A" and any("omega = 0" in n for n in vac.notes)
    none = certify_forward(hyperbolic, sample_points(hyperbolic, 1, 0))
    assert none.verdict == "N/A" and any("no potential_u" in n for n in none.notes)


def test_inverse_passes_on_warped(warped):
    rep = certify_inverse(warped, sample_points(warped, 3, 5))
    assert rep.verdict == "PASS", rep.reasons
    assert rep.class_label == "zero"
    assert rep.checks["flatness"].max < 1e-9


def test_inverse_controls(hyperbolic, perturbed):
    rep = certify_inverse(hyperbolic, sample_points(hyperbolic, 2, 0))
    assert rep.verdict == "FAIL"
    assert any("dτ = 0" in r for r in rep.reasons)
    rep = certify_inverse(perturbed, sample_points(perturbed, 2, 0))
    assert rep.verdict == "FAIL"
    assert any(r.startswith("hypothesis failed") for r in rep.reasons)
    # conclusions are never reported for failed hypotheses
    assert "flatness" not in rep.checks


def test_homothety_preserves_both_directions(warped):
    scaled = warped.scaled(2.0)
    pts = sample_points(scaled, 2, 9)
    assert certify_forward(scaled, pts).verdict == "PASS"
    assert certify_inverse(scaled, pts).verdict == "PASS"
