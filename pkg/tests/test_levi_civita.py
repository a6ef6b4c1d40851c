import numpy as np
import pytest

from kahlercert.dsl import DomainViolation, parse_expression
from kahlercert.exact_diff import evaluate
from kahlercert.levi_civita import (
    Geometry,
    christoffel,
    covariant_derivative_of_field,
    curvature_bundle,
    kahler_residuals,
)
from kahlercert.models import sample_points, space_form, warped_type9
from oracles import christoffel_fd, metric_at, riemann_fd, space_form_potential_metric


@pytest.mark.parametrize("model", ["space_form", "warped_type9", "perturbed_flat"])
def test_christoffel_against_finite_differences(all_models, model):
    spec = all_models[model]
    for p in sample_points(spec, 3, 5):
        exact = christoffel(spec, p)
        fd = christoffel_fd(spec, p)
        assert np.abs(exact - fd).max() < 1e-7 * max(1.0, np.abs(exact).max())


@pytest.mark.parametrize("model", ["space_form", "warped_type9", "perturbed_flat"])
def test_riemann_against_finite_differences(all_models, model):
    spec = all_models[model]
    p = sample_points(spec, 1, 8)[0]
    R = curvature_bundle(spec, p, order=3).Riemann
    assert np.abs(R - riemann_fd(spec, p)).max() < 1e-4 * max(1.0, np.abs(R).max())


def test_curvature_symmetries(all_models):
    for name, spec in all_models.items():
        for p in sample_points(spec, 3, 1):
            b = curvature_bundle(spec, p, order=3)
            res = b.invariant_residuals()
            assert max(res.values()) < 1e-10, (name, res)
            R = b.Riemann_lower
            scale = max(1.0, np.abs(R).max())
            bianchi = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
            assert np.abs(bianchi).max() < 1e-10 * scale, name
            # Kähler: R(X,Y,JZ,JW) = R(X,Y,Z,W)
            J = b.frame.J
            RJ = np.einsum("lkij,la,kb->abij", R, J, J)
            assert np.abs(RJ - R).max() < 1e-10 * scale, name


def test_flat_space_has_no_curvature(flat3):
    b = curvature_bundle(flat3, np.zeros(6))
    assert np.abs(b.Riemann).max() == 0.0 and b.tau == 0.0


def test_hyperbolic_space_form_is_einstein(hyperbolic):
    # holomorphic curvature -4 in complex dimension 3: rho = -8 g, tau = -48
    for p in sample_points(hyperbolic, 4, 2):
        b = curvature_bundle(hyperbolic, p)
        np.testing.assert_allclose(b.Ricci, -8 * b.frame.g, atol=1e-10)
        assert b.tau == pytest.approx(-48.0, rel=1e-12)
        assert b.dtau_norm_sq < 1e-20
        assert b.laplace_tau == pytest.approx(0.0, abs=1e-9)


def test_positive_space_form():
    spec = space_form(3.0)
    b = curvature_bundle(spec, sample_points(spec, 1, 0)[0])
    np.testing.assert_allclose(b.Ricci, 6 * b.frame.g, atol=1e-10)
    assert b.tau == pytest.approx(36.0, rel=1e-12)


@pytest.mark.parametrize("c", [-4.0, 3.0])
def test_space_form_metric_comes_from_its_potential(c):
    spec = space_form(c)
    for p in sample_points(spec, 3, 9):
        np.testing.assert_allclose(metric_at(spec, p), space_form_potential_metric(c, 3, p), atol=1e-6)


def test_metric_is_parallel(warped):
    p = sample_points(warped, 1, 3)[0]
    ng = covariant_derivative_of_field(warped, p, warped.metric, "ll")
    assert np.abs(ng).max() < 1e-12


def test_leibniz_rule(warped):
    coords = warped.coordinates
    p = sample_points(warped, 1, 6)[0]
    f = parse_expression("t^2 + x1*z", coords)
    X = [parse_expression(e, coords) for e in ["1", "y1", "0", "t", "0", "x2*z"]]
    fX = [parse_expression(f"(t^2 + x1*z)*({e})", coords) for e in ["1", "y1", "0", "t", "0", "x2*z"]]
    nX = covariant_derivative_of_field(warped, p, X, "u")
    nfX = covariant_derivative_of_field(warped, p, fX, "u")
    df = np.array([2 * p[0], p[5], 0, 0, 0, p[1]])
    fval = evaluate(f, p)
    Xval = np.array([evaluate(e, p) for e in X])
    np.testing.assert_allclose(nfX, np.outer(df, Xval) + fval * nX, atol=1e-12)


def test_warped_scalar_curvature(warped):
    # tau is negative and |d tau|^2 = -tau^3 / ((n+1)(n+2)) on the whole chart
    for p in sample_points(warped, 10, 0):
        b = curvature_bundle(warped, p, order=3)
        assert b.tau < 0
        assert b.dtau_norm_sq == pytest.approx(-b.tau ** 3 / 20, rel=1e-10)


def test_warped_scalar_curvature_matches_finite_differences(warped):
    p = sample_points(warped, 1, 12)[0]
    R = riemann_fd(warped, p)
    g_inv = np.linalg.inv(metric_at(warped, p))
    tau_fd = np.einsum("jk,ikij->", g_inv, R)
    assert curvature_bundle(warped, p, order=3).tau == pytest.approx(tau_fd, rel=1e-5)


def test_kahler_residuals_select_the_orientation():
    pts = sample_points(warped_type9(), 5, 0)
    assert kahler_residuals(warped_type9(sigma=-1.0), pts).passed()
    wrong = kahler_residuals(warped_type9(sigma=1.0), pts)
    assert not wrong.passed()
    assert wrong.nabla_J_max > 1e-3


def test_kahler_residuals_on_controls(all_models):
    for spec in all_models.values():
        assert kahler_residuals(spec, sample_points(spec, 3, 2)).passed()


def test_geometry_rejects_points(warped):
    with pytest.raises(DomainViolation):
        Geometry(warped, np.array([1.0, 0, 0, 0, 0, 0]))
    with pytest.raises(ValueError):
        Geometry(warped, np.zeros(4))
