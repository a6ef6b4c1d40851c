import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kahlercert.dsl import (
    BinOp,
    Const,
    DomainViolation,
    EvaluationDomainError,
    ExprSyntaxError,
    NonConstantExponentError,
    Pow,
    SingularMetricError,
    SpecError,
    UnknownIdentifierError,
    Var,
    parse_expression,
    parse_manifold_spec,
    serialize_spec,
    spec_from_dict,
    to_text,
    validate_spec,
    variables,
)
from kahlercert.exact_diff import evaluate
from kahlercert.models import flat, sample_points, warped_type9

XY = ("x", "y")


def identity_doc(dim=6, **overrides):
    coords = [f"c{i}" for i in range(dim)]
    J = [["0"] * dim for _ in range(dim)]
    for a in range(dim // 2):
        J[2 * a + 1][2 * a] = "1"
        J[2 * a][2 * a + 1] = "-1"
    doc = {
        "name": "id",
        "dim": dim,
        "coordinates": coords,
        "params": {},
        "metric": [["1" if i == j else "0" for j in range(dim)] for i in range(dim)],
        "complex_structure": J,
        "potential_u": None,
        "domain": {c: [-1, 1] for c in coords},
    }
    doc.update(overrides)
    return doc


# -- parsing -----------------------------------------------------------------


def test_parse_tree_shape():
    node = parse_expression("x^2 + y", XY)
    assert node == BinOp("+", Pow(Var(0, "x"), 2.0), Var(1, "y"))


def test_generating_function_parses_with_fractional_exponent():
    node = parse_expression("(1 - 3*(t - t0))^(-1/3)", ("t",), {"t0": 0.0})
    assert evaluate(node, np.array([0.0])) == 1.0
    assert evaluate(node, np.array([-1 / 3])) == pytest.approx(2 ** (-1 / 3), rel=1e-15)


def test_signed_number_exponent():
    assert evaluate(parse_expression("x^-2", XY), np.array([2.0, 0.0])) == 0.25


@pytest.mark.parametrize("text, offset", [("foo(x)", 0), ("x + bar", 4), ("2*q", 2)])
def test_unknown_identifier_is_positioned(text, offset):
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expression(text, XY)
    assert info.value.offset == offset


@pytest.mark.parametrize("text", ["x^y", "x^(1+y)", "2^sin(x)"])
def test_non_constant_exponent(text):
    with pytest.raises(NonConstantExponentError):
        parse_expression(text, XY)


@pytest.mark.parametrize("text", ["", "   ", "(x", "x)", "x +", "x $ y", "sin x", "3..2", "*x"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse_expression(text, XY)


def test_power_binds_tighter_than_unary_minus():
    assert evaluate(parse_expression("-x^2", XY), np.array([3.0, 0.0])) == -9.0


def test_params_fold_to_constants():
    node = parse_expression("a*b + 1", XY, {"a": 2.0, "b": 3.0})
    assert node == Const(7.0)
    assert variables(parse_expression("a*x", XY, {"a": 2.0})) == {0}


@given(st.text(alphabet="xy0123456789.+-*/^() sincoexplnqrtah", max_size=25))
def test_parser_is_total(text):
    # either a tree or a positioned error, nothing else
    try:
        parse_expression(text, XY)
    except ExprSyntaxError as exc:
        assert 0 <= exc.offset <= len(text)


leaf = st.one_of(
    st.sampled_from(["x", "y"]),
    st.floats(-5, 5, allow_nan=False).map(lambda v: repr(round(v, 3))),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "tanh", "exp"]), children).map(lambda t: f"{t[0]}({t[1]} / 4)"),
        st.tuples(children, st.sampled_from(["2", "3", "-1", "1/2"])).map(lambda t: f"(1 + ({t[0]})^2)^({t[1]})"),
        children.map(lambda c: f"-({c})"),
    )


expressions = st.recursive(leaf, _combine, max_leaves=8)


@given(expressions, st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_text_round_trip_is_exact(text, point):
    node = parse_expression(text, XY)
    again = parse_expression(to_text(node), XY)
    p = np.array(point)
    try:
        a = evaluate(node, p)
    except (EvaluationDomainError, OverflowError):
        return
    b = evaluate(again, p)
    assert a == b or (math.isnan(a) and math.isnan(b))


# -- evaluation --------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(parse_expression("x^2 + y", XY), np.array([3.0, 1.0])) == 10.0
    assert evaluate(parse_expression("ln(1)", XY), np.array([0.3, 0.1])) == 0.0


@pytest.mark.parametrize("text", ["ln(x)", "sqrt(x - 1)", "1/(x - x)", "x^(1/2)"])
def test_domain_errors_name_the_subexpression(text):
    with pytest.raises(EvaluationDomainError) as info:
        evaluate(parse_expression(text, XY), np.array([-0.5, 0.0]))
    assert info.value.subexpr is not None


# -- spec documents ------------------------------------------------------------


def test_identity_document():
    spec = spec_from_dict(identity_doc())
    assert spec.dim == 6 and spec.n == 3


def test_odd_dimension_rejected():
    doc = identity_doc()
    doc["dim"] = 5
    doc["coordinates"] = doc["coordinates"][:5]
    with pytest.raises(SpecError, match="odd dimension"):
        spec_from_dict(doc)


def test_dimension_mismatch_rejected():
    doc = identity_doc()
    doc["coordinates"] = doc["coordinates"][:4]
    with pytest.raises(SpecError, match="mismatch"):
        spec_from_dict(doc)


def test_bad_entry_is_located():
    doc = identity_doc()
    doc["metric"][2][3] = "c1 +"
    with pytest.raises(SpecError, match=r"metric\[2\]\[3\]"):
        spec_from_dict(doc)


def test_invalid_json():
    with pytest.raises(SpecError, match="invalid JSON"):
        parse_manifold_spec("{not json")


def test_warped_document_round_trips():
    spec = warped_type9()
    again = parse_manifold_spec(serialize_spec(spec))
    assert again == spec
    assert parse_manifold_spec(serialize_spec(again)) == spec


def test_round_trip_keeps_evaluations(warped):
    again = parse_manifold_spec(serialize_spec(warped))
    for p in sample_points(warped, 100, 3):
        for i in range(6):
            for j in range(6):
                assert evaluate(again.metric[i][j], p) == evaluate(warped.metric[i][j], p)


def test_homothety_scales_metric_only(warped):
    scaled = warped.scaled(2.0)
    p = sample_points(warped, 1, 0)[0]
    assert evaluate(scaled.metric[0][0], p) == pytest.approx(2 * evaluate(warped.metric[0][0], p))
    assert scaled.complex_structure == warped.complex_structure
    with pytest.raises(SpecError):
        warped.scaled(-1.0)


# -- validation ----------------------------------------------------------------


def test_flat_validates_with_zero_residuals(flat3):
    report = validate_spec(flat3, sample_points(flat3, 10, 0))
    assert report.passed
    assert all(r.worst == 0.0 for r in report.results.values())


def test_identity_complex_structure_fails():
    doc = identity_doc()
    doc["complex_structure"] = [["1" if i == j else "0" for j in range(6)] for i in range(6)]
    report = validate_spec(spec_from_dict(doc), [np.zeros(6)])
    assert not report.results["complex_structure"].passed
    assert not report.passed


def test_warped_validates(warped):
    report = validate_spec(warped, sample_points(warped, 50, 1))
    assert report.passed
    assert max(r.worst for k, r in report.results.items() if k != "positive_definite") < 1e-10


def test_indefinite_metric_fails_without_raising():
    doc = identity_doc()
    doc["metric"][0][0] = "c0"  # negative on half of the box
    report = validate_spec(spec_from_dict(doc), [np.full(6, -0.5), np.full(6, 0.5)])
    assert not report.results["positive_definite"].passed
    assert report.results["positive_definite"].worst_point[0] == -0.5


def test_singular_metric_raises():
    doc = identity_doc()
    doc["metric"][0][0] = "1e-14"
    doc["metric"][1][1] = "1e-14"
    with pytest.raises(SingularMetricError):
        validate_spec(spec_from_dict(doc), [np.zeros(6)])


def test_probe_outside_domain():
    with pytest.raises(DomainViolation):
        validate_spec(flat(), [np.full(6, 2.0)])


def test_asymmetric_entries_detected():
    doc = identity_doc()
    doc["metric"][0][2] = "0.1"
    report = validate_spec(spec_from_dict(doc), [np.zeros(6)])
    assert not report.results["symmetric"].passed


def test_numeric_json_entries_accepted():
    doc = identity_doc()
    doc["metric"] = [[1.0 if i == j else 0 for j in range(6)] for i in range(6)]
    assert spec_from_dict(json.loads(json.dumps(doc))).metric[0][0] == Const(1.0)
