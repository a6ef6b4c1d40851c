"""Command-line driver.

    kahlercert certify --model warped_type9 --pipeline all --points 100 --seed 7
    kahlercert certify --file my_spec.json --pipeline bochner --format json --out report.json
    kahlercert list-models
    kahlercert emit-spec --model space_form --param c=-4 --out space_form.json

Exit codes: 0 every enabled check passed, 1 a certification verdict failed,
2 input or parse error, 3 numerical breakdown (singular metric, domain
violation, ...).  Per-point work runs on ``CERTIFY_THREADS`` threads; the
reduction is ordered by point index so the output never depends on it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bochner import bochner_data
from .distribution import (
    CONSTANT_CHECKS,
    FORWARD_CHECKS,
    INVERSE_CONCLUSIONS,
    INVERSE_HYPOTHESES,
    TheoremReport,
    default_tolerances,
    forward_point,
    guarded,
    inverse_point,
    summarize_forward,
    summarize_inverse,
)
from .dsl import (
    DomainViolation,
    EvaluationDomainError,
    ManifoldSpec,
    SingularMetricError,
    SpecError,
    parse_manifold_spec,
    serialize_spec,
    spec_to_dict,
    validate_spec,
)
from .exact_diff import DerivativeOrderError
from .levi_civita import Geometry, bundle_from_geometry, kahler_residuals_at
from .models import MODELS, builtin_model, sample_points
from .report import Check, CertificationReport, ConstantEstimate, render_report
from .tensors import FrameInvariantError

PIPELINES = ("validate", "bochner", "theorem-forward", "theorem-inverse", "all")
STAGES = {
    "validate": ("validate", "kahler"),
    "bochner": ("bochner",),
    "theorem-forward": ("forward",),
    "theorem-inverse": ("inverse",),
    "all": ("validate", "kahler", "bochner", "forward", "inverse"),
}
VALIDATE_CHECKS = {"symmetric": 1e-12, "positive_definite": 0.5, "complex_structure": 1e-10, "hermitian": 1e-10}
KAHLER_CHECKS = {"nabla_J": 1e-8, "hermitian": 1e-8, "dOmega": 1e-8}
BOCHNER_CHECKS = ("flat", "nabla_rho", "ricci_trace", "constant")
NUMERICAL_ERRORS = (SingularMetricError, DomainViolation, EvaluationDomainError, FrameInvariantError,
                    DerivativeOrderError, np.linalg.LinAlgError, ZeroDivisionError, OverflowError,
                    FloatingPointError)


class InputError(Exception):
    """Unresolvable source, bad flag value or malformed spec."""


class NumericalBreakdown(Exception):
    def __init__(self, index: int, point, cause: Exception):
        coords = ", ".join(f"{float(x):.6g}" for x in point)
        super().__init__(f"numerical breakdown at point {index} ({coords}): {type(cause).__name__}: {cause}")


def tolerance_table(stages) -> dict[str, float]:
    """Default tolerance of every check a pipeline can emit, keyed 'stage.check'."""
    table: dict[str, float] = {}
    if "validate" in stages:
        table.update({f"validate.{k}": v for k, v in VALIDATE_CHECKS.items()})
    if "kahler" in stages:
        table.update({f"kahler.{k}": v for k, v in KAHLER_CHECKS.items()})
    if "bochner" in stages:
        table.update({f"bochner.{k}": (1e-6 if k == "constant" else 1e-7) for k in BOCHNER_CHECKS})
    if "forward" in stages:
        table.update({f"forward.{k}": v for k, v in default_tolerances(FORWARD_CHECKS + CONSTANT_CHECKS).items()})
    if "inverse" in stages:
        names = INVERSE_HYPOTHESES + INVERSE_CONCLUSIONS + CONSTANT_CHECKS
        table.update({f"inverse.{k}": v for k, v in default_tolerances(names).items()})
    return table


@dataclass
class RunConfig:
    model: str | None = None
    file: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    pipeline: str = "all"
    points: int = 20
    seed: int = 0
    tol: dict[str, float] = field(default_factory=dict)
    threads: int = 1


def load_spec(config: RunConfig) -> ManifoldSpec:
    if (config.model is None) == (config.file is None):
        raise InputError("give exactly one of --model or --file")
    try:
        if config.model is not None:
            return builtin_model(config.model, config.params)
        if config.params:
            raise InputError("--param applies to built-in models only")
        return parse_manifold_spec(Path(config.file).read_text())
    except (SpecError, OSError, TypeError) as exc:
        raise InputError(str(exc)) from exc


def spec_hash(spec: ManifoldSpec) -> str:
    canonical = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _geometry_order(stages) -> int:
    if "forward" in stages or "inverse" in stages:
        return 5
    return 4 if "bochner" in stages else 1


def point_records(spec: ManifoldSpec, point, stages) -> dict[str, dict]:
    """Every enabled stage at one point, sharing a single metric expansion."""
    out: dict[str, dict] = {}
    if "validate" in stages:
        vr = validate_spec(spec, [point])
        out["validate"] = {k: r.worst for k, r in vr.results.items()}
    geo = Geometry(spec, point, order=_geometry_order(stages))
    if "kahler" in stages:
        kr = kahler_residuals_at(geo)
        out["kahler"] = {"nabla_J": kr.nabla_J_max, "hermitian": kr.hermitian_max, "dOmega": kr.dOmega_max}
    if "bochner" in stages:
        bd = bochner_data(bundle_from_geometry(geo))
        out["bochner"] = {"flat": bd.bochner_flat_residual, "nabla_rho": bd.nabla_rho_residual,
                          "ricci_trace": bd.trace_residual, "frak_B": bd.frak_B}
    if "forward" in stages and spec.potential_u is not None:
        out["forward"] = guarded(forward_point, spec, point, geo)
    if "inverse" in stages:
        out["inverse"] = guarded(inverse_point, spec.without_potential(), point, geo)
    return out


def _theorem_blocks(prefix: str, tr: TheoremReport, tol: dict, report: CertificationReport) -> None:
    for name, chk in tr.checks.items():
        key = f"{prefix}.{name}"
        report.checks.append({**chk.to_dict(), "name": key})
    for name, est in tr.constants.items():
        report.constants.setdefault(name, est.to_dict())
    if tr.class_label and report.class_label is None:
        report.class_label = tr.class_label
    report.reasons.extend(f"{prefix}: {r}" for r in tr.reasons)
    report.notes.extend(f"{prefix}: {n}" for n in tr.notes)


def assemble(spec: ManifoldSpec, records: list[dict], stages, tol: dict, report: CertificationReport) -> None:
    """Ordered reduction of per-point records into report blocks."""

    def simple(stage: str, names):
        for name in names:
            key = f"{stage}.{name}"
            chk = Check(key, tol[key])
            for r in records:
                chk.add(r[stage][name])
            report.checks.append(chk.to_dict())

    if "validate" in stages:
        simple("validate", VALIDATE_CHECKS)
    if "kahler" in stages:
        simple("kahler", KAHLER_CHECKS)
    if "bochner" in stages:
        simple("bochner", ("flat", "nabla_rho", "ricci_trace"))
        vals = [r["bochner"]["frak_B"] for r in records]
        mean = float(np.mean(vals))
        key = "bochner.constant"
        chk = Check(key, tol[key], note="|B_const - mean| / max(1, |mean|)")
        for v in vals:
            chk.add(abs(v - mean) / max(1.0, abs(mean)))
        report.checks.append(chk.to_dict())
        report.constants["bochner_constant"] = ConstantEstimate("bochner_constant", tol[key], vals).to_dict()
    if "forward" in stages:
        sub = {k[len("forward."):]: v for k, v in tol.items() if k.startswith("forward.")}
        if spec.potential_u is None:
            report.notes.append("forward: NOT APPLICABLE: spec has no potential_u")
        else:
            _theorem_blocks("forward", summarize_forward([r["forward"] for r in records], sub), tol, report)
    if "inverse" in stages:
        sub = {k[len("inverse."):]: v for k, v in tol.items() if k.startswith("inverse.")}
        _theorem_blocks("inverse", summarize_inverse([r["inverse"] for r in records], sub), tol, report)


def run_certification(config: RunConfig) -> CertificationReport:
    report = CertificationReport(spec_name="?", spec_hash="", seed=config.seed, points=config.points,
                                 pipeline=config.pipeline)
    try:
        if config.pipeline not in PIPELINES:
            raise InputError(f"unknown pipeline {config.pipeline!r}; choose from {PIPELINES}")
        if config.points < 1:
            raise InputError("--points must be >= 1")
        spec = load_spec(config)
        report.spec_name, report.spec_hash = spec.name, spec_hash(spec)
        stages = STAGES[config.pipeline]
        tol = tolerance_table(stages)
        unknown = sorted(set(config.tol) - set(tol))
        if unknown:
            raise InputError(f"unknown check(s) for --tol: {', '.join(unknown)}")
        tol.update(config.tol)
        report.tolerances = dict(sorted(tol.items()))
        try:
            points = sample_points(spec, config.points, config.seed)
        except SpecError as exc:
            raise InputError(str(exc)) from exc
    except InputError as exc:
        report.status = "input_error"
        report.reasons.append(f"input error: {exc}")
        return report

    def work(i):
        try:
            return point_records(spec, points[i], stages)
        except NUMERICAL_ERRORS as exc:
            raise NumericalBreakdown(i, points[i], exc) from exc

    try:
        if config.threads > 1:
            with ThreadPoolExecutor(config.threads) as ex:
                records = list(ex.map(work, range(len(points))))
        else:
            records = [work(i) for i in range(len(points))]
    except NumericalBreakdown as exc:
        report.status = "numerical_error"
        report.reasons.append(str(exc))
        return report
    assemble(spec, records, stages, tol, report)
    return report


# --------------------------------------------------------------------------
# argument handling


def _key_value(text: str, flag: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    try:
        if not sep or not key:
            raise ValueError
        number = float(value)
    except ValueError:
        raise InputError(f"{flag} expects key=number, got {text!r}") from None
    if not math.isfinite(number):
        raise InputError(f"{flag} value must be finite, got {text!r}")
    return key.strip(), number


def _threads() -> int:
    raw = os.environ.get("CERTIFY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"CERTIFY_THREADS must be an integer, got {raw!r}") from None


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kahlercert", description="Numerical certification of flat complex "
                                 "conformal connections on Kähler manifolds.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("certify", help="run certification pipelines over sampled points")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", choices=sorted(MODELS))
    src.add_argument("--file", help="manifold spec JSON")
    c.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    c.add_argument("--pipeline", choices=PIPELINES, default="all")
    c.add_argument("--points", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", action="append", default=[], metavar="CHECK=VALUE")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--out")
    sub.add_parser("list-models", help="describe the built-in models and their parameters")
    e = sub.add_parser("emit-spec", help="write the spec JSON of a built-in model")
    e.add_argument("--model", required=True, choices=sorted(MODELS))
    e.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    e.add_argument("--out")
    return ap


def _list_models() -> str:
    lines = []
    for name, info in MODELS.items():
        lines.append(f"{name}: {info.summary}")
        for key, (typ, default, doc) in info.params.items():
            lines.append(f"    {key} ({typ.__name__}, default {default}): {doc}")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        if args.command == "list-models":
            _write(_list_models(), None)
            return 0
        params = dict(_key_value(p, "--param") for p in args.param)
        if args.command == "emit-spec":
            try:
                spec = builtin_model(args.model, params)
            except SpecError as exc:
                raise InputError(str(exc)) from exc
            _write(serialize_spec(spec) + "\n", args.out)
            return 0
        config = RunConfig(model=args.model, file=args.file, params=params, pipeline=args.pipeline,
                           points=args.points, seed=args.seed,
                           tol=dict(_key_value(t, "--tol") for t in args.tol), threads=_threads())
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_certification(config)
    _write(render_report(report, args.format), args.out)
    if report.status != "ok":
        print(f"error: {report.reasons[-1]}", file=sys.stderr)
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
