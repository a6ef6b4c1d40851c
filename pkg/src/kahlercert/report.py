"""Residual checks and the certification report."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

PASS, FAIL, NA = "PASS", "FAIL", "N/A"


def _clean(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class Check:
    """Residual statistics of one identity or hypothesis over sample points."""

    name: str
    threshold: float
    values: list[float] = field(default_factory=list)
    note: str = ""
    applicable: bool = True

    def add(self, value: float) -> None:
        self.values.append(float(value))

    @property
    def max(self) -> float | None:
        return max(self.values) if self.values else None

    @property
    def mean(self) -> float | None:
        return float(np.mean(self.values)) if self.values else None

    @property
    def verdict(self) -> str:
        if not self.applicable or not self.values:
            return NA
        vals = np.asarray(self.values)
        if not np.all(np.isfinite(vals)) or vals.max() >= self.threshold:
            return FAIL
        return PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max": _clean(self.max),
            "mean": _clean(self.mean),
            "threshold": self.threshold,
            "count": len(self.values),
            "verdict": self.verdict,
            "note": self.note,
        }


@dataclass
class ConstantEstimate:
    """A quantity that should be point independent (and here, zero)."""

    name: str
    threshold: float
    values: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float | None:
        return float(np.mean(self.values)) if self.values else None

    @property
    def spread(self) -> float | None:
        return float(np.std(self.values)) if self.values else None

    def to_dict(self) -> dict:
        return {"mean": _clean(self.mean), "spread": _clean(self.spread), "threshold": self.threshold,
                "count": len(self.values)}


@dataclass
class CertificationReport:
    spec_name: str
    spec_hash: str
    seed: int
    points: int
    pipeline: str
    checks: list[dict] = field(default_factory=list)
    constants: dict[str, dict] = field(default_factory=dict)
    class_label: str | None = None
    reasons: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    status: str = "ok"  # ok | input_error | numerical_error

    @property
    def overall(self) -> str:
        if self.status != "ok":
            return FAIL
        verdicts = [c["verdict"] for c in self.checks]
        return FAIL if FAIL in verdicts or self.reasons else PASS

    def exit_code(self) -> int:
        if self.status == "input_error":
            return 2
        if self.status == "numerical_error":
            return 3
        return 0 if self.overall == PASS else 1

    def to_dict(self) -> dict:
        return {
            "spec": {"name": self.spec_name, "hash": self.spec_hash},
            "seed": self.seed,
            "points": self.points,
            "pipeline": self.pipeline,
            "checks": self.checks,
            "constants": self.constants,
            "class": self.class_label,
            "reasons": self.reasons,
            "notes": self.notes,
            "tolerances": self.tolerances,
            "status": self.status,
            "overall": self.overall,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CertificationReport":
        return cls(
            spec_name=doc["spec"]["name"],
            spec_hash=doc["spec"]["hash"],
            seed=doc["seed"],
            points=doc["points"],
            pipeline=doc["pipeline"],
            checks=doc["checks"],
            constants=doc["constants"],
            class_label=doc["class"],
            reasons=doc["reasons"],
            notes=doc.get("notes", []),
            tolerances=doc["tolerances"],
            status=doc["status"],
        )


def render_report(report: CertificationReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    glyph = {PASS: "ok  ", FAIL: "FAIL", NA: "n/a "}
    lines = [f"spec {report.spec_name} [{report.spec_hash[:12]}]  pipeline={report.pipeline}  "
             f"points={report.points}  seed={report.seed}"]
    for c in report.checks:
        mx = "-" if c["max"] is None else f"{c['max']:.3e}"
        mean = "-" if c["mean"] is None else f"{c['mean']:.3e}"
        note = f"  ({c['note']})" if c["note"] else ""
        lines.append(f"  [{glyph[c['verdict']]}] {c['name']:<34} max={mx:>10}  mean={mean:>10}  "
                     f"tol={c['threshold']:.0e}{note}")
    for name, block in report.constants.items():
        mean = "-" if block["mean"] is None else f"{block['mean']:.3e}"
        spread = "-" if block["spread"] is None else f"{block['spread']:.3e}"
        lines.append(f"  const {name:<22} mean={mean:>10}  spread={spread:>10}")
    if report.class_label:
        lines.append(f"  class a+k^2: {report.class_label}")
    for r in report.reasons:
        lines.append(f"  reason: {r}")
    for note in report.notes:
        lines.append(f"  note: {note}")
    lines.append(f"overall: {report.overall}")
    return "\n".join(lines) + "\n"
