"""End-to-end certification of the warped model in both directions.

Equivalent to ``kahlercert certify --model warped_type9 --pipeline all``, plus
a homothetic copy (metric times a factor) to show that the verdict does not
depend on the scale.

    python scripts/certify_warped.py --points 100 --seed 7 --scale 2
"""
import argparse

from kahlercert.distribution import certify_forward, certify_inverse
from kahlercert.cli import RunConfig, run_certification
from kahlercert.models import sample_points, warped_type9
from kahlercert.report import render_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--scale", type=float, default=2.0)
    args = ap.parse_args()

    report = run_certification(RunConfig(model="warped_type9", pipeline="all", points=args.points, seed=args.seed))
    print(render_report(report, "text"))

    scaled = warped_type9().scaled(args.scale)
    pts = sample_points(scaled, min(args.points, 20), args.seed)
    fwd = certify_forward(scaled, pts)
    inv = certify_inverse(scaled, pts)
    print(f"homothety x{args.scale:g}: forward {fwd.verdict} (class {fwd.class_label}), inverse {inv.verdict}")


if __name__ == "__main__":
    main()
