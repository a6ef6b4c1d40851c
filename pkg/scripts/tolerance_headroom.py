"""Worst residual of every check on the passing models, against its default tolerance.

Prints one row per check with the ratio tolerance / worst, which is the
headroom that justifies the defaults (1e-7 for identities, 1e-6 for constants).

    python scripts/tolerance_headroom.py --points 30
"""
import argparse

from kahlercert.cli import RunConfig, run_certification


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    runs = [
        ("warped_type9", {}, "all"),
        ("warped_type9", {"t0": 1.5}, "all"),
        ("space_form", {"c": -4.0}, "bochner"),
        ("space_form", {"c": 3.0}, "bochner"),
        ("flat", {}, "bochner"),
    ]
    for model, params, pipeline in runs:
        rep = run_certification(RunConfig(model=model, params=params, pipeline=pipeline,
                                          points=args.points, seed=args.seed))
        print(f"\n{model} {params} [{pipeline}] overall={rep.overall}")
        for c in rep.checks:
            if c["max"] is None or c["verdict"] == "N/A":
                continue
            worst = c["max"]
            head = "inf" if worst == 0 else f"{c['threshold'] / worst:.1e}"
            print(f"  {c['name']:<40} worst={worst:.2e}  tol={c['threshold']:.0e}  headroom={head}")


if __name__ == "__main__":
    main()
