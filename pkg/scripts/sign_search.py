"""Decide the orientation of J d/dt in the warped model.

The complex structure on the normal plane is fixed only up to the sign
sigma in J(p^-2 d/dt) = sigma p^-3 xi0.  Build both, measure the Kähler
residuals and report which one is parallel.

    python scripts/sign_search.py --points 50
"""
import argparse

from kahlercert.levi_civita import kahler_residuals
from kahlercert.models import sample_points, warped_type9


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--t0", type=float, default=0.0)
    args = ap.parse_args()

    pts = sample_points(warped_type9(t0=args.t0), args.points, args.seed)
    passing = []
    for sigma in (1.0, -1.0):
        res = kahler_residuals(warped_type9(t0=args.t0, sigma=sigma), pts)
        ok = res.passed()
        print(f"sigma={sigma:+.0f}  nabla_J={res.nabla_J_max:.3e}  hermitian={res.hermitian_max:.3e}  "
              f"dOmega={res.dOmega_max:.3e}  {'PASS' if ok else 'FAIL'}")
        if ok:
            passing.append(sigma)
    print(f"passing sign(s): {passing}")


if __name__ == "__main__":
    main()
