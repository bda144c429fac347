"""Generate the CSV inputs consumed by the plotting frontend tests.

Produces potential-flow time series for (k, nu) in {2,3} x {1/500, 1/2000}
and a steady convergence study, written to frontend/tests/fixtures/.
"""

import argparse
import os

from hdgflow import cases


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    default_out = os.path.join(os.path.dirname(__file__), "..",
                               "frontend", "tests", "fixtures")
    ap.add_argument("--out", default=default_out)
    ap.add_argument("--level", type=int, default=16,
                    help="mesh level for the time-series runs")
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    for k in (2, 3):
        for nu_inv in (500, 2000):
            case = cases.potential_flow_case(nu=1.0 / nu_inv)
            path = os.path.join(args.out,
                                f"potential_flow_k{k}_nu{nu_inv}.csv")
            cases.run_transient(case, k=k, level=args.level, dt=0.01,
                                t_end=0.01 * args.steps, theta=0.5,
                                initial="exact", out_csv=path)
            print("wrote", path)

    path = os.path.join(args.out, "kovasznay_k2.csv")
    cases.run_convergence(cases.kovasznay_case(), k=2, levels=[4, 8, 16],
                          out_csv=path)
    print("wrote", path)


if __name__ == "__main__":
    main()
