"""Run the full benchmark set and write the CSV tables to results/.

Covers the steady convergence studies (Kovasznay, Coriolis-forced,
polynomial manufactured solution), the transient potential-flow
conservation audit, and the energy-decay run. The cylinder channel run is
long; enable it with --cylinder.
"""

import argparse
import os

from hdgflow import cases


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--cylinder", action="store_true",
                    help="include the 1000-step cylinder channel run")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    def path(name):
        return os.path.join(args.out, name)

    cases.run_convergence(cases.kovasznay_case(), k=2, levels=[4, 8, 16, 32],
                          out_csv=path("kovasznay_k2.csv"))
    cases.run_convergence(cases.kovasznay_case(), k=3, levels=[4, 8, 16],
                          out_csv=path("kovasznay_k3.csv"))
    for nu, tag in ((1.0, "1"), (1e-3, "1e-3")):
        cases.run_convergence(cases.coriolis_case(nu), k=2,
                              levels=[4, 8, 16, 32],
                              out_csv=path(f"coriolis_k2_nu{tag}.csv"))
        cases.run_convergence(cases.polynomial_case(nu), k=3, levels=[8, 16, 32],
                              out_csv=path(f"manufactured_k3_nu{tag}.csv"))
        cases.run_convergence(cases.polynomial_case(nu), k=3, levels=[8],
                              facet_pressure_degree=2,
                              out_csv=path(f"manufactured_variant_nu{tag}.csv"))
    cases.run_transient(cases.potential_flow_case(), k=2, level=32, dt=0.01,
                        t_end=2.0, theta=0.5, initial="exact",
                        out_csv=path("potential_flow_k2.csv"))
    for theta in (0.5, 1.0):
        cases.run_transient(cases.decay_case(), k=2, level=8, dt=0.01,
                            t_end=0.5, theta=theta, initial="exact",
                            out_csv=path(f"decay_theta{theta}.csv"))
    if args.cylinder:
        mesh = os.path.join(os.path.dirname(__file__), "..", "meshes",
                            "cylinder2d.msh")
        case = cases.cylinder2d_case(mesh)
        cases.run_transient(case, k=2, level=0, dt=1e-3, t_end=1.0,
                            theta=1.0, initial="stokes",
                            out_csv=path("cylinder2d.csv"))
    print("benchmark tables written to", args.out)


if __name__ == "__main__":
    main()
