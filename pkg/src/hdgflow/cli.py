"""Command-line front end: benchmark runs, refinement studies, the
runtime invariant audit, and mesh inspection.

Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import cases as cs
from . import diagnostics as dg
from . import solver as sv
from .forms import AssemblyError, ProblemConfig, default_alpha
from .mesh import MeshError, MshParseError, import_gmsh
from .solver import CondensationError, GaugeError, PicardError

SOLVER_ERRORS = (CondensationError, GaugeError, PicardError, AssemblyError)

DEFAULT_LEVELS = {"kovasznay": [4, 8, 16, 32],
                  "coriolis": [4, 8, 16, 32],
                  "polynomial": [4, 8, 16, 32],
                  "potential-flow": [32],
                  "decay": [8]}


class ConfigError(Exception):
    pass


def _build_case(opts) -> cs.CaseDefinition:
    name = opts.get("case")
    if name == "cylinder2d":
        mesh_file = opts.get("mesh")
        if not mesh_file or not os.path.exists(mesh_file):
            raise ConfigError(f"cylinder2d needs --mesh, got {mesh_file!r}")
        return cs.cylinder2d_case(mesh_file, nu=opts.get("nu") or 1e-3)
    if name not in cs.CASE_BUILDERS:
        raise ConfigError(f"unknown case {name!r} (choose from "
                          f"{sorted(cs.CASE_BUILDERS) + ['cylinder2d']})")
    builder = cs.CASE_BUILDERS[name]
    if opts.get("nu") is not None:
        return builder(nu=opts["nu"]) if name != "kovasznay" \
            else builder(Re=1.0 / opts["nu"])
    return builder()


def _merge_config(args) -> dict:
    """JSON config file first, explicit flags override."""
    opts = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                opts.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
    for key in ("case", "k", "nu", "levels", "dt", "t_end", "theta",
                "alpha", "formulation", "mesh", "out", "steps", "mode"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    opts.setdefault("k", 2)
    opts.setdefault("theta", 1.0)
    opts.setdefault("formulation", "proposed")
    if opts["formulation"] not in ("proposed", "variant"):
        raise ConfigError(f"unknown formulation {opts['formulation']!r}")
    return opts


def _fpd(opts) -> int | None:
    # variant formulation lowers the facet pressure space by one degree
    return opts["k"] - 1 if opts["formulation"] == "variant" else None


def _parse_levels(raw) -> list[int]:
    if raw is None:
        return []
    if isinstance(raw, list):
        return [int(x) for x in raw]
    return [int(x) for x in str(raw).split(",") if x]


def cmd_run(args) -> int:
    opts = _merge_config(args)
    case = _build_case(opts)
    levels = _parse_levels(opts.get("levels")) \
        or DEFAULT_LEVELS.get(case.name, [8])
    out = opts.get("out") or f"{case.name}.csv"
    k = opts["k"]
    transient = opts.get("dt") is not None and opts.get("t_end") is not None
    if transient:
        rows, _, _ = cs.run_transient(
            case, k, levels[0], dt=opts["dt"], t_end=opts["t_end"],
            theta=opts["theta"], out_csv=out,
            initial="zero" if case.exact_u is None else "exact")
    else:
        rows = cs.run_convergence(case, k, levels[:1], out_csv=out,
                                  facet_pressure_degree=_fpd(opts),
                                  picard_mode=opts.get("mode", "default"))
    print(f"{case.name}: wrote {len(rows)} rows to {out}")
    return 0


def cmd_converge(args) -> int:
    opts = _merge_config(args)
    case = _build_case(opts)
    levels = _parse_levels(opts.get("levels")) \
        or DEFAULT_LEVELS.get(case.name, [4, 8, 16])
    out = opts.get("out") or f"{case.name}_convergence.csv"
    cfg = None
    if opts.get("alpha") is not None:
        def cfg(c):
            return ProblemConfig(nu=c.nu, alpha=opts["alpha"],
                                 advection_enabled=c.advection)
    rows = cs.run_convergence(case, opts["k"], levels, out_csv=out,
                              config_builder=cfg,
                              facet_pressure_degree=_fpd(opts),
                              picard_mode=opts.get("mode", "default"))
    for r in rows:
        print("cells=%6d  l2_u=%.3e (%.2f)  l2_p=%.3e (%.2f)" %
              (r["cells"], r["l2_u"], r["rate_u"], r["l2_p"], r["rate_p"]))
    print(f"wrote {out}")
    return 0


def cmd_audit(args) -> int:
    """Invariant audit: mass/momentum/energy checks of the steady scheme and
    of the time stepper, printed one PASS/FAIL line each."""
    opts = _merge_config(args)
    case = _build_case(opts)
    k = opts["k"]
    level = _parse_levels(opts.get("levels") or "")[:1] or \
        [DEFAULT_LEVELS.get(case.name, [8])[0]]
    level = level[0]
    steps = int(opts.get("steps") or 20)
    dt = opts.get("dt") or 0.01
    theta = opts["theta"]
    tol = 1e-9

    checks: list[tuple[str, bool, float]] = []

    mesh = case.mesh_factory(level)
    state, asm = cs.solve_steady(case, mesh, k,
                                 facet_pressure_degree=_fpd(opts))
    div, jump = dg.divergence_and_jump(state, asm)
    _, mres = dg.momentum_residual(state, None, asm)
    uscale = max(np.sqrt(dg.kinetic_energy(state, asm)), 1.0)
    checks.append(("mass conservation (steady): div norm", div <= tol * uscale, div))
    checks.append(("mass conservation (steady): facet jump", jump <= tol * uscale, jump))
    checks.append(("momentum balance (steady): per-cell residual",
                   mres <= tol * uscale, mres))

    rows, _, _ = cs.run_transient(case, k, level, dt=dt, t_end=steps * dt,
                                  theta=theta,
                                  initial="zero" if case.exact_u is None
                                  else "exact")
    div_t = max(r["div_norm"] for r in rows)
    mres_t = max(r["mom_res_max"] for r in rows)
    checks.append(("mass conservation (transient): div norm",
                   div_t <= tol * uscale, div_t))
    checks.append(("momentum balance (transient): per-cell residual",
                   mres_t <= tol * uscale, mres_t))

    decay = cs.decay_case(nu=case.nu)
    drows, _, _ = cs.run_transient(decay, k, 8, dt=dt, t_end=steps * dt,
                                   theta=max(theta, 0.5), initial="exact")
    E = [r["energy"] for r in drows]
    mono = all(E[i + 1] <= E[i] + 1e-12 * E[0] for i in range(len(E) - 1))
    checks.append(("energy stability (homogeneous decay): non-increasing",
                   mono, max(0.0, max(E[i + 1] - E[i]
                                      for i in range(len(E) - 1)))))

    ok = True
    for name, passed, value in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({value:.3e})")
        ok &= passed
    return 0 if ok else 1


def cmd_mesh_info(args) -> int:
    opts = _merge_config(args)
    path = opts.get("mesh")
    if not path or not os.path.exists(path):
        raise ConfigError(f"mesh file not found: {path!r}")
    with open(path) as fh:
        mesh = import_gmsh(fh.read())
    areas = mesh.cell_areas()
    print(f"vertices: {mesh.num_vertices}")
    print(f"cells:    {mesh.num_cells}")
    print(f"facets:   {mesh.num_facets} "
          f"({len(mesh.boundary_facets)} boundary)")
    print(f"area:     {areas.sum():.6g} "
          f"(min cell {areas.min():.3g}, max cell {areas.max():.3g})")
    names = sorted(set(mesh.boundary_tags.values()))
    for name in names:
        print(f"tag {name!r}: {len(mesh.facets_with_tag(name))} facets")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdgflow",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--case")
        sp.add_argument("--config")
        sp.add_argument("--k", type=int)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--levels")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--formulation", choices=["proposed", "variant"])
        sp.add_argument("--mesh")
        sp.add_argument("--out")
        sp.add_argument("--mode", choices=["default", "error-stagnation"])

    for name, fn in (("run", cmd_run), ("converge", cmd_converge),
                     ("audit", cmd_audit), ("mesh-info", cmd_mesh_info)):
        sp = sub.add_parser(name)
        common(sp)
        if name == "audit":
            sp.add_argument("--steps", type=int)
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (MshParseError, MeshError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
