"""Benchmark case definitions and the convergence / transient harnesses.

Each case bundles exact fields (when known), forcing, boundary data, and a
mesh factory, so the CLI and the test suite drive everything through the
same two entry points: run_convergence and run_transient.
"""

from __future__ import annotations

import csv
import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .forms import Assembler, ProblemConfig
from .mesh import Mesh, generate_rect_mesh, import_gmsh
from .spaces import Constraints, FieldState, Spaces, apply_dirichlet, \
    build_spaces
from . import diagnostics as dg
from . import solver as sv

CONVERGENCE_COLUMNS = ["case", "k", "cells", "l2_u", "rate_u", "l2_p",
                       "rate_p", "h1_u", "rate_h1", "div_norm", "jump_norm",
                       "mom_res_max", "energy", "walltime_s"]
TIMESERIES_COLUMNS = ["step", "t", "l2_u", "l2_p", "div_norm", "mom_res_max",
                      "energy", "C_D", "C_L"]


@dataclass
class CaseDefinition:
    """A flow problem: data, exact fields, and how to build its mesh."""

    name: str
    nu: float
    mesh_factory: Callable[[int], Mesh]
    exact_u: Callable | None = None
    exact_p: Callable | None = None
    exact_grad_u: Callable | None = None
    forcing: Callable | None = None
    reaction: Callable | None = None
    dirichlet_tags: tuple[str, ...] = ()
    neumann_tags: tuple[str, ...] = ()
    neumann_data: Callable | None = None
    dirichlet_data: Callable | None = None   # defaults to exact_u
    advection: bool = True
    surface_tag: str | None = None           # drag/lift integration surface
    surface_radius: float = 1.0

    def boundary_velocity(self):
        data = self.dirichlet_data or self.exact_u
        if data is None:
            raise ValueError(f"case {self.name} has no boundary data")
        return data


def _square_factory(bbox=(0.0, 0.0, 1.0, 1.0), aspect=1):
    def make(level: int) -> Mesh:
        return generate_rect_mesh(level, aspect * level, bbox)
    return make


# -- Kovasznay flow ---------------------------------------------------------

def kovasznay_case(Re: float = 40.0) -> CaseDefinition:
    """Steady wake-like analytical solution on (-0.5,1) x (-0.5,1.5)."""
    lam = Re / 2 - math.sqrt(Re**2 / 4 + 4 * math.pi**2)
    twopi = 2 * math.pi

    def u(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        e = np.exp(lam * X)
        return np.stack([1 - e * np.cos(twopi * Y),
                         lam / twopi * e * np.sin(twopi * Y)], axis=-1)

    def p(x, t=None):
        return 0.5 * (1 - np.exp(2 * lam * x[..., 0]))

    def gu(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        e = np.exp(lam * X)
        g = np.empty(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = -lam * e * np.cos(twopi * Y)
        g[..., 0, 1] = twopi * e * np.sin(twopi * Y)
        g[..., 1, 0] = lam**2 / twopi * e * np.sin(twopi * Y)
        g[..., 1, 1] = lam * e * np.cos(twopi * Y)
        return g

    return CaseDefinition(
        name="kovasznay", nu=1.0 / Re,
        mesh_factory=_square_factory((-0.5, -0.5, 1.0, 1.5), aspect=2),
        exact_u=u, exact_p=p, exact_grad_u=gu,
        dirichlet_tags=("left", "right", "bottom", "top"))


# -- rotating frame with uniform exact flow ---------------------------------

def coriolis_case(nu: float = 1.0) -> CaseDefinition:
    """Uniform flow u=(1,0) balanced by a y-dependent rotation term.

    The velocity solution lies in the discrete space, so the velocity error
    is machine zero at any viscosity; only the pressure carries a
    discretization error.
    """
    def u(x, t=None):
        out = np.zeros(x.shape)
        out[..., 0] = 1.0
        return out

    def p(x, t=None):
        return x[..., 1] ** 2 - 1.0 / 3.0

    def gu(x, t=None):
        return np.zeros(x.shape[:-1] + (2, 2))

    def reaction(x):
        R = np.zeros(x.shape[:-1] + (2, 2))
        R[..., 0, 1] = 2 * x[..., 1]
        R[..., 1, 0] = -2 * x[..., 1]
        return R

    return CaseDefinition(
        name="coriolis", nu=nu, mesh_factory=_square_factory(),
        exact_u=u, exact_p=p, exact_grad_u=gu, reaction=reaction,
        dirichlet_tags=("left", "right", "bottom", "top"))


# -- pressure-robustness with a high-degree pressure -------------------------

def _polynomial_blocks(X, Y):
    A = X**2 * (X - 1) ** 2
    B = 2 * Y * (Y - 1) * (2 * Y - 1)
    C = 2 * X * (X - 1) * (2 * X - 1)
    D = Y**2 * (Y - 1) ** 2
    App = 12 * X**2 - 12 * X + 2
    Bp = 24 * Y - 12
    Cp = 24 * X - 12
    Dpp = 12 * Y**2 - 12 * Y + 2
    return A, B, C, D, App, Bp, Cp, Dpp


def polynomial_case(nu: float = 1.0) -> CaseDefinition:
    """Divergence-free quartic velocity with a degree-7 pressure.

    u = curl(x^2 (x-1)^2 y^2 (y-1)^2), p = x^7 + y^7 - 1/4 on the unit
    square; the forcing below is the closed form of -nu lap(u) + (u.grad)u
    + grad p.  A pressure-dependent forcing makes the velocity error of a
    pressure-robust method independent of nu.
    """
    def u(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        A, B, C, D, *_ = _polynomial_blocks(X, Y)
        return np.stack([A * B, -C * D], axis=-1)

    def p(x, t=None):
        return x[..., 0] ** 7 + x[..., 1] ** 7 - 0.25

    def gu(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        A, B, C, D, App, Bp, Cp, Dpp = _polynomial_blocks(X, Y)
        g = np.empty(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = C * B
        g[..., 0, 1] = A * Dpp  # d/dy of B equals the second derivative of D
        g[..., 1, 0] = -App * D
        g[..., 1, 1] = -C * B
        return g

    def f(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        A, B, C, D, App, Bp, Cp, Dpp = _polynomial_blocks(X, Y)
        lap0 = App * B + A * Bp
        lap1 = -(Cp * D + C * Dpp)
        conv0 = A * B * C * B - C * D * A * Dpp
        conv1 = -A * B * App * D + C * D * C * B
        return np.stack([-nu * lap0 + conv0 + 7 * X**6,
                         -nu * lap1 + conv1 + 7 * Y**6], axis=-1)

    return CaseDefinition(
        name="polynomial", nu=nu, mesh_factory=_square_factory(),
        exact_u=u, exact_p=p, exact_grad_u=gu, forcing=f,
        dirichlet_tags=("left", "right", "bottom", "top"))


# -- transient potential flow -------------------------------------------------

def potential_flow_case(nu: float = 1.0e-2) -> CaseDefinition:
    """Ramped harmonic-potential flow with time-dependent boundary data;
    exercises the per-cell momentum-balance audit of the theta scheme."""
    def ramp(t):
        return min(float(t), 1.0)

    def dramp(t):
        return 1.0 if float(t) < 1.0 else 0.0

    def chi(X, Y):
        return X**3 * Y - X * Y**3

    def u(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        a = ramp(0.0 if t is None else t)
        return a * np.stack([3 * X**2 * Y - Y**3, X**3 - 3 * X * Y**2],
                            axis=-1)

    def p(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        tt = 0.0 if t is None else t
        a, ap = ramp(tt), dramp(tt)
        g2 = (3 * X**2 * Y - Y**3) ** 2 + (X**3 - 3 * X * Y**2) ** 2
        return -a**2 * g2 / 2 - ap * chi(X, Y) + a**2 * 12.0 / 35.0

    def gu(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        a = ramp(0.0 if t is None else t)
        g = np.empty(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = 6 * X * Y
        g[..., 0, 1] = 3 * X**2 - 3 * Y**2
        g[..., 1, 0] = 3 * X**2 - 3 * Y**2
        g[..., 1, 1] = -6 * X * Y
        return a * g

    return CaseDefinition(
        name="potential-flow", nu=nu,
        mesh_factory=_square_factory((-1.0, -1.0, 1.0, 1.0)),
        exact_u=u, exact_p=p, exact_grad_u=gu,
        dirichlet_tags=("left", "right", "bottom", "top"))


# -- kinetic-energy decay -----------------------------------------------------

def decay_case(nu: float = 1.0e-2) -> CaseDefinition:
    """No-forcing decay from a smooth divergence-free initial velocity with
    homogeneous boundary data; discrete kinetic energy must not grow."""
    def u0(x, t=None):
        X, Y = x[..., 0], x[..., 1]
        A, B, C, D, *_ = _polynomial_blocks(X, Y)
        return 40.0 * np.stack([A * B, -C * D], axis=-1)

    def ubc(x, t=None):
        return np.zeros(x.shape)

    return CaseDefinition(
        name="decay", nu=nu, mesh_factory=_square_factory(),
        exact_u=u0, dirichlet_data=ubc,
        dirichlet_tags=("left", "right", "bottom", "top"))


# -- channel flow past a circular obstacle ------------------------------------

CYLINDER_RADIUS = 0.05


def cylinder2d_case(mesh_file: str, nu: float = 1.0e-3) -> CaseDefinition:
    """Benchmark channel [0,2.2]x[0,0.41] with a radius-0.05 obstacle at
    (0.2,0.2); parabolic inflow, natural outflow, no-slip walls."""
    H = 0.41

    def inflow(x, t=None):
        out = np.zeros(x.shape)
        out[..., 0] = 6.0 * x[..., 1] * (H - x[..., 1]) / H**2
        return out

    def bc(x, t=None):
        # inflow profile on the left plane, zero elsewhere (walls, obstacle)
        out = inflow(x, t)
        out[..., 0] *= (x[..., 0] < 1e-12)
        return out

    def h_zero(x, t=None):
        return np.zeros(x.shape)

    def make(level: int) -> Mesh:
        with open(mesh_file) as fh:
            return import_gmsh(fh.read())

    return CaseDefinition(
        name="cylinder2d", nu=nu, mesh_factory=make,
        dirichlet_data=bc, dirichlet_tags=("inflow", "wall", "obstacle"),
        neumann_tags=("outflow",), neumann_data=h_zero,
        surface_tag="obstacle", surface_radius=CYLINDER_RADIUS)


CASE_BUILDERS = {
    "kovasznay": kovasznay_case,
    "coriolis": coriolis_case,
    "polynomial": polynomial_case,
    "potential-flow": potential_flow_case,
    "decay": decay_case,
}


# -- glue ---------------------------------------------------------------------

def make_assembler(case: CaseDefinition, mesh: Mesh, k: int,
                   config: ProblemConfig | None = None,
                   facet_pressure_degree: int | None = None,
                   quad_exactness: int | None = None
                   ) -> tuple[Spaces, Assembler]:
    spaces = build_spaces(mesh, k, facet_pressure_degree)
    if config is None:
        config = ProblemConfig(nu=case.nu, advection_enabled=case.advection)
    neumann = {}
    if case.neumann_data is not None:
        for tag in case.neumann_tags:
            for f in mesh.facets_with_tag(tag):
                neumann[int(f)] = case.neumann_data
    asm = Assembler(mesh, spaces, config, forcing=case.forcing,
                    neumann=neumann, reaction=case.reaction,
                    quad_exactness=quad_exactness)
    return spaces, asm


def dirichlet_facets(case: CaseDefinition, mesh: Mesh) -> list[int]:
    out: list[int] = []
    for tag in case.dirichlet_tags:
        out.extend(int(f) for f in mesh.facets_with_tag(tag))
    return sorted(set(out))


def constraints_for(case: CaseDefinition, spaces: Spaces, t: float
                    ) -> Constraints:
    facets = dirichlet_facets(case, spaces.mesh)
    pin = None
    if not case.neumann_tags:  # pure Dirichlet: pin one facet pressure dof
        pin = int(spaces.facet_pressure_dofs(0)[0])
    return apply_dirichlet(spaces, facets, case.boundary_velocity(), t,
                           pinned_dof=pin)


def solve_steady(case: CaseDefinition, mesh: Mesh, k: int,
                 config: ProblemConfig | None = None,
                 facet_pressure_degree: int | None = None,
                 picard_mode: str = "default", picard_tol: float = 1e-10
                 ) -> tuple[FieldState, Assembler]:
    spaces, asm = make_assembler(case, mesh, k, config,
                                 facet_pressure_degree)
    cons = constraints_for(case, spaces, 0.0)
    perr = None
    if picard_mode == "error-stagnation":
        def perr(state):
            rep = dg.error_norms(state, case.exact_u, case.exact_p, asm)
            return rep.l2_p
    state = sv.picard_solve(asm, cons, tol=picard_tol, mode=picard_mode,
                            pressure_error=perr)
    if not case.neumann_tags:
        sv.shift_pressure_mean_zero(state, asm)
    return state, asm


def _rate(prev_err, err, prev_h, h):
    if prev_err is None or not np.isfinite(err) or err <= 0 or prev_err <= 0:
        return float("nan")
    return math.log(prev_err / err) / math.log(prev_h / h)


def run_convergence(case: CaseDefinition, k: int, levels: list[int],
                    out_csv: str | None = None,
                    config_builder=None,
                    facet_pressure_degree: int | None = None,
                    picard_mode: str = "default") -> list[dict]:
    """Steady mesh-refinement study; returns (and optionally writes) one row
    per level in the convergence CSV schema."""
    rows = []
    prev = None
    for level in levels:
        mesh = case.mesh_factory(level)
        cfg = config_builder(case) if config_builder else None
        t0 = _time.perf_counter()
        state, asm = solve_steady(case, mesh, k, cfg,
                                  facet_pressure_degree,
                                  picard_mode=picard_mode)
        wall = _time.perf_counter() - t0
        rep = dg.error_norms(state, case.exact_u, case.exact_p, asm,
                             exact_grad_u=case.exact_grad_u)
        _, mres = dg.momentum_residual(state, None, asm)
        h = float(np.max(asm.geo.h))
        ph = None if prev is None else float(np.max(prev[1].geo.h))
        row = {
            "case": case.name, "k": k, "cells": mesh.num_cells,
            "l2_u": rep.l2_u,
            "rate_u": _rate(prev and prev[0].l2_u, rep.l2_u, ph, h),
            "l2_p": rep.l2_p,
            "rate_p": _rate(prev and prev[0].l2_p, rep.l2_p, ph, h),
            "h1_u": rep.h1_u,
            "rate_h1": _rate(prev and prev[0].h1_u, rep.h1_u, ph, h),
            "div_norm": rep.div_norm, "jump_norm": rep.jump_norm,
            "mom_res_max": mres, "energy": rep.kinetic_energy,
            "walltime_s": wall,
        }
        rows.append(row)
        prev = (rep, asm)
    if out_csv:
        write_csv(out_csv, CONVERGENCE_COLUMNS, rows)
    return rows


def run_transient(case: CaseDefinition, k: int, level: int, dt: float,
                  t_end: float, theta: float = 0.5,
                  out_csv: str | None = None,
                  initial: str = "exact",
                  on_step=None) -> tuple[list[dict], FieldState, Assembler]:
    """theta-scheme time integration producing one time-series row per step.

    initial "exact" projects case.exact_u at t=0; "stokes" starts from the
    steady Stokes solution of the case data (used for impulsive starts).
    """
    mesh = case.mesh_factory(level)
    cfg = ProblemConfig(nu=case.nu, theta=theta, dt=dt,
                        advection_enabled=case.advection)
    spaces, asm = make_assembler(case, mesh, k, cfg)

    if initial == "exact":
        state = sv.project_initial_state(asm, lambda x: case.exact_u(x, 0.0))
    elif initial == "stokes":
        cfg0 = ProblemConfig(nu=case.nu, advection_enabled=False)
        _, asm0 = make_assembler(case, mesh, k, cfg0)
        cons0 = constraints_for(case, spaces, 0.0)
        state = sv.picard_solve(asm0, cons0)
    elif initial == "zero":
        state = FieldState.zeros(spaces)
    else:
        raise ValueError(f"unknown initial state {initial!r}")

    nsteps = int(round(t_end / dt))
    rows = []
    for n in range(nsteps):
        t_n = n * dt
        cons = constraints_for(case, spaces, t_n + dt)
        new = sv.theta_step(state, asm, cons, t_n)
        if not case.neumann_tags:
            sv.shift_pressure_mean_zero(new, asm)
        _, mres = dg.momentum_residual(new, state, asm, t=t_n)
        t_th = t_n + theta * dt
        if case.exact_u is not None and case.exact_p is not None:
            rep = dg.error_norms(new, case.exact_u, case.exact_p, asm,
                                 t=t_n + dt)
            pe = np.asarray(case.exact_p(asm.x_vol, t_th))
            area = float(np.sum(asm.wdet))
            pe = pe - np.einsum("cq,cq->", asm.wdet, pe) / area
            ph = np.einsum("ca,qa->cq", new.p, asm.psi)
            ph = ph - np.einsum("cq,cq->", asm.wdet, ph) / area
            l2p = float(np.sqrt(np.einsum("cq,cq->", asm.wdet,
                                          (ph - pe) ** 2)))
            l2u, div = rep.l2_u, rep.div_norm
        else:
            l2u = l2p = float("nan")
            div, _ = dg.divergence_and_jump(new, asm)
        if case.surface_tag:
            CD, CL = dg.drag_lift(new, asm, case.surface_tag,
                                  case.surface_radius)
        else:
            CD = CL = float("nan")
        rows.append({"step": n + 1, "t": t_n + dt, "l2_u": l2u, "l2_p": l2p,
                     "div_norm": div, "mom_res_max": mres,
                     "energy": dg.kinetic_energy(new, asm),
                     "C_D": CD, "C_L": CL})
        state = new
        if on_step:
            on_step(n + 1, state, rows[-1])
        if not np.isfinite(rows[-1]["energy"]):
            raise sv.PicardError(f"solution blew up at step {n + 1}",
                                 [r["energy"] for r in rows])
    if out_csv:
        write_csv(out_csv, TIMESERIES_COLUMNS, rows)
    return rows, state, asm


def write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in columns})
