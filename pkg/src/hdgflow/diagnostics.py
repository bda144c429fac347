"""Audited quantities: errors, divergence/jump norms, per-cell momentum
balance, kinetic energy, and drag/lift.

The momentum residual re-evaluates the numerical flux from the flux
definitions directly (not from assembled matrices), so it is an
independent audit of the assembly path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forms import Assembler
from .mesh import Mesh
from .spaces import FieldState, Spaces


@dataclass
class ErrorReport:
    l2_u: float = float("nan")
    l2_p: float = float("nan")
    h1_u: float = float("nan")
    div_norm: float = float("nan")
    jump_norm: float = float("nan")
    momentum_residual_max: float = float("nan")
    kinetic_energy: float = float("nan")
    cells: int = 0
    k: int = 0
    case: str = ""


def _fields_at_volume_points(assembler: Assembler, state: FieldState):
    u = np.einsum("cej,qj->cqe", state.u, assembler.phi)
    gu = np.einsum("cej,cqjd->cqed", state.u, assembler.gphi)
    p = np.einsum("ca,qa->cq", state.p, assembler.psi)
    return u, gu, p


def error_norms(state: FieldState, exact_u, exact_p, assembler: Assembler,
                exact_grad_u=None, t: float | None = None) -> ErrorReport:
    """L2/broken-H1 errors against exact fields; pressures are compared
    after mean-zero normalization of both."""
    w = assembler.wdet
    area = float(np.sum(w))
    uh, guh, ph = _fields_at_volume_points(assembler, state)
    x = assembler.x_vol
    ue = np.asarray(exact_u(x, t))
    l2_u = np.sqrt(np.einsum("cq,cqe->", w, (uh - ue) ** 2))

    report = ErrorReport(l2_u=float(l2_u), cells=assembler.mesh.num_cells,
                         k=assembler.spaces.k)
    if exact_p is not None:
        pe = np.asarray(exact_p(x, t))
        pe = pe - np.einsum("cq,cq->", w, pe) / area
        ph = ph - np.einsum("cq,cq->", w, ph) / area
        report.l2_p = float(np.sqrt(np.einsum("cq,cq->", w, (ph - pe) ** 2)))
    if exact_grad_u is not None:
        ge = np.asarray(exact_grad_u(x, t))
        report.h1_u = float(np.sqrt(np.einsum("cq,cqed->", w,
                                              (guh - ge) ** 2)))
    report.div_norm, report.jump_norm = divergence_and_jump(state, assembler)
    report.kinetic_energy = kinetic_energy(state, assembler)
    return report


def divergence_and_jump(state: FieldState, assembler: Assembler
                        ) -> tuple[float, float]:
    """Global L2 norm of div(u_h) and of the interior normal jump."""
    div = np.einsum("cej,cqje->cq", state.u, assembler.gphi)
    div_norm = float(np.sqrt(np.einsum("cq,cq->", assembler.wdet, div**2)))

    mesh = assembler.mesh
    un = np.einsum("cej,clqj,cle->clq", state.u, assembler.phif,
                   assembler.normals)  # u.n trace per (cell, local facet)
    # accumulate signed normal traces per facet, then integrate the square
    wf = assembler.fq.weights
    trace = np.zeros((mesh.num_facets, len(wf)))
    for lf in range(3):
        np.add.at(trace, mesh.cell_facets[:, lf], un[:, lf])
    interior = mesh.interior_facets
    lengths = np.linalg.norm(mesh.vertices[mesh.facets[:, 1]]
                             - mesh.vertices[mesh.facets[:, 0]], axis=1)
    jump_norm = float(np.sqrt(np.einsum(
        "f,q,fq->", lengths[interior], wf, trace[interior] ** 2)))
    return div_norm, jump_norm


def kinetic_energy(state: FieldState, assembler: Assembler) -> float:
    """sum_K int_K |u_h|^2 dx."""
    u = np.einsum("cej,qj->cqe", state.u, assembler.phi)
    return float(np.einsum("cq,cqe->", assembler.wdet, u**2))


def momentum_residual(state_np1: FieldState, state_n: FieldState | None,
                      assembler: Assembler, t: float | None = None
                      ) -> tuple[np.ndarray, float]:
    """Per-cell momentum balance residual via independent flux quadrature.

    Transient: int_K (u^{n+1}-u^n)/dt - int_K f^{n+th} + boundary flux of
    sigma-hat at the theta level.  Steady (state_n None): time term dropped
    and the state itself is the frozen advective velocity.
    """
    cfg = assembler.config
    spaces = assembler.spaces
    mesh = assembler.mesh
    transient = state_n is not None
    theta = cfg.theta if transient else 1.0

    if transient:
        u_th = theta * state_np1.u + (1 - theta) * state_n.u
        ub_th = theta * state_np1.ubar + (1 - theta) * state_n.ubar
        adv = state_n
        t_data = (t or 0.0) + theta * cfg.dt
    else:
        u_th, ub_th = state_np1.u, state_np1.ubar
        adv = state_np1
        t_data = t
    pb_th = state_np1.pbar  # stored at the theta level by the stepper

    res = np.zeros((mesh.num_cells, 2))
    if transient:
        du = np.einsum("cej,qj->cqe", state_np1.u - state_n.u, assembler.phi)
        res += np.einsum("cq,cqe->ce", assembler.wdet, du) / cfg.dt
    if assembler.forcing is not None:
        fv = np.asarray(assembler.forcing(assembler.x_vol, t_data))
        res -= np.einsum("cq,cqe->ce", assembler.wdet, fv)
    if assembler.reaction is not None:
        R = np.asarray(assembler.reaction(assembler.x_vol))
        uv = np.einsum("cej,qj->cqe", u_th, assembler.phi)
        res += np.einsum("cq,cqab,cqb->ca", assembler.wdet, R, uv)

    gd_facets = mesh.cell_facets
    for lf in range(3):
        L = assembler.wlen[:, lf]
        nrm = assembler.normals[:, lf]
        fids = gd_facets[:, lf]
        u_tr = np.einsum("cej,cqj->cqe", u_th, assembler.phif[:, lf])
        gu_tr = np.einsum("cej,cqjd->cqed", u_th, assembler.gphif[:, lf])
        ub_tr = np.einsum("cem,qm->cqe", ub_th[fids], assembler.chi)
        pb_tr = np.einsum("cr,qr->cq", pb_th[fids], assembler.chip)
        # sigma_hat . n from the flux definitions
        flux = pb_tr[..., None] * nrm[:, None, :]
        flux -= cfg.nu * np.einsum("cqed,cd->cqe", gu_tr, nrm)
        flux -= assembler.beta[:, None, None] * (ub_tr - u_tr)
        if cfg.advection_enabled:
            w_tr = np.einsum("cej,cqj->cqe", adv.u, assembler.phif[:, lf])
            wn = np.einsum("cqe,ce->cq", w_tr, nrm)
            lam = (wn < 0).astype(float)
            flux += wn[..., None] * u_tr
            flux += (lam * wn)[..., None] * (ub_tr - u_tr)
        res += np.einsum("cq,cqe->ce", L, flux)
    max_mag = float(np.max(np.linalg.norm(res, axis=1))) if len(res) else 0.0
    return res, max_mag


def drag_lift(state: FieldState, assembler: Assembler, surface_tag: str,
              r: float) -> tuple[float, float]:
    """Drag/lift coefficients -(1/r) int (sigma_d . n) . e_i over the tagged
    surface; sigma_d from the cell traces (p_h, grad u_h), n pointing out
    of the obstacle (the trace normal is flipped accordingly)."""
    mesh = assembler.mesh
    tagged = np.asarray(mesh.facets_with_tag(surface_tag))
    if tagged.size == 0:
        raise ValueError(f"no boundary facets tagged {surface_tag!r}")
    force = np.zeros(2)
    nu = assembler.config.nu
    owner = np.arange(mesh.num_cells)
    for lf in range(3):
        fids = mesh.cell_facets[:, lf]
        cells = np.flatnonzero(np.isin(fids, tagged)
                               & (mesh.facet_cells[fids, 0] == owner))
        if cells.size == 0:
            continue
        L = assembler.wlen[cells, lf]
        nrm = assembler.normals[cells, lf]
        gu = np.einsum("cej,cqjd->cqed", state.u[cells],
                       assembler.gphif[cells, lf])
        p = np.einsum("ca,cqa->cq", state.p[cells], assembler.psif[cells, lf])
        sig_n = (p[..., None] * nrm[:, None, :]
                 - nu * np.einsum("cqed,cd->cqe", gu, nrm))
        force += np.einsum("cq,cqe->e", L, sig_n)
    CD, CL = force / r  # cell normals face the obstacle: sign absorbed
    return float(CD), float(CL)
