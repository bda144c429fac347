"""Local (per-cell) assembly of the linearized HDG weak form.

Unknowns per cell: velocity u (vector P_k), pressure p (P_{k-1});
per facet: trace velocity ubar (vector P_k) and facet pressure pbar.
The advective velocity is frozen (previous Picard iterate for steady
problems, the known time level for the theta scheme), which makes every
assembled system linear.

Local dof/row layout (square system, row i tests with the function of
dof i): [u_x | u_y | p | facet0: ubar_x, ubar_y, pbar | facet1 | facet2].
Row blocks are therefore ordered momentum-cell, mass-cell,
momentum-facet, mass-facet as seen from the cell/facet partition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polybasis
from .mesh import Mesh, mesh_geometry
from .polybasis import basis_eval, _basis_eval_unchecked, quadrature_rule
from .spaces import FieldState, Spaces, trace_tables


class AssemblyError(RuntimeError):
    pass


def default_alpha(k: int) -> float:
    """Interior-penalty parameter; large enough for stability at any k<=4."""
    return 6.0 * k * k


@dataclass
class ProblemConfig:
    nu: float
    alpha: float | None = None
    theta: float = 1.0
    dt: float | None = None
    advection_enabled: bool = True

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("viscosity nu must be positive")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("penalty alpha must be positive")
        if not (0.5 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [1/2, 1]")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")

    def alpha_for(self, k: int) -> float:
        return self.alpha if self.alpha is not None else default_alpha(k)


@dataclass
class LocalSystem:
    """Dense local blocks of one cell, partitioned cell vs facet dofs."""

    cell_id: int
    facet_ids: np.ndarray
    A_KK: np.ndarray
    A_KF: np.ndarray
    A_FK: np.ndarray
    A_FF: np.ndarray
    b_K: np.ndarray
    b_F: np.ndarray


def upwind_indicator(un) -> np.ndarray:
    """1 on inflow (u_adv . n < 0), 0 on outflow (u_adv . n >= 0)."""
    un = np.asarray(un, dtype=float)
    if not np.all(np.isfinite(un)):
        raise ValueError("non-finite normal velocity")
    return (un < 0).astype(float)


def flux_advective(u, ubar, u_adv, n):
    """Upwinded advective numerical flux (u x u_adv) + (ubar-u) x lam*u_adv."""
    u, ubar, u_adv, n = (np.asarray(a, dtype=float) for a in (u, ubar, u_adv, n))
    lam = upwind_indicator(u_adv @ n)
    return np.outer(u, u_adv) + lam * np.outer(ubar - u, u_adv)

def flux_diffusive(pbar, grad_u, u, ubar, n, nu, alpha, hK):
    """Diffusive numerical flux pbar*I - nu*grad_u - (nu*alpha/hK)(ubar-u) x n."""
    if hK <= 0:
        raise ValueError("hK must be positive")
    u, ubar, n = (np.asarray(a, dtype=float) for a in (u, ubar, n))
    grad_u = np.asarray(grad_u, dtype=float)
    return (pbar * np.eye(2) - nu * grad_u
            - (nu * alpha / hK) * np.outer(ubar - u, n))


class Assembler:
    """Batched per-cell assembly over a fixed mesh/space/config.

    Geometry and basis tables are precomputed once; each call to
    assemble_local re-evaluates only the advective (state-dependent) and
    data terms.
    """

    def __init__(self, mesh: Mesh, spaces: Spaces, config: ProblemConfig,
                 forcing=None, neumann: dict[int, object] | None = None,
                 reaction=None, quad_exactness: int | None = None):
        self.mesh = mesh
        self.spaces = spaces
        self.config = config
        self.forcing = forcing
        self.neumann = dict(neumann or {})
        self.reaction = reaction

        k = spaces.k
        self.alpha = config.alpha_for(k)
        exact = quad_exactness if quad_exactness is not None \
            else polybasis.default_exactness(k)

        geo = mesh_geometry(mesh)
        self.geo = geo
        nc = mesh.num_cells

        # volume tables
        vq = quadrature_rule("triangle", exact)
        self.vq = vq
        vb = basis_eval("triangle", k, vq.points)
        pb = _basis_eval_unchecked("triangle", k - 1, vq.points)
        self.phi = vb.values                       # (nq, nb)
        self.psi = pb.values                       # (nq, np)
        self.wdet = vq.weights[None, :] * geo.dets[:, None]       # (nc, nq)
        self.gphi = np.einsum("cde,qie->cqid", geo.inv_jac_T, vb.grads)
        self.gpsi = np.einsum("cde,qae->cqad", geo.inv_jac_T, pb.grads)
        self.x_vol = (geo.origins[:, None, :]
                      + np.einsum("cde,qe->cqd", geo.jacobians, vq.points))

        # facet tables (global-orientation trace variants)
        fq = quadrature_rule("interval", exact)
        self.fq = fq
        self.chi = basis_eval("interval", k, fq.points).values    # (nqf, nfb)
        self.chip = _basis_eval_unchecked(
            "interval", spaces.facet_pressure_degree, fq.points).values
        Tv, Tg, Tp = trace_tables(spaces, fq)
        variant = 2 * np.arange(3)[None, :] + (mesh.cell_facet_orient < 0)
        self.phif = Tv[variant]                    # (nc, 3, nqf, nb)
        self.gphif = np.einsum("cde,clqie->clqid", geo.inv_jac_T, Tg[variant])
        self.psif = Tp[variant]                    # (nc, 3, nqf, np)
        # reference coordinates of facet points per variant, for phys points
        from .spaces import REF_VERTS
        s = fq.points[:, 0]
        refpts = np.empty((6, len(s), 2))
        for lf in range(3):
            for flip in (0, 1):
                a, b = REF_VERTS[lf], REF_VERTS[(lf + 1) % 3]
                if flip:
                    a, b = b, a
                refpts[2 * lf + flip] = a[None] + s[:, None] * (b - a)[None]
        self.x_facet = (geo.origins[:, None, None, :] + np.einsum(
            "cde,clqe->clqd", geo.jacobians, refpts[variant]))
        self.wlen = geo.lengths[:, :, None] * fq.weights[None, None, :]
        self.normals = geo.normals                 # (nc, 3, 2)
        self.beta = config.nu * self.alpha / geo.h  # (nc,)

        # masks
        fid = mesh.cell_facets                      # (nc, 3)
        self.is_boundary = mesh.facet_cells[fid, 1] < 0
        neu = np.zeros(mesh.num_facets, dtype=bool)
        for f in self.neumann:
            neu[f] = True
        self.is_neumann = neu[fid] & self.is_boundary

        # dof layout
        nb, np_, nfb, nfp = spaces.nb, spaces.np_, spaces.nfb, spaces.nfp
        self.ncd = spaces.cell_block
        self.fb = spaces.facet_block
        self.nloc = self.ncd + 3 * self.fb
        self.iu = [np.arange(0, nb), np.arange(nb, 2 * nb)]
        self.ipr = np.arange(2 * nb, 2 * nb + np_)
        self.ifu = [[np.arange(self.ncd + lf * self.fb + c * nfb,
                               self.ncd + lf * self.fb + (c + 1) * nfb)
                     for c in range(2)] for lf in range(3)]
        self.ifp = [np.arange(self.ncd + lf * self.fb + 2 * nfb,
                              self.ncd + (lf + 1) * self.fb)
                    for lf in range(3)]
        vel = np.zeros(self.nloc, dtype=bool)
        vel[self.iu[0]] = vel[self.iu[1]] = True
        for lf in range(3):
            vel[self.ifu[lf][0]] = vel[self.ifu[lf][1]] = True
        self.vel_idx = np.flatnonzero(vel)
        self.mom_idx = self.vel_idx  # square layout: momentum rows = vel dofs

        # cell mass matrix for the time term
        self.Mt = np.einsum("cq,qi,qj->cij", self.wdet, self.phi, self.phi)
        self._operator_static = self._assemble_static()

    # -- state helpers ----------------------------------------------------

    def state_to_local(self, state: FieldState) -> np.ndarray:
        """Gather a FieldState into per-cell local vectors (nc, nloc)."""
        nc = self.mesh.num_cells
        x = np.zeros((nc, self.nloc))
        x[:, self.iu[0]] = state.u[:, 0]
        x[:, self.iu[1]] = state.u[:, 1]
        x[:, self.ipr] = state.p
        y = state.facet_vector(self.spaces)
        gd = self.spaces.cell_to_facet_dofs()
        x[:, self.ncd:] = y[gd]
        return x

    def advective_traces(self, state: FieldState):
        """Frozen advective velocity at volume/facet quad points + upwind."""
        w_vol = np.einsum("cej,qj->cqe", state.u, self.phi)
        w_f = np.einsum("cej,clqj->clqe", state.u, self.phif)
        wn = np.einsum("clqe,cle->clq", w_f, self.normals)
        lam = (wn < 0).astype(float)
        # facet-field advective trace for the Neumann boundary term
        ub_f = np.einsum("fem,qm->fqe", state.ubar, self.chi)
        ubn = np.einsum("clqe,cle->clq", ub_f[self.mesh.cell_facets],
                        self.normals)
        lam_bar = (ubn < 0).astype(float)
        return w_vol, wn, lam, ubn, lam_bar

    # -- operator assembly -------------------------------------------------

    def _assemble_static(self) -> np.ndarray:
        """State-independent part: viscous, pressure, mass rows, penalty,
        symmetrization, reaction."""
        nc = self.mesh.num_cells
        nu = self.config.nu
        A = np.zeros((nc, self.nloc, self.nloc))
        phi, psi, gphi, gpsi, wdet = (self.phi, self.psi, self.gphi,
                                      self.gpsi, self.wdet)

        # viscous volume: +nu (grad u, grad v)
        Kv = nu * np.einsum("cq,cqid,cqjd->cij", wdet, gphi, gphi)
        for c in range(2):
            A[np.ix_(np.arange(nc), self.iu[c], self.iu[c])] += Kv

        # pressure volume: -(p, div v)
        for c in range(2):
            P = np.einsum("cq,cqi,qa->cia", wdet, gphi[..., c], psi)
            A[np.ix_(np.arange(nc), self.iu[c], self.ipr)] -= P

        # cell mass row: (u, grad q) - <u.n, q>
        for c in range(2):
            Q = np.einsum("cq,qj,cqa->caj", wdet, phi, gpsi[..., c])
            A[np.ix_(np.arange(nc), self.ipr, self.iu[c])] += Q

        # reaction (e.g. Coriolis): +(R(x) u, v)
        if self.reaction is not None:
            R = np.asarray(self.reaction(self.x_vol))  # (nc, nq, 2, 2)
            for a in range(2):
                for b in range(2):
                    M = np.einsum("cq,cq,qi,qj->cij", wdet, R[..., a, b],
                                  phi, phi)
                    A[np.ix_(np.arange(nc), self.iu[a], self.iu[b])] += M

        idx = np.arange(nc)
        for lf in range(3):
            L = self.wlen[:, lf]                     # (nc, nqf)
            nrm = self.normals[:, lf]                # (nc, 2)
            pf = self.phif[:, lf]                    # (nc, nqf, nb)
            gpfn = np.einsum("cqid,cd->cqi", self.gphif[:, lf], nrm)
            psf = self.psif[:, lf]                   # (nc, nqf, np)
            bnd = self.is_boundary[:, lf].astype(float)

            for c in range(2):
                nc_comp = nrm[:, c]                  # (nc,)
                rows_v = self.iu[c]
                rows_vb = self.ifu[lf][c]

                # pbar columns of the numerical flux: +<pbar n_c, test>
                colp = self.ifp[lf]
                A[np.ix_(idx, rows_v, colp)] += np.einsum(
                    "cq,c,qr,cqi->cir", L, nc_comp, self.chip, pf)
                A[np.ix_(idx, rows_vb, colp)] += np.einsum(
                    "cq,c,qr,qm->cmr", L, nc_comp, self.chip, self.chi)

                # -nu (grad u . n) columns
                Gn = nu * np.einsum("cq,cqj,cqi->cij", L, gpfn, pf)
                A[np.ix_(idx, rows_v, self.iu[c])] -= Gn
                A[np.ix_(idx, rows_vb, self.iu[c])] -= nu * np.einsum(
                    "cq,cqj,qm->cmj", L, gpfn, self.chi)

                # penalty +(nu a / h)(u - ubar)
                Pen_uu = np.einsum("c,cq,cqj,cqi->cij", self.beta, L, pf, pf)
                Pen_ub = np.einsum("c,cq,qm,cqi->cim", self.beta, L,
                                   self.chi, pf)
                Pen_bu = np.einsum("c,cq,cqj,qm->cmj", self.beta, L, pf,
                                   self.chi)
                Pen_bb = np.einsum("c,cq,qm,qn->cmn", self.beta, L,
                                   self.chi, self.chi)
                A[np.ix_(idx, rows_v, self.iu[c])] += Pen_uu
                A[np.ix_(idx, rows_v, self.ifu[lf][c])] -= Pen_ub
                A[np.ix_(idx, rows_vb, self.iu[c])] += Pen_bu
                A[np.ix_(idx, rows_vb, self.ifu[lf][c])] -= Pen_bb

                # symmetrizing term +nu ((ubar - u) x n) : grad v
                Sym_u = nu * np.einsum("cq,cqj,cqi->cij", L, pf, gpfn)
                Sym_b = nu * np.einsum("cq,qm,cqi->cim", L, self.chi, gpfn)
                A[np.ix_(idx, rows_v, self.iu[c])] -= Sym_u
                A[np.ix_(idx, rows_v, self.ifu[lf][c])] += Sym_b

                # cell mass row, facet part: -<u.n, q>
                A[np.ix_(idx, self.ipr, self.iu[c])] -= np.einsum(
                    "cq,c,cqj,cqa->caj", L, nc_comp, pf, psf)

                # facet mass row: +<u.n, qbar>, boundary part -<ubar.n, qbar>
                rows_q = self.ifp[lf]
                A[np.ix_(idx, rows_q, self.iu[c])] += np.einsum(
                    "cq,c,cqj,qr->crj", L, nc_comp, pf, self.chip)
                A[np.ix_(idx, rows_q, self.ifu[lf][c])] -= np.einsum(
                    "cq,c,qm,qr->crm", L * bnd[:, None], nc_comp, self.chi,
                    self.chip)
        return A

    def assemble_operator(self, state_adv: FieldState | None) -> np.ndarray:
        """Full linearized spatial operator with advective velocity frozen at
        `state_adv` (None or advection disabled: Stokes operator)."""
        A = self._operator_static.copy()
        if not self.config.advection_enabled or state_adv is None:
            return A
        w_vol, wn, lam, ubn, lam_bar = self.advective_traces(state_adv)
        nc = self.mesh.num_cells
        idx = np.arange(nc)

        # volume: -(u x w) : grad v
        Av = np.einsum("cq,qj,cqid,cqd->cij", self.wdet, self.phi, self.gphi,
                       w_vol)
        for c in range(2):
            A[np.ix_(idx, self.iu[c], self.iu[c])] -= Av

        for lf in range(3):
            L = self.wlen[:, lf]
            pf = self.phif[:, lf]
            w = wn[:, lf]                     # (nc, nqf)
            lm = lam[:, lf]
            neu = self.is_neumann[:, lf].astype(float)
            # flux columns: +(1-lam) wn u + lam wn ubar, tested by v and vbar
            cu = (1 - lm) * w                 # coefficient of u trace
            cub = lm * w                      # coefficient of ubar
            for c in range(2):
                A[np.ix_(idx, self.iu[c], self.iu[c])] += np.einsum(
                    "cq,cqj,cqi->cij", L * cu, pf, pf)
                A[np.ix_(idx, self.iu[c], self.ifu[lf][c])] += np.einsum(
                    "cq,qm,cqi->cim", L * cub, self.chi, pf)
                A[np.ix_(idx, self.ifu[lf][c], self.iu[c])] += np.einsum(
                    "cq,cqj,qm->cmj", L * cu, pf, self.chi)
                A[np.ix_(idx, self.ifu[lf][c], self.ifu[lf][c])] += np.einsum(
                    "cq,qm,qn->cmn", L * cub, self.chi, self.chi)
                # Neumann outflow term -(1-lam_bar)(ubar_adv.n) ubar . vbar
                cn = neu[:, None] * (1 - lam_bar[:, lf]) * ubn[:, lf]
                A[np.ix_(idx, self.ifu[lf][c], self.ifu[lf][c])] -= np.einsum(
                    "cq,qm,qn->cmn", L * cn, self.chi, self.chi)
        return A

    def assemble_rhs(self, t: float | None) -> np.ndarray:
        """Forcing and Neumann data contributions (nc, nloc)."""
        b = np.zeros((self.mesh.num_cells, self.nloc))
        if self.forcing is not None:
            fv = np.asarray(self.forcing(self.x_vol, t))   # (nc, nq, 2)
            if not np.all(np.isfinite(fv)):
                raise AssemblyError("non-finite forcing values")
            for c in range(2):
                b[:, self.iu[c]] += np.einsum("cq,cq,qi->ci", self.wdet,
                                              fv[..., c], self.phi)
        if self.neumann:
            for lf in range(3):
                cells = np.flatnonzero(self.is_neumann[:, lf])
                if not cells.size:
                    continue
                hv = np.stack([
                    np.asarray(self.neumann[int(self.mesh.cell_facets[c, lf])](
                        self.x_facet[c, lf], t)) for c in cells])
                L = self.wlen[cells, lf]
                for c in range(2):
                    b[np.ix_(cells, self.ifu[lf][c])] += np.einsum(
                        "cq,cq,qm->cm", L, hv[..., c], self.chi)
        return b

    # -- public entry points -----------------------------------------------

    def assemble_local(self, state_adv: FieldState | None, mode: str,
                       state_n: FieldState | None = None,
                       t: float | None = None):
        """Local matrices/rhs for all cells.

        steady: Picard form with frozen advective velocity `state_adv`.
        transient: one theta step from `state_n`; the pressure unknown is
        the theta-average level, the velocity unknown is level n+1.
        """
        if mode == "steady":
            A = self.assemble_operator(state_adv)
            b = self.assemble_rhs(t)
        elif mode == "transient":
            if state_n is None or self.config.dt is None:
                raise AssemblyError("transient mode requires state_n and dt")
            theta, dt = self.config.theta, self.config.dt
            Op = self.assemble_operator(state_n)
            A = Op.copy()
            mv = np.ix_(np.arange(self.mesh.num_cells), self.mom_idx,
                        self.vel_idx)
            A[mv] *= theta
            b = self.assemble_rhs((t or 0.0) + theta * dt)
            # known-level contribution of the theta average
            xn = self.state_to_local(state_n)
            xn_vel = np.zeros_like(xn)
            xn_vel[:, self.vel_idx] = xn[:, self.vel_idx]
            known = np.einsum("crk,ck->cr", Op[:, self.mom_idx, :], xn_vel)
            b[:, self.mom_idx] -= (1 - theta) * known
            # time derivative
            for c in range(2):
                A[np.ix_(np.arange(self.mesh.num_cells), self.iu[c],
                         self.iu[c])] += self.Mt / dt
                b[:, self.iu[c]] += np.einsum("cij,cj->ci", self.Mt,
                                              state_n.u[:, c]) / dt
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if not np.all(np.isfinite(A)):
            bad = np.argwhere(~np.isfinite(A))[0, 0]
            raise AssemblyError(f"non-finite entries assembled on cell {bad}")
        return A, b

    def local_system(self, cell: int, state_adv: FieldState | None,
                     mode: str = "steady", state_n: FieldState | None = None,
                     t: float | None = None) -> LocalSystem:
        """Dense local system of a single cell (thin view on the batch)."""
        A, b = self.assemble_local(state_adv, mode, state_n=state_n, t=t)
        n = self.ncd
        return LocalSystem(cell_id=cell,
                           facet_ids=self.mesh.cell_facets[cell].copy(),
                           A_KK=A[cell, :n, :n], A_KF=A[cell, :n, n:],
                           A_FK=A[cell, n:, :n], A_FF=A[cell, n:, n:],
                           b_K=b[cell, :n], b_F=b[cell, n:])
