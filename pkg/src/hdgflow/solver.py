"""Static condensation, global facet solve, Picard iteration and the
theta time stepper."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import Assembler, LocalSystem, ProblemConfig
from .mesh import Mesh
from .spaces import Constraints, FieldState, Spaces


class CondensationError(RuntimeError):
    def __init__(self, cell: int, message: str):
        super().__init__(f"cell {cell}: {message}")
        self.cell = cell


class GaugeError(RuntimeError):
    pass


class PicardError(RuntimeError):
    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = list(history)


@dataclass
class CondensedBlock:
    """Schur complement data of one cell.

    S_local = A_FF - A_FK A_KK^-1 A_KF, g_local = b_F - A_FK A_KK^-1 b_K.
    X and w hold the back-substitution data z = w - X y.
    """

    cell_id: int
    facet_ids: np.ndarray
    S_local: np.ndarray
    g_local: np.ndarray
    X: np.ndarray
    w: np.ndarray


COND_LIMIT = 1e14


def condense(local: LocalSystem) -> CondensedBlock:
    """Exact Schur complement of one cell's local system."""
    try:
        cond = np.linalg.cond(local.A_KK)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise CondensationError(
            local.cell_id, f"cell block is singular or ill-conditioned "
            f"(cond ~ {cond:.2e}); is the penalty alpha large enough?")
    X = np.linalg.solve(local.A_KK, local.A_KF)
    w = np.linalg.solve(local.A_KK, local.b_K)
    return CondensedBlock(cell_id=local.cell_id, facet_ids=local.facet_ids,
                          S_local=local.A_FF - local.A_FK @ X,
                          g_local=local.b_F - local.A_FK @ w, X=X, w=w)


def condense_all(A: np.ndarray, b: np.ndarray, ncd: int):
    """Batched condensation of the (nc, nloc, nloc) local systems."""
    A_KK = A[:, :ncd, :ncd]
    A_KF = A[:, :ncd, ncd:]
    A_FK = A[:, ncd:, :ncd]
    A_FF = A[:, ncd:, ncd:]
    try:
        Z = np.linalg.solve(A_KK, np.concatenate([A_KF, b[:, :ncd, None]],
                                                 axis=2))
    except np.linalg.LinAlgError as exc:
        raise CondensationError(-1, f"singular cell block: {exc}")
    X, w = Z[:, :, :-1], Z[:, :, -1]
    S = A_FF - np.einsum("cik,ckj->cij", A_FK, X)
    g = b[:, ncd:] - np.einsum("cik,ck->ci", A_FK, w)
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(g))):
        bad = int(np.argwhere(~np.isfinite(S).all(axis=(1, 2)))[0, 0])
        raise CondensationError(bad, "non-finite Schur complement")
    return S, g, X, w


def assemble_and_solve(S, g, spaces: Spaces, constraints: Constraints
                       ) -> np.ndarray:
    """Scatter the condensed blocks into the global facet system, eliminate
    Dirichlet/pinned dofs, and solve by sparse direct factorization."""
    n = spaces.n_facet_dofs
    gd = spaces.cell_to_facet_dofs()                      # (nc, nft)
    nft = gd.shape[1]
    rows = np.repeat(gd, nft, axis=1).ravel()
    cols = np.tile(gd, (1, nft)).ravel()
    A = sp.coo_matrix((S.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    b = np.zeros(n)
    np.add.at(b, gd.ravel(), g.ravel())

    fixed = constraints.constrained_dofs()
    x_fix = constraints.value_vector(n)
    b = b - A @ x_fix
    free = np.setdiff1d(np.arange(n), fixed, assume_unique=False)
    A_ff = A[free][:, free].tocsc()
    try:
        lu = spla.splu(A_ff)
    except RuntimeError as exc:
        raise GaugeError(
            "global facet system is singular (missing pressure gauge on a "
            f"pure-Dirichlet problem?): {exc}")
    piv = np.abs(lu.U.diagonal())
    if piv.size and piv.min() < 1e-12 * max(piv.max(), 1e-300):
        raise GaugeError(
            "global facet system is numerically singular (pivot ratio "
            f"{piv.min() / piv.max():.2e}); missing pressure gauge on a "
            "pure-Dirichlet problem?")
    x_free = lu.solve(b[free])
    if not np.all(np.isfinite(x_free)):
        raise GaugeError("global facet solve produced non-finite values "
                         "(singular system; missing pressure gauge?)")
    res = np.linalg.norm(A_ff @ x_free - b[free])
    scale = max(np.linalg.norm(b[free]), np.linalg.norm(x_free), 1.0)
    if res > 1e-8 * scale:
        raise GaugeError(f"facet solve residual too large: {res:.2e}")
    y = x_fix.copy()
    y[free] = x_free
    return y


def back_substitute(X, w, spaces: Spaces, y: np.ndarray,
                    time: float = 0.0) -> FieldState:
    """Recover cell fields from the facet solution, cell by cell."""
    gd = spaces.cell_to_facet_dofs()
    z = w - np.einsum("cik,ck->ci", X, y[gd])
    nb, np_ = spaces.nb, spaces.np_
    state = FieldState.zeros(spaces, time=time)
    state.u[:, 0] = z[:, :nb]
    state.u[:, 1] = z[:, nb: 2 * nb]
    state.p = z[:, 2 * nb:]
    state.set_facet_vector(spaces, y)
    return state


def solve_linearized(assembler: Assembler, constraints: Constraints,
                     state_adv: FieldState | None, mode: str,
                     state_n: FieldState | None = None,
                     t: float | None = None,
                     time_out: float = 0.0) -> FieldState:
    """One linear HDG solve: assemble, condense, solve facets, back-substitute."""
    A, b = assembler.assemble_local(state_adv, mode, state_n=state_n, t=t)
    S, g, X, w = condense_all(A, b, assembler.ncd)
    y = assemble_and_solve(S, g, assembler.spaces, constraints)
    return back_substitute(X, w, assembler.spaces, y, time=time_out)


def shift_pressure_mean_zero(state: FieldState, assembler: Assembler) -> None:
    """Post-shift p and pbar so the mean cell pressure vanishes (gauge)."""
    area = float(np.sum(assembler.wdet))
    mean = float(np.einsum("cq,qa,ca->", assembler.wdet, assembler.psi,
                           state.p)) / area
    state.p -= mean
    state.pbar -= mean


def picard_solve(assembler: Assembler, constraints: Constraints,
                 tol: float = 1e-10, max_iter: int = 100,
                 mode: str = "default", pressure_error=None,
                 initial: FieldState | None = None,
                 relaxation: float = 1.0) -> FieldState:
    """Fixed-point iteration for the steady problem.

    mode "default" stops on the relative facet-solution increment;
    mode "error-stagnation" uses the relative pressure-error criterion
    |e^{i+1} - e^i| / (e^{i+1} + e^i) <= 1e-4, which requires a
    `pressure_error(state) -> float` callback (exact solution known).
    """
    spaces = assembler.spaces
    state = initial if initial is not None else FieldState.zeros(spaces)
    y_old = state.facet_vector(spaces)
    e_old = None
    history = []
    stagnation = mode == "error-stagnation"
    if stagnation and pressure_error is None:
        raise ValueError("error-stagnation mode needs a pressure_error "
                         "callback")
    for it in range(max_iter):
        new = solve_linearized(assembler, constraints, state, "steady")
        if relaxation != 1.0 and it > 0:
            y_new = ((1 - relaxation) * y_old
                     + relaxation * new.facet_vector(spaces))
            new.set_facet_vector(spaces, y_new)
        y_new = new.facet_vector(spaces)
        inc = np.linalg.norm(y_new - y_old) / max(np.linalg.norm(y_new),
                                                  1e-300)
        history.append(inc)
        state, y_old = new, y_new
        if not assembler.config.advection_enabled:
            return state
        if stagnation:
            e_new = pressure_error(state)
            if e_old is not None and \
                    abs(e_new - e_old) / max(e_new + e_old, 1e-300) <= 1e-4:
                return state
            e_old = e_new
        elif inc <= tol:
            return state
        elif len(history) >= 3 and inc <= 100 * tol \
                and inc >= 0.5 * history[-2] \
                and history[-2] >= 0.5 * history[-3]:
            # roundoff noise floor: increments plateaued just above tol
            return state
        elif len(history) >= 6 and inc <= max(100 * tol, 1e-6) \
                and min(history[-5:]) >= min(history[:-5]):
            # increments are tiny and stopped improving: the direct solver's
            # roundoff floor, not a stalled iteration
            return state
    raise PicardError(f"Picard iteration did not converge in {max_iter} "
                      f"iterations (last increment {history[-1]:.3e})",
                      history)


def theta_step(state_n: FieldState, assembler: Assembler,
               constraints: Constraints, t_n: float) -> FieldState:
    """One linear theta step from t_n to t_n + dt.

    The returned pressure fields are the theta-average level (identical to
    level n+1 for backward Euler); velocities are level n+1.
    """
    dt = assembler.config.dt
    return solve_linearized(assembler, constraints, None, "transient",
                            state_n=state_n, t=t_n, time_out=t_n + dt)


def project_initial_state(assembler: Assembler, u0, t: float = 0.0
                          ) -> FieldState:
    """Element/facet-wise L2 projection of a velocity field u0(x)."""
    spaces = assembler.spaces
    state = FieldState.zeros(spaces, time=t)
    vals = np.asarray(u0(assembler.x_vol))            # (nc, nq, 2)
    rhs = np.einsum("cq,cqe,qi->cei", assembler.wdet, vals, assembler.phi)
    for c in range(2):
        state.u[:, c] = np.linalg.solve(assembler.Mt,
                                        rhs[:, c][..., None])[..., 0]
    # facet traces: L2 projection on every facet
    from .polybasis import basis_eval, quadrature_rule
    quad = quadrature_rule("interval", 2 * spaces.k + 2)
    chi = basis_eval("interval", spaces.k, quad.points).values
    M = np.einsum("q,qi,qj->ij", quad.weights, chi, chi)
    mesh = spaces.mesh
    s = quad.points[:, 0]
    va = mesh.vertices[mesh.facets[:, 0]]
    vb = mesh.vertices[mesh.facets[:, 1]]
    pts = va[:, None, :] + s[None, :, None] * (vb - va)[:, None, :]
    g = np.asarray(u0(pts))                            # (nf, nq, 2)
    rhs_f = np.einsum("q,qi,fqe->fei", quad.weights, chi, g)
    state.ubar[:] = rhs_f @ np.linalg.inv(M).T
    return state


def monolithic_solve(A: np.ndarray, b: np.ndarray, spaces: Spaces,
                     constraints: Constraints) -> FieldState:
    """Dense solve of the full (cell + facet) coupled system.

    Independent oracle for the condensation path; only sensible on tiny
    meshes.
    """
    mesh = spaces.mesh
    ncd = spaces.cell_block
    n_cell = mesh.num_cells * ncd
    n = n_cell + spaces.n_facet_dofs
    G = np.zeros((n, n))
    rhs = np.zeros(n)
    gd = spaces.cell_to_facet_dofs() + n_cell
    for c in range(mesh.num_cells):
        cd = np.arange(c * ncd, (c + 1) * ncd)
        all_d = np.concatenate([cd, gd[c]])
        G[np.ix_(all_d, all_d)] += A[c]
        rhs[all_d] += b[c]
    fixed = constraints.constrained_dofs() + n_cell
    x_fix = np.zeros(n)
    for d, v in constraints.values.items():
        x_fix[d + n_cell] = v
    rhs = rhs - G @ x_fix
    free = np.setdiff1d(np.arange(n), fixed)
    x = x_fix.copy()
    x[free] = np.linalg.solve(G[np.ix_(free, free)], rhs[free])

    nb = spaces.nb
    state = FieldState.zeros(spaces)
    z = x[:n_cell].reshape(mesh.num_cells, ncd)
    state.u[:, 0] = z[:, :nb]
    state.u[:, 1] = z[:, nb: 2 * nb]
    state.p = z[:, 2 * nb:]
    state.set_facet_vector(spaces, x[n_cell:])
    return state
