import numpy as np
import pytest

from hdgflow import solver as sv
from hdgflow.forms import Assembler, ProblemConfig
from hdgflow.mesh import generate_rect_mesh
from hdgflow.spaces import (Constraints, FieldState, apply_dirichlet,
                            build_spaces)


def poiseuille(x, t=None):
    out = np.zeros(x.shape)
    out[..., 0] = x[..., 1] * (1 - x[..., 1])
    return out


def setup(nx=2, ny=2, k=2, nu=1.0, advection=True, forcing=None):
    mesh = generate_rect_mesh(nx, ny, (0, 0, 1, 1))
    spaces = build_spaces(mesh, k)
    cfg = ProblemConfig(nu=nu, advection_enabled=advection)
    asm = Assembler(mesh, spaces, cfg, forcing=forcing)
    cons = apply_dirichlet(spaces, mesh.boundary_facets, poiseuille, 0.0,
                           pinned_dof=int(spaces.facet_pressure_dofs(0)[0]))
    return mesh, spaces, asm, cons


@pytest.mark.parametrize("k", [1, 2, 3])
def test_condensation_matches_monolithic_stokes(k):
    mesh, spaces, asm, cons = setup(2, 2, k, advection=False)
    A, b = asm.assemble_local(None, "steady")
    S, g, X, w = sv.condense_all(A, b, asm.ncd)
    y = sv.assemble_and_solve(S, g, spaces, cons)
    st1 = sv.back_substitute(X, w, spaces, y, time=0.0)
    st2 = sv.monolithic_solve(A, b, spaces, cons)
    scale = max(np.max(np.abs(st2.u)), 1e-12)
    for fa, fb in ((st1.u, st2.u), (st1.p, st2.p), (st1.ubar, st2.ubar),
                   (st1.pbar, st2.pbar)):
        assert np.max(np.abs(fa - fb)) < 1e-10 * scale


@pytest.mark.parametrize("k", [1, 2, 3])
def test_condensation_matches_monolithic_picard_step(k):
    mesh, spaces, asm, cons = setup(2, 2, k, nu=0.05)
    stokes = sv.picard_solve(Assembler(mesh, spaces,
                                       ProblemConfig(nu=0.05,
                                                     advection_enabled=False)),
                             cons)
    A, b = asm.assemble_local(stokes, "steady")
    S, g, X, w = sv.condense_all(A, b, asm.ncd)
    y = sv.assemble_and_solve(S, g, spaces, cons)
    st1 = sv.back_substitute(X, w, spaces, y, time=0.0)
    st2 = sv.monolithic_solve(A, b, spaces, cons)
    scale = max(np.max(np.abs(st2.u)), 1e-12)
    assert np.max(np.abs(st1.u - st2.u)) < 1e-10 * scale
    assert np.max(np.abs(st1.p - st2.p)) < 1e-10 * scale


def test_stokes_picard_converges_in_one_iteration():
    mesh, spaces, asm, cons = setup(advection=False)
    state = sv.picard_solve(asm, cons)  # returns after the first solve
    A, b = asm.assemble_local(None, "steady")
    x = asm.state_to_local(state)
    cell_res = np.einsum("crk,ck->cr", A, x)[:, :asm.ncd] - b[:, :asm.ncd]
    assert np.max(np.abs(cell_res)) < 1e-10


def test_zero_data_gives_zero_state():
    mesh = generate_rect_mesh(2, 2, (0, 0, 1, 1))
    spaces = build_spaces(mesh, 2)
    asm = Assembler(mesh, spaces, ProblemConfig(nu=1.0))
    cons = apply_dirichlet(spaces, mesh.boundary_facets,
                           lambda x, t: np.zeros(x.shape), 0.0,
                           pinned_dof=int(spaces.facet_pressure_dofs(0)[0]))
    state = sv.picard_solve(asm, cons)
    assert np.max(np.abs(state.u)) < 1e-12
    assert np.max(np.abs(state.p)) < 1e-12


def test_missing_gauge_pin_raises():
    mesh, spaces, asm, _ = setup(advection=False)
    cons = apply_dirichlet(spaces, mesh.boundary_facets, poiseuille, 0.0,
                           pinned_dof=None)  # singular pressure gauge
    A, b = asm.assemble_local(None, "steady")
    S, g, X, w = sv.condense_all(A, b, asm.ncd)
    with pytest.raises(sv.GaugeError):
        sv.assemble_and_solve(S, g, spaces, cons)


def test_picard_nonconvergence_carries_history():
    mesh, spaces, asm, cons = setup(nu=0.01)
    with pytest.raises(sv.PicardError) as err:
        sv.picard_solve(asm, cons, tol=1e-16, max_iter=2)
    assert len(err.value.history) == 2


def test_error_stagnation_mode_needs_callback():
    mesh, spaces, asm, cons = setup()
    with pytest.raises(ValueError):
        sv.picard_solve(asm, cons, mode="error-stagnation")


def test_shift_pressure_mean_zero():
    mesh, spaces, asm, cons = setup(advection=False)
    state = sv.picard_solve(asm, cons)
    sv.shift_pressure_mean_zero(state, asm)
    mean = np.einsum("cq,qa,ca->", asm.wdet, asm.psi, state.p)
    assert abs(mean) < 1e-12


def test_project_initial_state_reproduces_space_member():
    mesh = generate_rect_mesh(2, 2, (0, 0, 1, 1))
    spaces = build_spaces(mesh, 2)
    asm = Assembler(mesh, spaces, ProblemConfig(nu=1.0))

    def quad_field(x):
        return np.stack([x[..., 0] * x[..., 1], x[..., 1]**2 - 1],
                        axis=-1)

    state = sv.project_initial_state(asm, quad_field)
    vals = np.einsum("cej,qj->cqe", state.u, asm.phi)
    assert np.max(np.abs(vals - quad_field(asm.x_vol))) < 1e-12


def test_theta_step_reproduces_steady_state():
    # stepping from the steady solution with steady data stays put
    mesh, spaces, asm, cons = setup(3, 3, k=2, advection=False)
    steady = sv.picard_solve(asm, cons)
    cfg = ProblemConfig(nu=1.0, theta=1.0, dt=0.1, advection_enabled=False)
    asm_t = Assembler(mesh, spaces, cfg)
    new = sv.theta_step(steady, asm_t, cons, t_n=0.0)
    assert np.max(np.abs(new.u - steady.u)) < 1e-9


def test_linearity_in_forcing_stokes():
    def f1(x, t):
        return np.stack([np.sin(x[..., 0]), x[..., 1]], axis=-1)

    def f2(x, t):
        return np.stack([x[..., 1]**2, np.cos(x[..., 0])], axis=-1)

    def fsum(x, t):
        return f1(x, t) + f2(x, t)

    states = []
    for f in (f1, f2, fsum):
        mesh, spaces, asm, cons = setup(2, 2, advection=False, forcing=f)
        zero_bc = apply_dirichlet(
            spaces, mesh.boundary_facets, lambda x, t: np.zeros(x.shape),
            0.0, pinned_dof=int(spaces.facet_pressure_dofs(0)[0]))
        states.append(sv.picard_solve(asm, zero_bc))
    assert np.max(np.abs(states[0].u + states[1].u - states[2].u)) < 1e-12


def test_condensation_error_on_singular_block():
    mesh, spaces, asm, cons = setup(1, 1, k=1)
    A, b = asm.assemble_local(None, "steady")
    A[:, :asm.ncd, :asm.ncd] = 0.0
    with pytest.raises(sv.CondensationError):
        sv.condense_all(A, b, asm.ncd)
