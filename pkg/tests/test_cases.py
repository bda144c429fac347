import numpy as np
import pytest

from hdgflow import cases
from hdgflow.polybasis import quadrature_rule


def fd_pde_residual(case, x, t=None, transient=False, dt=1e-6):
    """Pointwise Navier-Stokes residual of the case's exact fields by
    central finite differences; independent of the symbolic forcing."""
    eps = 1e-5
    U = lambda y: np.asarray(case.exact_u(y, t))
    P = lambda y: np.asarray(case.exact_p(y, t))
    lap = np.zeros(x.shape)
    gradp = np.zeros(x.shape)
    gu = np.zeros(x.shape + (2,))
    for d in range(2):
        e = np.zeros(2)
        e[d] = eps
        lap += (U(x + e) - 2 * U(x) + U(x - e)) / eps**2
        gradp[..., d] = (P(x + e) - P(x - e)) / (2 * eps)
        gu[..., d] = (U(x + e) - U(x - e)) / (2 * eps)
    conv = np.einsum("...ed,...d->...e", gu, U(x))
    res = -case.nu * lap + conv + gradp
    if transient:
        res += (np.asarray(case.exact_u(x, t + dt))
                - np.asarray(case.exact_u(x, t - dt))) / (2 * dt)
    if case.reaction is not None:
        R = np.asarray(case.reaction(x))
        res += np.einsum("...ab,...b->...a", R, U(x))
    if case.forcing is not None:
        res -= np.asarray(case.forcing(x, t))
    return res


def mean_pressure(case, bbox, t=None):
    q = quadrature_rule("triangle", 12)
    # split the bbox into two reference triangles mapped by hand
    (x0, y0, x1, y1) = bbox
    A = (x1 - x0) * (y1 - y0)
    pts1 = np.stack([x0 + (x1 - x0) * q.points[:, 0],
                     y0 + (y1 - y0) * q.points[:, 1]], axis=-1)
    pts2 = np.stack([x1 - (x1 - x0) * q.points[:, 0],
                     y1 - (y1 - y0) * q.points[:, 1]], axis=-1)
    val = (np.sum(q.weights * case.exact_p(pts1, t))
           + np.sum(q.weights * case.exact_p(pts2, t))) * A
    return val / A


def test_polynomial_forcing_matches_fd_residual():
    # guards the offline symbolic derivation of the hard-coded polynomials
    case = cases.polynomial_case(nu=0.76)
    rng = np.random.default_rng(11)
    x = rng.uniform(0.05, 0.95, size=(100, 2))
    assert np.max(np.abs(fd_pde_residual(case, x))) < 1e-6


def test_kovasznay_exact_solution_satisfies_pde():
    case = cases.kovasznay_case(Re=40.0)
    rng = np.random.default_rng(3)
    x = rng.uniform((-0.4, -0.4), (0.9, 1.4), size=(60, 2))
    assert np.max(np.abs(fd_pde_residual(case, x))) < 1e-4


def test_coriolis_balance():
    case = cases.coriolis_case(nu=0.3)
    rng = np.random.default_rng(5)
    x = rng.uniform(0.05, 0.95, size=(60, 2))
    assert np.max(np.abs(fd_pde_residual(case, x))) < 1e-9


def test_potential_flow_satisfies_transient_pde():
    case = cases.potential_flow_case(nu=0.02)
    rng = np.random.default_rng(9)
    x = rng.uniform(-0.9, 0.9, size=(60, 2))
    for t in (0.3, 1.5):  # both ramp regimes, away from the kink
        assert np.max(np.abs(fd_pde_residual(case, x, t=t,
                                             transient=True))) < 1e-4


def test_exact_pressures_mean_zero():
    checks = [(cases.kovasznay_case(), (-0.5, -0.5, 1.0, 1.5), None),
              (cases.coriolis_case(), (0, 0, 1, 1), None),
              (cases.polynomial_case(), (0, 0, 1, 1), None),
              (cases.potential_flow_case(), (-1, -1, 1, 1), 0.4),
              (cases.potential_flow_case(), (-1, -1, 1, 1), 1.7)]
    for case, bbox, t in checks:
        if case.name == "kovasznay":
            continue  # its additive constant is not chosen mean-zero
        assert abs(mean_pressure(case, bbox, t)) < 1e-12, case.name


def test_polynomial_velocity_vanishes_on_boundary():
    case = cases.polynomial_case()
    s = np.linspace(0, 1, 64)
    for edge in (np.stack([s, np.zeros_like(s)], -1),
                 np.stack([s, np.ones_like(s)], -1),
                 np.stack([np.zeros_like(s), s], -1),
                 np.stack([np.ones_like(s), s], -1)):
        assert np.max(np.abs(case.exact_u(edge))) < 1e-14


def test_exact_grad_u_consistent():
    for case in (cases.kovasznay_case(), cases.polynomial_case(),
                 cases.potential_flow_case()):
        rng = np.random.default_rng(1)
        x = rng.uniform(0.1, 0.9, size=(30, 2))
        t = 0.5 if case.name == "potential-flow" else None
        eps = 1e-6
        fd = np.zeros((30, 2, 2))
        for d in range(2):
            e = np.zeros(2)
            e[d] = eps
            fd[..., d] = (np.asarray(case.exact_u(x + e, t))
                          - np.asarray(case.exact_u(x - e, t))) / (2 * eps)
        assert np.max(np.abs(fd - case.exact_grad_u(x, t))) < 1e-8, case.name


def test_divergence_free_exact_velocities():
    for case in (cases.kovasznay_case(), cases.polynomial_case(),
                 cases.potential_flow_case(), cases.coriolis_case()):
        rng = np.random.default_rng(2)
        x = rng.uniform(0.1, 0.9, size=(40, 2))
        t = 0.7 if case.name == "potential-flow" else None
        g = case.exact_grad_u(x, t)
        assert np.max(np.abs(g[..., 0, 0] + g[..., 1, 1])) < 1e-12


def test_run_convergence_rates_and_schema(tmp_path):
    out = tmp_path / "conv.csv"
    rows = cases.run_convergence(cases.polynomial_case(), 2, [4, 8],
                                 out_csv=str(out))
    assert [list(r) for r in rows] == [cases.CONVERGENCE_COLUMNS] * 2
    assert 2.8 <= rows[1]["rate_u"] <= 3.4
    header = out.read_text().splitlines()[0]
    assert header == ",".join(cases.CONVERGENCE_COLUMNS)


def test_run_convergence_empty_levels():
    assert cases.run_convergence(cases.polynomial_case(), 2, []) == []


def test_run_transient_schema_and_blowup_guard(tmp_path):
    out = tmp_path / "ts.csv"
    case = cases.potential_flow_case()
    rows, state, asm = cases.run_transient(case, 2, 4, dt=0.01, t_end=0.03,
                                           theta=0.5, out_csv=str(out))
    assert len(rows) == 3
    assert [list(r) for r in rows] == [cases.TIMESERIES_COLUMNS] * 3
    assert rows[-1]["t"] == pytest.approx(0.03)
    header = out.read_text().splitlines()[0]
    assert header == ",".join(cases.TIMESERIES_COLUMNS)


def test_error_stagnation_stopping_mode():
    case = cases.kovasznay_case()
    mesh = case.mesh_factory(4)
    state, asm = cases.solve_steady(case, mesh, 2,
                                    picard_mode="error-stagnation")
    from hdgflow import diagnostics as dg
    rep = dg.error_norms(state, case.exact_u, case.exact_p, asm)
    assert rep.l2_p < 0.05  # coarse-mesh scale per the replication criterion


def test_cylinder_boundary_data():
    case = cases.cylinder2d_case("meshes/cylinder2d.msh")
    bc = case.boundary_velocity()
    x_in = np.array([[0.0, 0.205], [0.0, 0.1]])
    v = bc(x_in)
    assert v[0, 0] == pytest.approx(6 * 0.205 * 0.205 / 0.41**2)
    assert np.all(v[:, 1] == 0)
    x_wall = np.array([[1.0, 0.0], [0.3, 0.41]])
    assert np.max(np.abs(bc(x_wall))) == 0.0
