import numpy as np
import pytest

from latentrom import burgers
from latentrom.burgers import (FomConfig, Trajectory, boundary_mask,
                               initial_state, jacobian, load_trajectory,
                               residual, rhs, save_trajectory, simulate, step)
from latentrom.errors import ConfigError, NonConvergenceError

MU = np.array([0.7, 0.9])


def dense_rhs(u_flat, cfg, advection=True):
    """Independent dense-loop oracle for the semi-discrete right-hand side."""
    nx, ny = cfg.nx, cfg.ny
    dx, dy = cfg.dx, cfg.dy
    nu = 1.0 / cfg.re
    u = u_flat[: nx * ny].reshape(nx, ny)
    v = u_flat[nx * ny:].reshape(nx, ny)
    fu = np.zeros((nx, ny))
    fv = np.zeros((nx, ny))
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            lap_u = ((u[i + 1, j] - 2 * u[i, j] + u[i - 1, j]) / dx**2
                     + (u[i, j + 1] - 2 * u[i, j] + u[i, j - 1]) / dy**2)
            lap_v = ((v[i + 1, j] - 2 * v[i, j] + v[i - 1, j]) / dx**2
                     + (v[i, j + 1] - 2 * v[i, j] + v[i, j - 1]) / dy**2)
            fu[i, j] = nu * lap_u
            fv[i, j] = nu * lap_v
            if advection:
                fu[i, j] -= (u[i, j] * (u[i, j] - u[i - 1, j]) / dx
                             + v[i, j] * (u[i, j] - u[i, j - 1]) / dy)
                fv[i, j] -= (u[i, j] * (v[i, j] - v[i - 1, j]) / dx
                             + v[i, j] * (v[i, j] - v[i, j - 1]) / dy)
    return np.concatenate([fu.ravel(), fv.ravel()])


def dense_residual(u_n, u_prev, cfg):
    r = u_n - u_prev - cfg.dt * dense_rhs(u_n, cfg)
    bnd = boundary_mask(cfg)
    r[bnd] = u_n[bnd]
    return r


# --- configuration -------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        FomConfig(nx=2)
    with pytest.raises(ConfigError):
        FomConfig(dt=-0.1)
    with pytest.raises(ConfigError):
        FomConfig(re=0.0)
    with pytest.raises(ConfigError):
        FomConfig(dt=0.3, t_final=1.0)  # not an integer number of steps
    cfg = FomConfig()
    assert cfg.n_t == 200
    assert cfg.n_u == 1800


def test_paper_scale_preset():
    cfg = FomConfig.paper_scale()
    assert (cfg.nx, cfg.ny, cfg.n_u) == (60, 60, 7200)
    assert cfg.dt == 1 / 200 and cfg.t_final == 1.0
    assert FomConfig.paper_scale(dt=0.01).dt == 0.01


# --- initial condition -----------------------------------------------------------

def test_initial_state_origin_value():
    # 21 points over [-3, 3] place a node exactly at the origin
    cfg = FomConfig(nx=21, ny=21)
    u = initial_state(MU, cfg)
    origin = 10 * 21 + 10
    assert u[origin] == pytest.approx(0.7, abs=1e-15)
    assert u[21 * 21 + origin] == pytest.approx(0.7, abs=1e-15)


def test_initial_state_boundary_zero():
    cfg = FomConfig(nx=12, ny=9)
    u = initial_state(MU, cfg)
    assert np.all(u[boundary_mask(cfg)] == 0.0)


def test_initial_state_offset_node():
    # node at x = (0.9, 0): exponent -(0.9^2)/(0.9^2) = -1
    cfg = FomConfig(nx=21, ny=21)
    u = initial_state(MU, cfg)
    idx = 13 * 21 + 10
    assert u[idx] == pytest.approx(0.7 * np.exp(-1.0), rel=1e-12)


def test_initial_state_invalid_width():
    with pytest.raises(ConfigError):
        initial_state([0.7, 0.0], FomConfig(nx=5, ny=5))


# --- right-hand side -------------------------------------------------------------

def test_rhs_zero_state():
    cfg = FomConfig(nx=6, ny=7)
    assert np.all(rhs(np.zeros(cfg.n_u), cfg) == 0.0)


def test_rhs_interior_constant_field():
    cfg = FomConfig(nx=9, ny=9)
    u = np.zeros(cfg.n_u)
    interior = ~boundary_mask(cfg)
    u[interior] = 2.5
    f = rhs(u, cfg)
    # stencils fully inside the constant region see no variation
    deep = np.zeros((cfg.nx, cfg.ny), dtype=bool)
    deep[2:-2, 2:-2] = True
    deep = np.concatenate([deep.ravel(), deep.ravel()])
    assert np.all(f[deep] == 0.0)


def test_rhs_linear_ramp_hand_stencil():
    cfg = FomConfig(nx=5, ny=5)
    xg, yg = burgers.node_coords(cfg)
    alpha, beta = 0.3, -0.2
    ramp = alpha * xg + beta * yg + 0.05
    u = np.concatenate([ramp.ravel(), ramp.ravel()])
    f = rhs(u, cfg)
    i, j = 2, 2
    val = ramp[i, j]
    # backward differences of a ramp are exact; the Laplacian vanishes
    expected = -(val * alpha + val * beta)
    assert f[i * cfg.ny + j] == pytest.approx(expected, abs=1e-14)
    assert f[cfg.n_nodes + i * cfg.ny + j] == pytest.approx(expected, abs=1e-14)


def test_rhs_matches_dense_oracle():
    cfg = FomConfig(nx=5, ny=5)
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = rng.normal(size=cfg.n_u)
        assert np.allclose(rhs(u, cfg), dense_rhs(u, cfg), atol=1e-13)


def test_rhs_advection_hook_gives_pure_diffusion():
    cfg = FomConfig(nx=6, ny=5)
    rng = np.random.default_rng(1)
    u = rng.normal(size=cfg.n_u)
    assert np.allclose(rhs(u, cfg, advection=False),
                       dense_rhs(u, cfg, advection=False), atol=1e-13)


def test_rhs_boundary_rows_zero():
    cfg = FomConfig(nx=7, ny=6)
    u = np.random.default_rng(2).normal(size=cfg.n_u)
    assert np.all(rhs(u, cfg)[boundary_mask(cfg)] == 0.0)


# --- residual ----------------------------------------------------------------------

def test_residual_fixed_point():
    cfg = FomConfig(nx=5, ny=5)
    z = np.zeros(cfg.n_u)
    assert np.all(residual(z, z, cfg) == 0.0)


def test_residual_matches_dense_oracle():
    cfg = FomConfig(nx=5, ny=5)
    rng = np.random.default_rng(4)
    for _ in range(5):
        u_n = rng.normal(size=cfg.n_u)
        u_prev = rng.normal(size=cfg.n_u)
        assert np.allclose(residual(u_n, u_prev, cfg),
                           dense_residual(u_n, u_prev, cfg), atol=1e-13)


def test_residual_of_accepted_step_below_tol():
    cfg = FomConfig(nx=8, ny=8)
    u_prev = initial_state(MU, cfg)
    u_n, _ = step(u_prev, cfg)
    assert np.linalg.norm(residual(u_n, u_prev, cfg)) <= cfg.newton_tol


# --- Jacobian ------------------------------------------------------------------------

def test_jacobian_matches_finite_differences():
    cfg = FomConfig(nx=5, ny=5)
    rng = np.random.default_rng(5)
    u = rng.normal(size=cfg.n_u) * 0.5
    u_prev = rng.normal(size=cfg.n_u) * 0.5
    jac = jacobian(u, cfg).toarray()
    eps = 1e-6
    fd = np.zeros_like(jac)
    for k in range(cfg.n_u):
        e = np.zeros(cfg.n_u)
        e[k] = eps
        fd[:, k] = (residual(u + e, u_prev, cfg)
                    - residual(u - e, u_prev, cfg)) / (2 * eps)
    scale = np.abs(fd).max()
    assert np.abs(jac - fd).max() / scale < 1e-6


def test_jacobian_boundary_rows_identity():
    cfg = FomConfig(nx=5, ny=6)
    u = np.random.default_rng(6).normal(size=cfg.n_u)
    jac = jacobian(u, cfg).toarray()
    bnd = np.where(boundary_mask(cfg))[0]
    for b in bnd:
        row = np.zeros(cfg.n_u)
        row[b] = 1.0
        assert np.array_equal(jac[b], row)


# --- stepping -----------------------------------------------------------------------

def test_step_zero_is_fixed_point():
    cfg = FomConfig(nx=5, ny=5)
    u, hist = step(np.zeros(cfg.n_u), cfg)
    assert np.all(u == 0.0)
    assert len(hist) == 1  # converged at the first residual check


def test_step_newton_history_monotone():
    cfg = FomConfig(nx=30, ny=30)
    u0 = initial_state(MU, cfg)
    _, hist = step(u0, cfg)
    assert all(b < a for a, b in zip(hist, hist[1:]))


def test_step_nonconvergence_error():
    cfg = FomConfig(nx=8, ny=8, dt=0.5, t_final=1.0, newton_max_iter=1,
                    newton_tol=1e-14)
    u0 = initial_state([0.9, 1.1], cfg)
    with pytest.raises(NonConvergenceError) as err:
        step(u0, cfg)
    assert len(err.value.residual_history) >= 1


def test_first_order_in_time():
    # global backward-Euler error halves with the step, judged against a
    # dt/8 reference on a short smooth run
    cfg_ref = FomConfig(nx=11, ny=11, dt=0.0025, t_final=0.2)
    ref = simulate([0.5, 1.0], cfg_ref).snapshots[-1]
    errs = []
    for dt in (0.02, 0.01):
        cfg = FomConfig(nx=11, ny=11, dt=dt, t_final=0.2)
        errs.append(np.linalg.norm(simulate([0.5, 1.0], cfg).snapshots[-1] - ref))
    ratio = errs[0] / errs[1]
    assert 1.5 < ratio < 2.6


# --- simulate ------------------------------------------------------------------------

def test_simulate_snapshot_count_and_initial_state():
    cfg = FomConfig(nx=10, ny=10, dt=1 / 200, t_final=0.05)
    traj = simulate(MU, cfg)
    assert traj.snapshots.shape == (11, cfg.n_u)
    assert np.array_equal(traj.snapshots[0], initial_state(MU, cfg))
    assert np.array_equal(traj.derivatives[0], rhs(traj.snapshots[0], cfg))


def test_simulate_paper_step_count():
    cfg = FomConfig(nx=6, ny=6, dt=1 / 200, t_final=1.0)
    traj = simulate([0.8, 1.0], cfg)
    assert traj.snapshots.shape[0] == 201


def test_simulate_smooth_decay_no_nans():
    cfg = FomConfig(nx=30, ny=30)
    traj = simulate([0.9, 1.1], cfg)
    assert np.all(np.isfinite(traj.snapshots))
    assert np.all(np.isfinite(traj.derivatives))
    sums = traj.snapshots.sum(axis=1)
    assert sums[0] > 0
    # bulk quantity decays smoothly: no sign flips, bounded steps
    assert np.all(np.abs(np.diff(sums)) < 0.02 * sums[0])


def test_simulate_boundary_bitwise_zero():
    cfg = FomConfig(nx=12, ny=12, dt=0.01, t_final=0.1)
    traj = simulate(MU, cfg)
    bnd = boundary_mask(cfg)
    assert np.all(traj.snapshots[:, bnd] == 0.0)


def test_accepted_steps_satisfy_residual_tolerance():
    cfg = FomConfig(nx=9, ny=9, dt=0.01, t_final=0.05)
    traj = simulate(MU, cfg)
    for n in range(1, traj.snapshots.shape[0]):
        r = residual(traj.snapshots[n], traj.snapshots[n - 1], cfg)
        assert np.linalg.norm(r) <= cfg.newton_tol


def test_step_counter_counts_accepted_steps():
    cfg = FomConfig(nx=6, ny=6, dt=0.02, t_final=0.1)
    before = burgers.STEP_COUNTER.count
    simulate(MU, cfg)
    assert burgers.STEP_COUNTER.count - before == cfg.n_t


# --- trajectory file format ------------------------------------------------------------

def test_trajectory_roundtrip(tmp_path):
    cfg = FomConfig(nx=7, ny=6, dt=0.02, t_final=0.1)
    traj = simulate(MU, cfg)
    path = tmp_path / "t.glsd"
    save_trajectory(traj, path)
    back = load_trajectory(path)
    assert np.array_equal(back.snapshots, traj.snapshots)
    assert np.array_equal(back.derivatives, traj.derivatives)
    assert np.array_equal(back.mu, traj.mu)
    assert back.dt == traj.dt


def test_trajectory_file_layout(tmp_path):
    snaps = np.arange(12, dtype=float).reshape(3, 4)
    traj = Trajectory(mu=np.array([0.7, 0.9]), dt=0.25, snapshots=snaps,
                      derivatives=snaps * 2.0)
    path = tmp_path / "layout.glsd"
    save_trajectory(traj, path)
    blob = path.read_bytes()
    assert blob[:5] == b"GLSD1"
    assert int.from_bytes(blob[5:9], "little") == 4      # N_u
    assert int.from_bytes(blob[9:13], "little") == 3     # snapshots
    assert np.frombuffer(blob[13:21], dtype="<f8")[0] == 0.25
    assert int.from_bytes(blob[21:25], "little") == 2    # param dim
    assert np.frombuffer(blob[25:41], dtype="<f8").tolist() == [0.7, 0.9]
    body = np.frombuffer(blob[41:], dtype="<f8")
    assert body[:12].tolist() == snaps.ravel().tolist()
    assert body[12:].tolist() == (snaps * 2).ravel().tolist()
    assert len(blob) == 41 + 8 * 24


def test_trajectory_requires_derivatives(tmp_path):
    traj = Trajectory(mu=np.array([0.7]), dt=0.1,
                      snapshots=np.zeros((2, 4)), derivatives=None)
    with pytest.raises(ValueError):
        save_trajectory(traj, tmp_path / "x.glsd")


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.glsd"
    path.write_bytes(b"NOPE!" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_trajectory(path)
