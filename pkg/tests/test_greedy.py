import numpy as np
import pytest

from latentrom import burgers
from latentrom.burgers import FomConfig, simulate
from latentrom.dynamics import BasisSpec
from latentrom.errors import ConfigError, ExhaustedSpaceError
from latentrom.greedy import (GreedyConfig, GreedyState, estimate_max_error,
                              fit_error_model, greedy_train, select_sample)
from latentrom.params import build_grid
from latentrom.rom import residual_indicator
from latentrom.training import LossWeights, TrainConfig

TINY_FOM = FomConfig(nx=8, ny=8, dt=0.02, t_final=0.2, newton_tol=1e-10)
TINY_SPACE_BOUNDS = [[0.7, 0.9], [0.9, 1.1]]


def test_indicator_on_exact_trajectory_below_tol():
    traj = simulate([0.8, 1.0], TINY_FOM)
    e = residual_indicator(traj, traj.mu, TINY_FOM)
    assert e <= TINY_FOM.newton_tol


def test_indicator_perturbation_oracle():
    cfg = FomConfig(nx=8, ny=8, dt=0.02, t_final=0.2, newton_tol=1e-12,
                    newton_max_iter=20)
    traj = simulate([0.8, 1.0], cfg)
    base = residual_indicator(traj, traj.mu, cfg)
    # perturb one evaluated snapshot (strided indices for n_t=10 hit n=10 only)
    n_eval = 10
    rng = np.random.default_rng(0)
    delta = np.zeros(cfg.n_u)
    interior = ~burgers.boundary_mask(cfg)
    delta[interior] = 1e-2 * rng.normal(size=interior.sum())

    perturbed = traj.snapshots.copy()
    perturbed[n_eval] += delta
    traj_p = burgers.Trajectory(mu=traj.mu, dt=traj.dt, snapshots=perturbed,
                                derivatives=traj.derivatives)
    e_p = residual_indicator(traj_p, traj.mu, cfg)

    u = traj.snapshots[n_eval]
    jump = delta - cfg.dt * (burgers.rhs(u + delta, cfg) - burgers.rhs(u, cfg))
    n_ts = 1  # round(0.1 * 10)
    expected_rise = np.linalg.norm(jump) / (n_ts + 1)
    assert e_p - base == pytest.approx(expected_rise, rel=1e-6)


def _mk_state(space, sampled_idx=(), seed=0):
    state = GreedyState(rng_seed=seed, rng=np.random.default_rng(seed))
    state.sampled_idx = list(sampled_idx)
    state.sampled = [space.points[i] for i in sampled_idx]
    return state


def test_select_sample_subset_of_one():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=9, subset_size=1)
    state = _mk_state(space)
    mu, gi, subset, values = select_sample(state, space, cfg,
                                           indicator=lambda mu: 0.0)
    assert len(subset) == 1
    assert gi == subset[0]


def test_select_sample_argmax_on_injected_values():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=9, subset_size=9)
    state = _mk_state(space)
    injected = {i: v for i, v in
                zip(range(9), [0.1, 0.9, 0.3, 0.0, 0.2, 0.1, 0.05, 0.0, 0.4])}

    def indicator(mu):
        return injected[space.index_of(mu)]

    mu, gi, subset, values = select_sample(state, space, cfg, indicator)
    assert gi == 1
    assert np.array_equal(mu, space.points[1])


def test_select_sample_tie_breaks_to_lower_grid_index():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=9, subset_size=9)
    state = _mk_state(space)
    mu, gi, subset, values = select_sample(state, space, cfg,
                                           indicator=lambda mu: 1.0)
    assert gi == min(subset)


def test_select_sample_never_returns_sampled():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=9, subset_size=9)
    state = _mk_state(space, sampled_idx=(0, 4, 8))
    for trial in range(5):
        _, gi, subset, _ = select_sample(state, space, cfg,
                                         indicator=lambda mu: 0.0)
        assert gi not in (0, 4, 8)
        assert set(subset).isdisjoint({0, 4, 8})


def test_select_sample_deterministic_in_seed():
    space = build_grid(TINY_SPACE_BOUNDS, [5, 5])
    cfg = GreedyConfig(n_target=25, subset_size=4)
    picks = []
    for _ in range(2):
        state = _mk_state(space, seed=42)
        _, gi, subset, _ = select_sample(state, space, cfg,
                                         indicator=lambda mu: float(mu.sum()))
        picks.append((gi, tuple(subset)))
    assert picks[0] == picks[1]


def test_select_sample_exhausted_space():
    space = build_grid(TINY_SPACE_BOUNDS, [2, 2])
    cfg = GreedyConfig(n_target=4, subset_size=4)
    state = _mk_state(space, sampled_idx=(0, 1, 2, 3))
    with pytest.raises(ExhaustedSpaceError):
        select_sample(state, space, cfg, indicator=lambda mu: 0.0)


def test_fit_error_model_exact_line():
    e_res = np.array([0.0, 0.1, 0.2, 0.5])
    e_max = 2.0 * e_res + 0.1
    slope, intercept = fit_error_model(e_res, e_max)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(0.1, abs=1e-12)


def test_fit_error_model_two_points_interpolates():
    slope, intercept = fit_error_model([1.0, 3.0], [5.0, 9.0])
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(3.0, abs=1e-12)


def test_fit_error_model_noisy_recovery():
    rng = np.random.default_rng(1)
    e_res = rng.uniform(0.1, 1.0, size=200)
    noise = 0.01 * rng.normal(size=200)
    e_max = 1.7 * e_res + 0.05 + noise
    slope, intercept = fit_error_model(e_res, e_max)
    # standard error of the slope at this noise level is ~0.003
    assert slope == pytest.approx(1.7, abs=0.02)
    assert intercept == pytest.approx(0.05, abs=0.02)


def test_fit_error_model_degenerate_abscissa():
    with pytest.warns(RuntimeWarning):
        slope, intercept = fit_error_model([0.3, 0.3, 0.3], [1.0, 2.0, 3.0])
    assert slope == 0.0
    assert intercept == pytest.approx(2.0)


def test_fit_error_model_needs_two_points():
    with pytest.raises(ValueError):
        fit_error_model([0.1], [0.2])


def test_estimate_max_error():
    assert estimate_max_error((2.0, 0.1), 0.05) == pytest.approx(0.2)
    assert estimate_max_error((1.0, 0.0), 0.37) == pytest.approx(0.37)
    assert estimate_max_error((1.0, -2.0), 0.5) == 0.0  # clamped


# --- end-to-end greedy loop on a miniature problem --------------------------------

@pytest.fixture(scope="module")
def mini_run():
    space = build_grid(TINY_SPACE_BOUNDS, [5, 5])
    train_cfg = TrainConfig(weights=LossWeights(0.1, 0.1), lr=2e-3,
                            batch_size=16)
    greedy_cfg = GreedyConfig(n_target=6, n_epochs_between=40, subset_size=5)
    arch = [TINY_FOM.n_u, 10, 2]
    enc, dec, state = greedy_train(space, TINY_FOM, arch, BasisSpec(1),
                                   train_cfg, greedy_cfg, seed=0)
    return space, enc, dec, state, greedy_cfg


def test_greedy_reaches_target_without_duplicates(mini_run):
    space, enc, dec, state, cfg = mini_run
    assert len(state.db) == cfg.n_target
    assert len(state.sampled_idx) == len(set(state.sampled_idx))
    assert len(state.sampled) == len(state.db.entries)


def test_greedy_grows_strictly_and_starts_from_corners(mini_run):
    space, enc, dec, state, cfg = mini_run
    counts = [r["n_sampled"] for r in state.audit]
    assert counts == sorted(counts)
    first4 = {tuple(m) for m in state.sampled[:4]}
    assert first4 == {(0.7, 0.9), (0.7, 1.1), (0.9, 0.9), (0.9, 1.1)}


def test_greedy_indicator_needs_no_fom_steps(mini_run):
    space, enc, dec, state, cfg = mini_run
    for record in state.audit:
        assert record["fom_steps_during_indicator"] == 0


def test_greedy_histories_aligned_with_audit(mini_run):
    space, enc, dec, state, cfg = mini_run
    n_iter = len(state.audit)
    assert len(state.e_res_history) == n_iter
    assert len(state.e_max_history) == n_iter
    for record, e_res, e_max in zip(state.audit, state.e_res_history,
                                    state.e_max_history):
        assert record["e_res"] == e_res
        assert len(e_res) == len(e_max) == record["n_sampled"]
    # terminal iteration selects nothing; all earlier iterations select
    assert state.audit[-1]["sampled_mu"] is None
    assert all(r["sampled_mu"] is not None for r in state.audit[:-1])


def test_greedy_loss_history_spans_all_rounds(mini_run):
    space, enc, dec, state, cfg = mini_run
    assert len(state.loss_history) == len(state.audit) * cfg.n_epochs_between
    epochs = [row[0] for row in state.loss_history]
    assert epochs == list(range(len(epochs)))


def test_greedy_budget_equals_initial_points_trains_only():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=4, n_epochs_between=3, subset_size=4)
    enc, dec, state = greedy_train(space, TINY_FOM, [TINY_FOM.n_u, 6, 2],
                                   BasisSpec(1), TrainConfig(batch_size=None),
                                   cfg, seed=1)
    assert len(state.db) == 4
    assert len(state.audit) == 1
    assert state.audit[0]["sampled_mu"] is None


def test_greedy_center_initialization():
    space = build_grid(TINY_SPACE_BOUNDS, [5, 5])
    cfg = GreedyConfig(n_target=1, n_epochs_between=2, subset_size=3,
                       init="center")
    enc, dec, state = greedy_train(space, TINY_FOM, [TINY_FOM.n_u, 6, 2],
                                   BasisSpec(1), TrainConfig(batch_size=None),
                                   cfg, seed=2)
    assert len(state.sampled) == 1
    assert state.sampled[0].tolist() == [0.8, 1.0]  # exact grid center


def test_greedy_rejects_undersized_target():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=2)
    with pytest.raises(ConfigError):
        greedy_train(space, TINY_FOM, [TINY_FOM.n_u, 6, 2], BasisSpec(1),
                     TrainConfig(), cfg, seed=0)


def test_greedy_determinism():
    space = build_grid(TINY_SPACE_BOUNDS, [3, 3])
    cfg = GreedyConfig(n_target=5, n_epochs_between=5, subset_size=3)

    def run():
        enc, dec, state = greedy_train(space, TINY_FOM, [TINY_FOM.n_u, 6, 2],
                                       BasisSpec(1),
                                       TrainConfig(batch_size=8), cfg, seed=7)
        return state

    s1, s2 = run(), run()
    assert [tuple(m) for m in s1.sampled] == [tuple(m) for m in s2.sampled]
    assert s1.audit == s2.audit
    assert s1.loss_history == s2.loss_history
