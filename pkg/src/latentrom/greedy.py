"""Adaptive greedy sampling driven by the physics-informed residual indicator.

Each iteration trains the joint model for a fixed number of epochs, scores
every training sample with the residual indicator and its true maximum
relative error (from the stored trajectories, so no extra full-order solves),
refits the linear indicator-to-error estimate, and either terminates or picks
the next sample as the indicator-argmax over a random candidate subset.
The training round of the terminal iteration doubles as the final training
pass, so exit-time histories always describe the returned model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rom
from .burgers import STEP_COUNTER, FomConfig, simulate
from .dynamics import BasisSpec, DiModel
from .errors import ConfigError, DivergenceError, ExhaustedSpaceError
from .mlp import MlpParams, init_mlp
from .params import DiscreteParamSpace, corner_points
from .training import (AdamState, DbEntry, TrainConfig, TrainingDatabase,
                       pack_params, train_epochs, warm_start_xi)


@dataclass(frozen=True)
class GreedyConfig:
    """Sampling-loop settings.

    ``tol`` <= 0 disables error-estimate termination, leaving the sample
    budget ``n_target`` as the only stopping rule.  ``n_ts_fraction`` sets
    the share of time steps the indicator evaluates.
    """

    n_target: int = 16
    tol: float = 0.0
    n_epochs_between: int = 200
    subset_size: int = 32
    n_ts_fraction: float = 0.1
    init: str = "corners"          # or "center"
    indicator_window: str = "strided"  # or "head"

    def __post_init__(self):
        if self.n_target < 1:
            raise ConfigError("n_target must be >= 1")
        if not 0 < self.n_ts_fraction <= 1:
            raise ConfigError("n_ts_fraction must lie in (0, 1]")
        if self.subset_size < 1:
            raise ConfigError("subset_size must be >= 1")
        if self.init not in ("corners", "center"):
            raise ConfigError(f"unknown init strategy {self.init!r}")


@dataclass
class GreedyState:
    """Everything the sampling loop accumulates.

    Histories hold one list per iteration (aligned with audit records); the
    fit is the latest (slope, intercept) of the error estimate.
    """

    sampled: list = field(default_factory=list)        # parameter vectors
    sampled_idx: list = field(default_factory=list)    # grid indices
    db: TrainingDatabase = field(default_factory=TrainingDatabase)
    e_res_history: list = field(default_factory=list)
    e_max_history: list = field(default_factory=list)
    fit: tuple = (0.0, 0.0)
    rng_seed: object = None
    rng: np.random.Generator = None
    audit: list = field(default_factory=list)
    loss_history: list = field(default_factory=list)


def error_indicator(mu, enc: MlpParams, dec: MlpParams, di_models,
                    space: DiscreteParamSpace, fom_cfg: FomConfig,
                    k: int = 4, p: float = 2.0, n_ts_fraction: float = 0.1,
                    window: str = "strided") -> float:
    """Residual indicator for one parameter, computed from predictions only.

    A diverging prediction returns +inf so the candidate becomes maximally
    attractive to the sampler (the audit record flags it).
    """
    try:
        pred = rom.predict(mu, enc, dec, di_models, space, fom_cfg, k, p)
    except DivergenceError:
        return float("inf")
    return rom.residual_indicator(pred, mu, fom_cfg, n_ts_fraction, window)


def select_sample(state: GreedyState, space: DiscreteParamSpace,
                  cfg: GreedyConfig, indicator):
    """Pick the next parameter: indicator-argmax over a random subset.

    ``indicator`` is a callable mu -> float (injected for testability).
    Candidates are drawn uniformly without replacement from the unsampled
    grid points using the state's generator; ties break toward the lower
    grid index.  Returns ``(mu_star, grid_index, subset_indices, values)``.
    """
    taken = set(state.sampled_idx)
    remaining = np.array([i for i in range(space.n_points) if i not in taken])
    if remaining.size == 0:
        raise ExhaustedSpaceError("every grid point has been sampled")
    n_draw = min(cfg.subset_size, remaining.size)
    subset = np.sort(state.rng.choice(remaining, size=n_draw, replace=False))
    values = np.array([indicator(space.points[i]) for i in subset])
    best = subset[int(np.argmax(values))]  # argmax takes the first maximum
    return space.points[best].copy(), int(best), subset, values


def fit_error_model(e_res, e_max) -> tuple[float, float]:
    """Ordinary least squares of the true errors on the indicator values."""
    e_res = np.asarray(e_res, dtype=float)
    e_max = np.asarray(e_max, dtype=float)
    if e_res.size < 2:
        raise ValueError("need at least 2 points for the error fit")
    if np.ptp(e_res) == 0.0:
        warnings.warn("degenerate error fit: all indicator values equal",
                      RuntimeWarning)
        return 0.0, float(np.mean(e_max))
    slope, intercept = np.polyfit(e_res, e_max, 1)
    return float(slope), float(intercept)


def estimate_max_error(fit: tuple[float, float], e_res: float) -> float:
    """Estimated parameter-space maximum relative error, clamped at zero."""
    slope, intercept = fit
    return max(0.0, slope * e_res + intercept)


def _json_safe(values) -> list:
    return [float(v) if np.isfinite(v) else None for v in values]


def _initial_points(space: DiscreteParamSpace, cfg: GreedyConfig):
    if cfg.init == "corners":
        pts = corner_points(space)
    else:
        # nearest grid point to the domain center (exact for odd resolutions)
        mid = np.array([0.5 * (lo + hi) for lo, hi in space.bounds])
        nearest = int(np.argmin(np.max(np.abs(space.points - mid[None, :]), axis=1)))
        pts = [space.points[nearest].copy()]
    idx = [space.index_of(p) for p in pts]
    return pts, idx


def greedy_train(space: DiscreteParamSpace, fom_cfg: FomConfig,
                 arch: list[int], basis_spec: BasisSpec,
                 train_cfg: TrainConfig, greedy_cfg: GreedyConfig, seed,
                 k: int = 4, p: float = 2.0, activation: str = "tanh",
                 log=None):
    """Full adaptive training run.

    ``arch`` lists the encoder layer sizes input-to-latent; the decoder is
    the mirror image.  Returns ``(enc, dec, state)`` with the database, audit
    records, loss history, and error histories inside ``state``.
    """
    if greedy_cfg.n_target > space.n_points:
        raise ConfigError("n_target exceeds the number of grid points")
    say = log or (lambda msg: None)
    n_z = arch[-1]
    root = np.random.SeedSequence(seed)
    ss_enc, ss_dec, ss_greedy, ss_batch = root.spawn(4)
    enc = init_mlp(arch, activation, seed=ss_enc)
    dec = init_mlp(list(reversed(arch)), activation, seed=ss_dec)
    rng_batch = np.random.default_rng(ss_batch)

    state = GreedyState(rng_seed=seed, rng=np.random.default_rng(ss_greedy))

    init_pts, init_idx = _initial_points(space, greedy_cfg)
    if greedy_cfg.n_target < len(init_pts):
        raise ConfigError(
            f"n_target={greedy_cfg.n_target} is below the {len(init_pts)} initial points")
    for mu0, gi in zip(init_pts, init_idx):
        say(f"initial sample {mu0.tolist()}")
        traj = simulate(mu0, fom_cfg)
        xi0 = warm_start_xi(mu0, state.db, basis_spec, n_z, k, p, space)
        state.db.add(DbEntry(mu=mu0, trajectory=traj,
                             di=DiModel(xi=xi0, spec=basis_spec, owner_mu=mu0)))
        state.sampled.append(mu0)
        state.sampled_idx.append(gi)

    adam = AdamState.for_params(pack_params(enc, dec, state.db.xis),
                                lr=train_cfg.lr, beta1=train_cfg.adam_beta1,
                                beta2=train_cfg.adam_beta2, eps=train_cfg.adam_eps)

    def indicator(mu):
        return error_indicator(mu, enc, dec, state.db.di_models, space, fom_cfg,
                               k, p, greedy_cfg.n_ts_fraction,
                               greedy_cfg.indicator_window)

    epoch_offset = 0
    iteration = 0
    while True:
        iteration += 1
        rows = train_epochs(state.db, enc, dec, adam,
                            greedy_cfg.n_epochs_between, train_cfg, rng_batch)
        state.loss_history.extend(
            (epoch_offset + r[0], *r[1:]) for r in rows)
        epoch_offset += greedy_cfg.n_epochs_between

        steps_before = STEP_COUNTER.count
        e_res, e_max = [], []
        for entry in state.db.entries:
            pred = rom.predict(entry.mu, enc, dec, state.db.di_models, space,
                               fom_cfg, k, p)
            e_res.append(rom.residual_indicator(
                pred, entry.mu, fom_cfg, greedy_cfg.n_ts_fraction,
                greedy_cfg.indicator_window))
            e_max.append(rom.max_relative_error(entry.trajectory, pred))
        state.e_res_history.append(e_res)
        state.e_max_history.append(e_max)
        e_v_res = float(np.max(e_res))
        finite = np.isfinite(e_res) & np.isfinite(e_max)
        if finite.sum() >= 2:
            state.fit = fit_error_model(np.asarray(e_res)[finite],
                                        np.asarray(e_max)[finite])
            est = estimate_max_error(state.fit, e_v_res)
        else:
            est = float("inf")  # too few usable pairs to calibrate the estimate

        done = len(state.db) >= greedy_cfg.n_target or \
            (greedy_cfg.tol > 0 and est <= greedy_cfg.tol)

        # strict-JSON audit records: non-finite values become null
        record = {
            "iteration": iteration,
            "n_sampled": len(state.db),
            "e_res": _json_safe(e_res),
            "e_max": _json_safe(e_max),
            "fit_slope": state.fit[0],
            "fit_intercept": state.fit[1],
            "estimated_max_error": est if np.isfinite(est) else None,
            "sampled_mu": None,
            "sampled_grid_index": None,
            "subset_grid_indices": [],
            "subset_indicators": [],
        }

        if not done:
            mu_star, gi, subset, values = select_sample(state, space,
                                                        greedy_cfg, indicator)
            record["sampled_mu"] = mu_star.tolist()
            record["sampled_grid_index"] = gi
            record["subset_grid_indices"] = [int(i) for i in subset]
            record["subset_indicators"] = _json_safe(values)
            if not np.all(np.isfinite(values)):
                record["diverged_candidates"] = [
                    int(i) for i, v in zip(subset, values) if not np.isfinite(v)]
        record["fom_steps_during_indicator"] = STEP_COUNTER.count - steps_before
        state.audit.append(record)
        say(f"iteration {iteration}: |D|={len(state.db)} "
            f"e_res_max={e_v_res:.4g} est_max_err={est:.4g}"
            + (f" -> sample {record['sampled_mu']}" if not done else " -> done"))

        if done:
            break

        traj = simulate(mu_star, fom_cfg)
        xi0 = warm_start_xi(mu_star, state.db, basis_spec, n_z, k, p, space)
        state.db.add(DbEntry(mu=mu_star, trajectory=traj,
                             di=DiModel(xi=xi0, spec=basis_spec, owner_mu=mu_star)))
        state.sampled.append(mu_star)
        state.sampled_idx.append(gi)
        adam.append_slot(xi0.shape)

    return enc, dec, state
