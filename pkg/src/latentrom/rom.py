"""End-to-end reduced-order prediction and its evaluation.

A prediction for a test parameter encodes the analytic initial condition,
interpolates the anchored coefficient matrices to the query, integrates the
latent ODE over the full time window, and decodes every latent state.  No
full-order steps are taken anywhere on this path.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import burgers, mlp
from .burgers import FomConfig, Trajectory
from .dynamics import DiModel, basis_batch, integrate_latent, interpolate_coeffs
from .mlp import MlpParams
from .params import DiscreteParamSpace

#: Relative-error denominators are floored here to keep near-zero-norm
#: snapshots from blowing up the metric.
NORM_FLOOR = 1e-12


def predict(mu, enc: MlpParams, dec: MlpParams, di_models: list[DiModel],
            space: DiscreteParamSpace, fom_cfg: FomConfig,
            k: int = 4, p: float = 2.0) -> Trajectory:
    """Reduced-order trajectory for one parameter.

    The returned trajectory also carries physical velocities obtained by
    pushing the latent velocities through the decoder Jacobian, so it uses
    the same file format as full-order output.
    """
    mu = np.asarray(mu, dtype=float)
    u0 = burgers.initial_state(mu, fom_cfg)
    z0 = mlp.encode(u0, enc)
    k_eff = min(k, len(di_models))
    model = interpolate_coeffs(mu, di_models, k_eff, p, space)
    z = integrate_latent(z0, model, fom_cfg.dt, fom_cfg.n_t)
    zdot = basis_batch(z, model.spec) @ model.xi
    uhat, udot_hat, _ = mlp.forward_tangent(z, zdot, dec)
    return Trajectory(mu=mu, dt=fom_cfg.dt, snapshots=uhat, derivatives=udot_hat)


def max_relative_error(u: Trajectory, uhat: Trajectory) -> float:
    """Worst-over-time relative 2-norm discrepancy, relative to ``u``."""
    a, b = u.snapshots, uhat.snapshots
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    num = np.linalg.norm(b - a, axis=1)
    den = np.maximum(np.linalg.norm(a, axis=1), NORM_FLOOR)
    return float(np.max(num / den))


def indicator_indices(n_t: int, n_ts_fraction: float = 0.1,
                      window: str = "strided") -> np.ndarray:
    """Time-step indices at which the residual indicator is evaluated.

    ``strided`` spreads the evaluations across the whole window (stride
    ``n_t // n_ts``, ending at ``n_t``); ``head`` uses the first steps
    1..n_ts.  The n=0 term of the indicator is identically zero and is never
    evaluated.
    """
    if not 0 < n_ts_fraction <= 1:
        raise ValueError("n_ts_fraction must lie in (0, 1]")
    n_ts = max(1, round(n_ts_fraction * n_t))
    if window == "strided":
        stride = max(1, n_t // n_ts)
        idx = stride * np.arange(1, n_ts + 1)
        return idx[idx <= n_t]
    if window == "head":
        return np.arange(1, min(n_ts, n_t) + 1)
    raise ValueError(f"unknown indicator window {window!r}")


def residual_indicator(traj: Trajectory, mu, fom_cfg: FomConfig,
                       n_ts_fraction: float = 0.1,
                       window: str = "strided") -> float:
    """Mean governing-equation residual norm over the evaluation indices.

    Physics-informed error proxy: evaluates the implicit-step residual on the
    supplied (predicted) states only, so it costs no full-order solves.  The
    normalization divides by ``n_ts + 1`` with the n=0 term defined as zero.
    """
    if not np.all(np.isfinite(traj.snapshots)):
        return float("inf")
    idx = indicator_indices(traj.n_steps, n_ts_fraction, window)
    total = 0.0
    for n in idx:
        r = burgers.residual(traj.snapshots[n], traj.snapshots[n - 1], fom_cfg)
        total += float(np.linalg.norm(r))
    return total / (len(idx) + 1)


# --- full-grid evaluation ----------------------------------------------------

@dataclass
class HeatmapTable:
    """Per-grid-point evaluation results over the discrete parameter space."""

    mus: np.ndarray                 # (n_points, dim)
    max_rel_error: np.ndarray       # (n_points,), NaN marks a failed point
    residual_indicator: np.ndarray  # (n_points,), NaN marks a failed point
    sampled: np.ndarray             # (n_points,) bool
    failed: list = field(default_factory=list)  # indices of failed points

    def to_csv(self, path) -> None:
        dim = self.mus.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"mu_{d + 1}" for d in range(dim)]
                            + ["max_rel_error", "residual_indicator", "sampled"])
            for i in range(self.mus.shape[0]):
                writer.writerow([repr(float(v)) for v in self.mus[i]]
                                + [repr(float(self.max_rel_error[i])),
                                   repr(float(self.residual_indicator[i])),
                                   int(self.sampled[i])])

    @property
    def grid_max_error(self) -> float:
        ok = np.isfinite(self.max_rel_error)
        return float(np.max(self.max_rel_error[ok])) if ok.any() else float("nan")


def fom_cache_key(mu, cfg: FomConfig) -> str:
    """Stable cache filename for one full-order solution."""
    cfg_blob = json.dumps({
        "domain": cfg.domain, "nx": cfg.nx, "ny": cfg.ny, "re": cfg.re,
        "dt": cfg.dt, "t_final": cfg.t_final, "newton_tol": cfg.newton_tol,
        "newton_max_iter": cfg.newton_max_iter,
    }, sort_keys=True)
    h = hashlib.sha256(cfg_blob.encode()).hexdigest()[:12]
    mu_tag = "_".join(f"{float(v):.12g}" for v in np.asarray(mu, dtype=float))
    return f"fom_{h}_mu_{mu_tag}.glsd"


def fom_solution(mu, cfg: FomConfig, cache_dir=None) -> Trajectory:
    """Full-order solve with optional on-disk caching."""
    if cache_dir is None:
        return burgers.simulate(mu, cfg)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / fom_cache_key(mu, cfg)
    if path.exists():
        return burgers.load_trajectory(path)
    traj = burgers.simulate(mu, cfg)
    burgers.save_trajectory(traj, path)
    return traj


def evaluate_grid(enc: MlpParams, dec: MlpParams, di_models: list[DiModel],
                  space: DiscreteParamSpace, fom_cfg: FomConfig,
                  k: int = 4, p: float = 2.0, cache_dir=None,
                  n_ts_fraction: float = 0.1, window: str = "strided",
                  log=None) -> HeatmapTable:
    """Evaluate the ROM against the FOM at every point of the discrete space.

    Failures at individual points are recorded (NaN row values) without
    aborting the sweep.  Points equal to an anchored training parameter are
    flagged as sampled.
    """
    n = space.n_points
    errs = np.full(n, np.nan)
    inds = np.full(n, np.nan)
    sampled = np.zeros(n, dtype=bool)
    anchors = np.stack([np.asarray(m.owner_mu, dtype=float) for m in di_models])
    failed = []
    for i in range(n):
        mu = space.points[i]
        if np.min(np.max(np.abs(anchors - mu[None, :]), axis=1)) < 1e-12:
            sampled[i] = True
        try:
            truth = fom_solution(mu, fom_cfg, cache_dir)
            pred = predict(mu, enc, dec, di_models, space, fom_cfg, k, p)
            errs[i] = max_relative_error(truth, pred)
            inds[i] = residual_indicator(pred, mu, fom_cfg, n_ts_fraction, window)
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            failed.append(i)
            if log is not None:
                log(f"grid point {i} ({mu.tolist()}) failed: {exc}")
    return HeatmapTable(mus=space.points.copy(), max_rel_error=errs,
                        residual_indicator=inds, sampled=sampled, failed=failed)


def measure_speedup(mu, enc: MlpParams, dec: MlpParams, di_models,
                    space: DiscreteParamSpace, fom_cfg: FomConfig,
                    n_trials: int = 5, k: int = 4, p: float = 2.0) -> dict:
    """Median wall-clock ratio of full-order simulate to reduced-order predict.

    One untimed warmup run of each side is excluded from the medians.
    """
    if n_trials < 3:
        raise ValueError("need at least 3 trials")
    burgers.simulate(mu, fom_cfg)
    predict(mu, enc, dec, di_models, space, fom_cfg, k, p)
    fom_times, rom_times = [], []
    for _ in range(n_trials):
        t0 = time.perf_counter()
        burgers.simulate(mu, fom_cfg)
        fom_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        predict(mu, enc, dec, di_models, space, fom_cfg, k, p)
        rom_times.append(time.perf_counter() - t0)
    fom_med = float(np.median(fom_times))
    rom_med = float(np.median(rom_times))
    return {
        "mu": np.asarray(mu, dtype=float).tolist(),
        "n_trials": n_trials,
        "fom_seconds": fom_times,
        "rom_seconds": rom_times,
        "fom_median_seconds": fom_med,
        "rom_median_seconds": rom_med,
        "speedup": fom_med / rom_med,
    }
