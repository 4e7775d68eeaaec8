"""Solve the full-order 2D Burgers model for one parameter and inspect it.

The solver semi-discretizes the PDE with backward differences for advection
and central differences for diffusion, then marches in time with implicit
backward Euler (Newton + sparse direct solves).  Run from the repository
root:

    python demos/run_fom.py
"""

import time

import numpy as np

from latentrom import FomConfig, save_trajectory, simulate

cfg = FomConfig(nx=30, ny=30, re=10000.0, dt=1 / 200, t_final=1.0)
mu = np.array([0.7, 0.9])  # amplitude, width of the initial Gaussian pulse

print(f"simulating mu = {mu.tolist()} on a {cfg.nx}x{cfg.ny} grid "
      f"({cfg.n_u} unknowns, {cfg.n_t} implicit steps)")
t0 = time.perf_counter()
traj = simulate(mu, cfg)
elapsed = time.perf_counter() - t0

peak = np.abs(traj.snapshots).max(axis=1)
print(f"done in {elapsed:.2f} s")
print(f"snapshots: {traj.snapshots.shape[0]} x {traj.snapshots.shape[1]}")
print(f"peak |u|: t=0 -> {peak[0]:.4f}, t=0.5 -> {peak[cfg.n_t // 2]:.4f}, "
      f"t=1 -> {peak[-1]:.4f}")

out = "fom_a0.7_w0.9.glsd"
save_trajectory(traj, out)
print(f"wrote {out} (binary trajectory, loadable with load_trajectory)")
