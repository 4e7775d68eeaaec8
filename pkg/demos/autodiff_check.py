"""The differentiation machinery behind joint training, checked numerically.

The training loss couples the autoencoder and the latent dynamics models
through two Jacobian-vector products, so its exact gradient needs second
derivatives of the activation.  This script builds a tiny instance and
compares every analytic gradient entry with central finite differences.

    python demos/autodiff_check.py
"""

import numpy as np

from latentrom import (BasisSpec, LossWeights, Trajectory, TrainingDatabase,
                       gradients, init_mlp, total_loss)
from latentrom.dynamics import DiModel
from latentrom.training import DbEntry

rng = np.random.default_rng(0)
n_u, n_z, n_snap = 6, 2, 4
spec = BasisSpec(poly_order=2)

mu = np.array([0.8, 1.0])
db = TrainingDatabase([DbEntry(
    mu=mu,
    trajectory=Trajectory(mu=mu, dt=0.1,
                          snapshots=0.5 * rng.normal(size=(n_snap, n_u)),
                          derivatives=0.5 * rng.normal(size=(n_snap, n_u))),
    di=DiModel(xi=0.3 * rng.normal(size=(spec.n_basis(n_z), n_z)), spec=spec,
               owner_mu=mu))])
enc = init_mlp([n_u, 4, n_z], seed=1)
dec = init_mlp([n_z, 4, n_u], seed=2)
w = LossWeights(0.1, 0.1)

dwe, dbe, dwd, dbd, d_xis, breakdown = gradients(db, enc, dec, w)
print(f"loss {breakdown.total:.6f} = recon {breakdown.recon:.6f} "
      f"+ 0.1 * zdot {breakdown.zdot:.6f} + 0.1 * udot {breakdown.udot:.6f}")

eps = 1e-6
worst = 0.0
names = (["enc W", "enc b", "dec W", "dec b", "xi"])
grads = [dwe, dbe, dwd, dbd, d_xis]
arrays = [enc.weights, enc.biases, dec.weights, dec.biases, db.xis]
for name, arrs, gs in zip(names, arrays, grads):
    block_worst = 0.0
    for arr, g in zip(arrs, gs):
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            keep = arr[i]
            arr[i] = keep + eps
            up = total_loss(db, enc, dec, w).total
            arr[i] = keep - eps
            down = total_loss(db, enc, dec, w).total
            arr[i] = keep
            fd = (up - down) / (2 * eps)
            block_worst = max(block_worst,
                              abs(g[i] - fd) / max(abs(g[i]), abs(fd), 1e-8))
            it.iternext()
    worst = max(worst, block_worst)
    print(f"  {name}: worst relative mismatch vs finite differences "
          f"{block_worst:.2e}")
print(f"overall worst mismatch: {worst:.2e} (tolerance 1e-5)")
