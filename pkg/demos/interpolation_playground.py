"""How coefficient interpolation behaves across parameter space.

Anchored coefficient matrices are combined by inverse-distance weights over
the k nearest anchors (Mahalanobis metric), which keeps every interpolated
entry inside the convex hull of its neighbors and reproduces anchors exactly.

    python demos/interpolation_playground.py
"""

import numpy as np

from latentrom import BasisSpec, build_grid, shepard_weights
from latentrom.dynamics import DiModel, interpolate_coeffs, knn_neighbors

space = build_grid([[0.7, 0.9], [0.9, 1.1]], [11, 11])
spec = BasisSpec(poly_order=1)
rng = np.random.default_rng(0)

anchors = [np.array(c) for c in
           ([0.7, 0.9], [0.7, 1.1], [0.9, 0.9], [0.9, 1.1], [0.8, 1.0])]
models = [DiModel(xi=rng.normal(size=(4, 2)), spec=spec, owner_mu=mu)
          for mu in anchors]

print("inverse-distance weights for distances [1, 2, 4] at a few powers:")
for p in (1.0, 2.0, 4.0):
    w = shepard_weights(np.array([1.0, 2.0, 4.0]), p)
    print(f"  p={p}: {np.round(w, 4).tolist()}  (sum={w.sum():.12f})")

query = np.array([0.74, 0.98])
idx, dists = knn_neighbors(query, np.stack(anchors), k=4, space=space)
print(f"\nquery {query.tolist()} -> 4 nearest anchors "
      f"{[anchors[i].tolist() for i in idx]}")
print(f"  Mahalanobis distances: {np.round(dists, 3).tolist()}")

blend = interpolate_coeffs(query, models, k=4, p=2.0, space=space)
stack = np.stack([models[i].xi for i in idx])
print("\ninterpolated coefficients stay inside the neighbor envelope:")
print("  min over neighbors:\n", np.round(stack.min(axis=0), 3))
print("  interpolated:\n", np.round(blend.xi, 3))
print("  max over neighbors:\n", np.round(stack.max(axis=0), 3))

exact = interpolate_coeffs(anchors[4], models, k=4, p=2.0, space=space)
print("\nquery at an anchor reproduces its coefficients exactly:",
      np.array_equal(exact.xi, models[4].xi))
