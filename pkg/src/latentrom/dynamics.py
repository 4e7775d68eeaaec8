"""Latent dynamics models: basis library, per-anchor coefficients, fixed-step
integration, and convex interpolation of coefficients across parameter space.

Basis ordering is normative (tests and serialized models depend on it):

    [1,
     z_1, ..., z_n,
     z_1^2, z_1 z_2, ..., z_n^2   (pairs (i, j) with i <= j, lexicographic),
     sin z_1, cos z_1, ..., sin z_n, cos z_n]

with the polynomial blocks controlled by ``poly_order`` (0, 1, or 2) and the
trigonometric block by ``include_trig``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .params import DiscreteParamSpace, mahalanobis_distances

# Below this Mahalanobis distance a query is treated as an exact anchor hit,
# avoiding the singular inverse-distance weight.
EXACT_HIT_TOL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Shape of the basis library applied to latent coordinates."""

    poly_order: int = 1
    include_trig: bool = False

    def __post_init__(self):
        if self.poly_order not in (0, 1, 2):
            raise ValueError(f"poly_order must be 0, 1, or 2, got {self.poly_order}")

    def n_basis(self, n_z: int) -> int:
        n = 1
        if self.poly_order >= 1:
            n += n_z
        if self.poly_order >= 2:
            n += n_z * (n_z + 1) // 2
        if self.include_trig:
            n += 2 * n_z
        return n


@dataclass
class DiModel:
    """One anchored coefficient matrix: zdot ~ basis(z) @ xi.

    ``xi`` has shape (n_basis, N_z); ``owner_mu`` is the training parameter
    the model is anchored to.
    """

    xi: np.ndarray
    spec: BasisSpec
    owner_mu: np.ndarray

    @property
    def n_z(self) -> int:
        return self.xi.shape[1]

    def copy(self) -> "DiModel":
        return DiModel(xi=self.xi.copy(), spec=self.spec, owner_mu=np.array(self.owner_mu))


def basis_batch(z: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Evaluate the library on a batch of latent rows -> (batch, n_basis)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    b, n_z = z.shape
    cols = [np.ones((b, 1))]
    if spec.poly_order >= 1:
        cols.append(z)
    if spec.poly_order >= 2:
        quad = [z[:, i] * z[:, j] for i in range(n_z) for j in range(i, n_z)]
        cols.append(np.stack(quad, axis=1))
    if spec.include_trig:
        trig = np.empty((b, 2 * n_z))
        trig[:, 0::2] = np.sin(z)
        trig[:, 1::2] = np.cos(z)
        cols.append(trig)
    return np.concatenate(cols, axis=1)


def basis(z, spec: BasisSpec) -> np.ndarray:
    """Library row for a single latent vector, in the canonical ordering."""
    return basis_batch(np.asarray(z, dtype=float)[None, :], spec)[0]


def basis_vjp(z: np.ndarray, d_theta: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Accumulate d(loss)/dz given d(loss)/d(basis_batch(z)) rows."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    b, n_z = z.shape
    dz = np.zeros_like(z)
    col = 1
    if spec.poly_order >= 1:
        dz += d_theta[:, col:col + n_z]
        col += n_z
    if spec.poly_order >= 2:
        for i in range(n_z):
            for j in range(i, n_z):
                g = d_theta[:, col]
                dz[:, i] += g * z[:, j]
                dz[:, j] += g * z[:, i]
                col += 1
    if spec.include_trig:
        for i in range(n_z):
            dz[:, i] += d_theta[:, col] * np.cos(z[:, i])
            dz[:, i] -= d_theta[:, col + 1] * np.sin(z[:, i])
            col += 2
    return dz


def latent_rhs(z, model: DiModel) -> np.ndarray:
    """Latent velocity basis(z) @ xi for one latent state."""
    z = np.asarray(z, dtype=float)
    theta = basis(z, model.spec)
    if theta.shape[0] != model.xi.shape[0]:
        raise ValueError(
            f"basis length {theta.shape[0]} does not match coefficient rows "
            f"{model.xi.shape[0]}"
        )
    return theta @ model.xi


def integrate_latent(z0, model: DiModel, dt: float, n_steps: int) -> np.ndarray:
    """Classical fixed-step RK4 on the latent ODE; returns (n_steps+1, N_z)."""
    z0 = np.asarray(z0, dtype=float)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    out = np.empty((n_steps + 1, z0.shape[0]))
    out[0] = z0
    z = z0
    # overflow on a diverging trajectory is expected and reported explicitly
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            k1 = latent_rhs(z, model)
            k2 = latent_rhs(z + 0.5 * dt * k1, model)
            k3 = latent_rhs(z + 0.5 * dt * k2, model)
            k4 = latent_rhs(z + dt * k3, model)
            z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(z)):
                raise DivergenceError(f"latent state non-finite at step {k}", index=k)
            out[k] = z
    return out


def knn_neighbors(mu, anchors, k: int, space: DiscreteParamSpace):
    """Indices and Mahalanobis distances of the k nearest anchors.

    Ties are broken toward the lower anchor index (stable sort), so the
    result is deterministic.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.shape[0] == 0:
        raise ValueError("anchor list is empty")
    if not 1 <= k <= anchors.shape[0]:
        raise ValueError(f"k={k} out of range for {anchors.shape[0]} anchors")
    dists = mahalanobis_distances(mu, anchors, space)
    order = np.argsort(dists, kind="stable")[:k]
    return order, dists[order]


def shepard_weights(distances, p: float = 2.0) -> np.ndarray:
    """Inverse-distance weights d_i^-p normalized to a partition of unity.

    Any distance below the exact-hit threshold short-circuits: the closest
    such anchor takes weight one and the rest zero.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("need a non-empty 1-D distance vector")
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    w = np.zeros_like(d)
    if np.any(d < EXACT_HIT_TOL):
        w[int(np.argmin(d))] = 1.0
        return w
    inv = d ** (-p)
    return inv / inv.sum()


def interpolate_coeffs(mu, models: list[DiModel], k: int, p: float,
                       space: DiscreteParamSpace) -> DiModel:
    """Convex combination of the k nearest anchors' coefficient matrices."""
    if not models:
        raise ValueError("no anchored models to interpolate")
    spec = models[0].spec
    if any(m.spec != spec for m in models):
        raise ValueError("all models must share one basis spec")
    anchors = np.stack([np.asarray(m.owner_mu, dtype=float) for m in models])
    idx, dists = knn_neighbors(mu, anchors, k, space)
    if dists[0] < EXACT_HIT_TOL:
        hit = models[int(idx[0])]
        return DiModel(xi=hit.xi.copy(), spec=spec, owner_mu=np.asarray(mu, dtype=float))
    weights = shepard_weights(dists, p)
    xi = np.zeros_like(models[0].xi)
    for w_i, m_i in zip(weights, idx):
        xi += w_i * models[int(m_i)].xi
    return DiModel(xi=xi, spec=spec, owner_mu=np.asarray(mu, dtype=float))
