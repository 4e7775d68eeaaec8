"""Discrete parameter space: tensor-product grids and the Mahalanobis metric.

Parameter points are plain 1-D float arrays.  The grid stores its points in
row-major order over dimensions (last dimension varies fastest); the
index <-> coordinate mapping is part of the public contract because heatmap
rows and greedy audit records refer to grid indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Added to zero-variance diagonal entries of the covariance before inversion.
_COV_REG = 1e-12


@dataclass(frozen=True)
class DiscreteParamSpace:
    """Tensor-product grid over a box domain, with a fixed Mahalanobis metric.

    The inverse covariance is computed once from all grid points, so the
    metric is identical for every query over the lifetime of the space.
    Instances are immutable and safe for concurrent reads.
    """

    bounds: np.ndarray      # (dim, 2) closed intervals
    resolution: np.ndarray  # (dim,) points per axis, each >= 2
    points: np.ndarray      # (n_points, dim) row-major over dimensions
    cov_inv: np.ndarray     # (dim, dim) inverse sample covariance
    axes: tuple = field(default_factory=tuple)  # per-dim coordinate arrays

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def index_of(self, mu, tol: float = 1e-12) -> int:
        """Return the grid index whose point equals ``mu`` within ``tol``.

        Raises KeyError if ``mu`` is not a grid point.
        """
        mu = np.asarray(mu, dtype=float)
        dists = np.max(np.abs(self.points - mu[None, :]), axis=1)
        idx = int(np.argmin(dists))
        if dists[idx] > tol:
            raise KeyError(f"{mu.tolist()} is not a grid point")
        return idx


def build_grid(bounds, resolution) -> DiscreteParamSpace:
    """Build an evenly spaced tensor-product grid including both endpoints.

    Args:
        bounds: sequence of (lo, hi) pairs, one per parameter dimension.
        resolution: per-dimension point counts, each >= 2.
    """
    bounds = np.asarray(bounds, dtype=float)
    resolution = np.asarray(resolution, dtype=int)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] == 0:
        raise ConfigError(f"bounds must be a (dim, 2) array, got shape {bounds.shape}")
    if resolution.shape != (bounds.shape[0],):
        raise ConfigError("resolution must have one entry per dimension")
    if np.any(bounds[:, 0] >= bounds[:, 1]):
        raise ConfigError(f"degenerate interval in bounds {bounds.tolist()}")
    if np.any(resolution < 2):
        raise ConfigError(f"resolution must be >= 2 per dimension, got {resolution.tolist()}")

    axes = tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, resolution))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel(order="C") for m in mesh], axis=1)

    cov = np.atleast_2d(np.cov(points, rowvar=False, ddof=1))
    diag = np.diag(cov).copy()
    reg = np.where(diag < _COV_REG, _COV_REG, 0.0)
    cov = cov + np.diag(reg)
    cov_inv = np.linalg.inv(cov)
    # Enforce exact symmetry against round-off in the inverse.
    cov_inv = 0.5 * (cov_inv + cov_inv.T)

    return DiscreteParamSpace(
        bounds=bounds,
        resolution=resolution,
        points=points,
        cov_inv=cov_inv,
        axes=axes,
    )


def mahalanobis_distance(p, q, space: DiscreteParamSpace) -> float:
    """Covariance-normalized distance sqrt((p-q)^T C^-1 (p-q))."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != (space.dim,) or q.shape != (space.dim,):
        raise ValueError(
            f"dimension mismatch: points {p.shape}/{q.shape} vs space dim {space.dim}"
        )
    d = p - q
    return float(np.sqrt(d @ space.cov_inv @ d))


def mahalanobis_distances(p, anchors, space: DiscreteParamSpace) -> np.ndarray:
    """Vectorized metric from one point to a stack of anchors (n, dim)."""
    p = np.asarray(p, dtype=float)
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if p.shape != (space.dim,) or anchors.shape[1] != space.dim:
        raise ValueError("dimension mismatch in distance query")
    d = anchors - p[None, :]
    q = np.einsum("ni,ij,nj->n", d, space.cov_inv, d)
    # Guard tiny negative round-off before the sqrt.
    return np.sqrt(np.maximum(q, 0.0))


def corner_points(space: DiscreteParamSpace) -> list[np.ndarray]:
    """The 2^dim extreme grid points, in row-major (binary-counter) order."""
    corners = []
    for code in range(2 ** space.dim):
        pt = np.array(
            [space.bounds[d, (code >> (space.dim - 1 - d)) & 1] for d in range(space.dim)]
        )
        corners.append(pt)
    return corners
