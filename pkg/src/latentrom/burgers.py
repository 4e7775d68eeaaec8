"""Full-order 2D Burgers solver on a uniform grid.

Semi-discretization: first-order backward differences for advection (fixed
orientation toward decreasing index, both components), second-order central
differences for diffusion.  Time integration is implicit backward Euler,
solved per step by Newton iteration with the analytic sparse Jacobian.

State layout: both velocity components flattened and concatenated,
``[u.ravel(), v.ravel()]`` with C-order ``(nx, ny)`` fields, so
``N_u = 2 * nx * ny``.  Homogeneous Dirichlet rows are kept in the system as
identity rows with zero right-hand side; accepted states are bitwise zero on
the boundary.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigError, NonConvergenceError

_MAGIC = b"GLSD1"


class _StepCounter:
    """Counts accepted implicit time steps, for instrumentation."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


#: Global counter incremented once per accepted backward-Euler step.  Lets
#: callers prove that a code path (e.g. the greedy error indicator) performs
#: no full-order solves.  Not thread-safe; treat as test instrumentation.
STEP_COUNTER = _StepCounter()


@dataclass(frozen=True)
class FomConfig:
    """Geometry, physics, and solver settings for the full-order model."""

    domain: tuple = ((-3.0, 3.0), (-3.0, 3.0))
    nx: int = 30
    ny: int = 30
    re: float = 10000.0
    dt: float = 1.0 / 200.0
    t_final: float = 1.0
    newton_tol: float = 1e-8
    newton_max_iter: int = 10

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ConfigError(f"grid must be at least 3x3, got {self.nx}x{self.ny}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ConfigError("dt and t_final must be positive")
        if self.re <= 0:
            raise ConfigError("Reynolds number must be positive")
        n_t = round(self.t_final / self.dt)
        if n_t < 1 or abs(n_t * self.dt - self.t_final) > 1e-12:
            raise ConfigError(
                f"t_final={self.t_final} is not an integer multiple of dt={self.dt}"
            )
        dom = np.asarray(self.domain, dtype=float)
        if dom.shape != (2, 2) or np.any(dom[:, 0] >= dom[:, 1]):
            raise ConfigError(f"invalid domain {self.domain}")

    @classmethod
    def paper_scale(cls, **overrides) -> "FomConfig":
        """60x60 preset (7200 unknowns); desk-scale 30x30 is the default."""
        merged = {"nx": 60, "ny": 60, **overrides}
        return cls(**merged)

    @property
    def n_t(self) -> int:
        return round(self.t_final / self.dt)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_u(self) -> int:
        return 2 * self.nx * self.ny

    @property
    def dx(self) -> float:
        return (self.domain[0][1] - self.domain[0][0]) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.domain[1][1] - self.domain[1][0]) / (self.ny - 1)


@dataclass
class Trajectory:
    """Snapshot matrix for one parameter, with the semi-discrete velocities.

    ``snapshots`` has shape (n_t + 1, N_u); ``derivatives`` holds the
    analytic right-hand side evaluated at each snapshot (same shape).
    """

    mu: np.ndarray
    dt: float
    snapshots: np.ndarray
    derivatives: np.ndarray = field(repr=False, default=None)

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def n_u(self) -> int:
        return self.snapshots.shape[1]


# --- grid geometry ----------------------------------------------------------

def node_coords(cfg: FomConfig):
    """(nx, ny) meshgrid arrays of node x- and y-coordinates."""
    x = np.linspace(cfg.domain[0][0], cfg.domain[0][1], cfg.nx)
    y = np.linspace(cfg.domain[1][0], cfg.domain[1][1], cfg.ny)
    return np.meshgrid(x, y, indexing="ij")


def boundary_mask(cfg: FomConfig) -> np.ndarray:
    """Boolean mask over the full state vector marking Dirichlet entries."""
    m = np.zeros((cfg.nx, cfg.ny), dtype=bool)
    m[0, :] = m[-1, :] = True
    m[:, 0] = m[:, -1] = True
    flat = m.ravel()
    return np.concatenate([flat, flat])


_OPERATOR_CACHE: dict = {}


def _operators(cfg: FomConfig):
    """Sparse backward-difference and Laplacian operators, interior rows only.

    Returned matrices act on one flattened component field (nx*ny).  Rows for
    boundary nodes are identically zero, which keeps every downstream product
    consistent with the Dirichlet convention without explicit masking.
    """
    key = (cfg.nx, cfg.ny, cfg.domain)
    if key in _OPERATOR_CACHE:
        return _OPERATOR_CACHE[key]

    nx, ny, dx, dy = cfg.nx, cfg.ny, cfg.dx, cfg.dy
    ix, iy = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")
    ctr = (ix * ny + iy).ravel()
    left, right = ctr - ny, ctr + ny
    down, up = ctr - 1, ctr + 1
    n = nx * ny

    def build(rows, cols, vals):
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )

    one = np.ones_like(ctr, dtype=float)
    d_x = build([ctr, ctr], [ctr, left], [one / dx, -one / dx])
    d_y = build([ctr, ctr], [ctr, down], [one / dy, -one / dy])
    lap = build(
        [ctr, ctr, ctr, ctr, ctr],
        [ctr, left, right, down, up],
        [
            one * (-2.0 / dx**2 - 2.0 / dy**2),
            one / dx**2,
            one / dx**2,
            one / dy**2,
            one / dy**2,
        ],
    )
    _OPERATOR_CACHE[key] = (d_x, d_y, lap)
    return _OPERATOR_CACHE[key]


# --- model operations -------------------------------------------------------

def initial_state(mu, cfg: FomConfig) -> np.ndarray:
    """Gaussian initial pulse, identical in both velocity components.

    Interior nodes carry ``a * exp(-(x^2 + y^2) / w^2)``; boundary nodes are
    set to exact zero.
    """
    mu = np.asarray(mu, dtype=float)
    a, w = float(mu[0]), float(mu[1])
    if w <= 0:
        raise ConfigError(f"pulse width must be positive, got w={w}")
    xg, yg = node_coords(cfg)
    fld = a * np.exp(-(xg**2 + yg**2) / w**2)
    u = np.concatenate([fld.ravel(), fld.ravel()])
    u[boundary_mask(cfg)] = 0.0
    return u


def rhs(u: np.ndarray, cfg: FomConfig, advection: bool = True) -> np.ndarray:
    """Semi-discrete right-hand side -u.grad(u) + (1/Re) lap(u).

    Boundary rows are zero.  ``advection=False`` zeroes the convective term
    (test hook for isolating the diffusion stencil).
    """
    d_x, d_y, lap = _operators(cfg)
    n = cfg.n_nodes
    uc, vc = u[:n], u[n:]
    nu = 1.0 / cfg.re
    fu = nu * (lap @ uc)
    fv = nu * (lap @ vc)
    if advection:
        fu = fu - (uc * (d_x @ uc) + vc * (d_y @ uc))
        fv = fv - (uc * (d_x @ vc) + vc * (d_y @ vc))
    return np.concatenate([fu, fv])


def residual(u_n: np.ndarray, u_prev: np.ndarray, cfg: FomConfig) -> np.ndarray:
    """Backward-Euler residual u_n - u_prev - dt*f(u_n).

    Boundary rows return the boundary values of ``u_n`` itself, making the
    Dirichlet condition part of the nonlinear system.
    """
    r = u_n - u_prev - cfg.dt * rhs(u_n, cfg)
    bnd = boundary_mask(cfg)
    r[bnd] = u_n[bnd]
    return r


def jacobian(u: np.ndarray, cfg: FomConfig) -> sp.csc_matrix:
    """Analytic Jacobian of the residual, I - dt * df/du, boundary rows identity."""
    d_x, d_y, lap = _operators(cfg)
    n = cfg.n_nodes
    uc, vc = u[:n], u[n:]
    nu = 1.0 / cfg.re

    du_x = sp.diags(d_x @ uc)
    du_y = sp.diags(d_y @ uc)
    dv_x = sp.diags(d_x @ vc)
    dv_y = sp.diags(d_y @ vc)
    u_dx = sp.diags(uc) @ d_x
    v_dy = sp.diags(vc) @ d_y

    a_uu = -(du_x + u_dx + v_dy) + nu * lap
    a_uv = -du_y
    a_vu = -dv_x
    a_vv = -(u_dx + dv_y + v_dy) + nu * lap

    df = sp.bmat([[a_uu, a_uv], [a_vu, a_vv]], format="csc")
    return (sp.eye(cfg.n_u, format="csc") - cfg.dt * df).tocsc()


def step(u_prev: np.ndarray, cfg: FomConfig) -> tuple[np.ndarray, list[float]]:
    """One implicit step: Newton with a direct sparse factorization per iterate.

    Returns the accepted state and the residual-norm history.  Raises
    NonConvergenceError if ``newton_max_iter`` updates do not reach
    ``newton_tol``.
    """
    bnd = boundary_mask(cfg)
    u = u_prev.copy()
    u[bnd] = 0.0
    history = []
    for _ in range(cfg.newton_max_iter):
        r = residual(u, u_prev, cfg)
        nrm = float(np.linalg.norm(r))
        history.append(nrm)
        if nrm <= cfg.newton_tol:
            STEP_COUNTER.count += 1
            return u, history
        delta = splu(jacobian(u, cfg)).solve(-r)
        u = u + delta
        u[bnd] = 0.0
    nrm = float(np.linalg.norm(residual(u, u_prev, cfg)))
    history.append(nrm)
    if nrm <= cfg.newton_tol:
        STEP_COUNTER.count += 1
        return u, history
    raise NonConvergenceError(
        f"Newton stalled at |r|={nrm:.3e} after {cfg.newton_max_iter} iterations",
        residual_history=history,
    )


def simulate(mu, cfg: FomConfig) -> Trajectory:
    """Run the full-order model and record states and semi-discrete velocities.

    The derivative targets are the analytic right-hand side evaluated at each
    snapshot, not finite differences of the snapshots.
    """
    mu = np.asarray(mu, dtype=float)
    n_t = cfg.n_t
    snaps = np.empty((n_t + 1, cfg.n_u))
    derivs = np.empty_like(snaps)
    snaps[0] = initial_state(mu, cfg)
    derivs[0] = rhs(snaps[0], cfg)
    for k in range(1, n_t + 1):
        try:
            snaps[k], _ = step(snaps[k - 1], cfg)
        except NonConvergenceError as err:
            err.step_index = k
            raise
        derivs[k] = rhs(snaps[k], cfg)
    return Trajectory(mu=mu, dt=cfg.dt, snapshots=snaps, derivatives=derivs)


# --- trajectory file format -------------------------------------------------
#
# Binary, little-endian:
#   magic "GLSD1" (5 bytes)
#   u32 N_u, u32 n_snapshots, f64 dt, u32 param_dim, param_dim * f64 parameters
#   n_snapshots * N_u f64 snapshots (row-major)
#   n_snapshots * N_u f64 derivatives (row-major)

def save_trajectory(traj: Trajectory, path) -> None:
    if traj.derivatives is None:
        raise ValueError("trajectory has no derivatives; file format requires them")
    mu = np.asarray(traj.mu, dtype="<f8")
    snaps = np.ascontiguousarray(traj.snapshots, dtype="<f8")
    derivs = np.ascontiguousarray(traj.derivatives, dtype="<f8")
    if derivs.shape != snaps.shape:
        raise ValueError("derivative matrix shape must match snapshots")
    header = _MAGIC + struct.pack(
        "<IIdI", snaps.shape[1], snaps.shape[0], float(traj.dt), mu.size
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(mu.tobytes())
        fh.write(snaps.tobytes())
        fh.write(derivs.tobytes())


def load_trajectory(path) -> Trajectory:
    data = Path(path).read_bytes()
    if data[:5] != _MAGIC:
        raise ValueError(f"{path}: not a trajectory file (bad magic)")
    n_u, n_snap, dt, pdim = struct.unpack_from("<IIdI", data, 5)
    off = 5 + struct.calcsize("<IIdI")
    mu = np.frombuffer(data, dtype="<f8", count=pdim, offset=off).astype(float)
    off += 8 * pdim
    total = n_snap * n_u
    snaps = np.frombuffer(data, dtype="<f8", count=total, offset=off)
    off += 8 * total
    derivs = np.frombuffer(data, dtype="<f8", count=total, offset=off)
    return Trajectory(
        mu=mu,
        dt=dt,
        snapshots=snaps.reshape(n_snap, n_u).copy(),
        derivatives=derivs.reshape(n_snap, n_u).copy(),
    )
