"""Joint training of the autoencoder and all anchored latent-dynamics models.

The composite objective is

    L = L_recon + beta_zdot * L_zdot + beta_udot * L_udot

where, per snapshot, z = enc(u), uhat = dec(z), zdot = J_enc(u) @ udot,
zdot_hat = basis(z) @ xi, udot_hat = J_dec(z) @ zdot_hat, and each term is the
mean over all snapshots of all database entries of the squared 2-norm of the
corresponding mismatch.  Gradients are exact reverse-mode, including the
activation second-derivative terms that arise from differentiating through
the two Jacobian-vector products.

Also provides the decoupled two-stage baseline: reconstruction-only
autoencoder training followed by a per-anchor linear least-squares fit of the
latent velocities onto the basis library.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .burgers import Trajectory
from .dynamics import BasisSpec, DiModel, basis_batch, basis_vjp
from .errors import DivergenceError
from .mlp import (MlpParams, backward_plain, backward_tangent, forward_cached,
                  forward_tangent)


@dataclass(frozen=True)
class LossWeights:
    """Weights on the latent-gradient and physical-gradient terms."""

    beta_zdot: float = 0.1
    beta_udot: float = 0.1

    def __post_init__(self):
        if self.beta_zdot < 0 or self.beta_udot < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and batching settings shared by all training entry points."""

    weights: LossWeights = LossWeights()
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int | None = 64  # None = full batch


@dataclass
class DbEntry:
    """One training sample: parameter, stored trajectory, anchored DI model."""

    mu: np.ndarray
    trajectory: Trajectory
    di: DiModel


class TrainingDatabase:
    """Growing set of (parameter, trajectory, coefficient-matrix) entries.

    All trajectories must share the time step and snapshot count; every entry
    carries exactly one DI model anchored at its parameter.
    """

    def __init__(self, entries=None):
        self.entries: list[DbEntry] = []
        self._stack = None
        for e in entries or []:
            self.add(e)

    def __len__(self):
        return len(self.entries)

    def add(self, entry: DbEntry):
        if self.entries:
            ref = self.entries[0].trajectory
            traj = entry.trajectory
            if traj.dt != ref.dt or traj.n_steps != ref.n_steps:
                raise ValueError("all trajectories must share dt and step count")
        if entry.trajectory.derivatives is None:
            raise ValueError("training trajectories need derivative targets")
        self.entries.append(entry)
        self._stack = None

    @property
    def di_models(self) -> list[DiModel]:
        return [e.di for e in self.entries]

    @property
    def xis(self) -> list[np.ndarray]:
        return [e.di.xi for e in self.entries]

    @property
    def anchor_mus(self) -> np.ndarray:
        return np.stack([np.asarray(e.mu, dtype=float) for e in self.entries])

    def stacked(self):
        """(U, Udot, entry_index) with all snapshots concatenated row-wise."""
        if self._stack is None:
            u = np.concatenate([e.trajectory.snapshots for e in self.entries])
            ud = np.concatenate([e.trajectory.derivatives for e in self.entries])
            idx = np.concatenate([
                np.full(e.trajectory.snapshots.shape[0], i, dtype=int)
                for i, e in enumerate(self.entries)
            ])
            self._stack = (u, ud, idx)
        return self._stack


@dataclass
class LossBreakdown:
    total: float
    recon: float
    zdot: float
    udot: float

    def as_tuple(self):
        return (self.total, self.recon, self.zdot, self.udot)


# --- loss/gradient engine -----------------------------------------------------

def _batch_loss_grads(u, udot, eidx, enc, dec, xis, spec, w, want_grads=True):
    """Loss breakdown and, optionally, gradients for one batch of snapshots.

    When both beta weights are zero the tangent machinery is skipped entirely
    and the zdot/udot terms are reported as 0.0.
    """
    b = u.shape[0]
    recon_only = w.beta_zdot == 0.0 and w.beta_udot == 0.0

    if recon_only:
        z, cache_e = forward_cached(u, enc)
        uhat, cache_d = forward_cached(z, dec)
        r = uhat - u
        l_recon = float((r * r).sum() / b)
        bd = LossBreakdown(l_recon, l_recon, 0.0, 0.0)
        if not want_grads:
            return bd, None
        dwd, dbd, dz = backward_plain(dec, cache_d, (2.0 / b) * r)
        dwe, dbe, _ = backward_plain(enc, cache_e, dz)
        d_xis = [np.zeros_like(x) for x in xis]
        return bd, (dwe, dbe, dwd, dbd, d_xis)

    z, zd, cache_e = forward_tangent(u, udot, enc)
    theta = basis_batch(z, spec)
    xi_b = np.stack(xis)[eidx]                       # (b, n_basis, n_z)
    zd_hat = np.einsum("bj,bjk->bk", theta, xi_b)
    uhat, ud_hat, cache_d = forward_tangent(z, zd_hat, dec)

    r = uhat - u
    ez = zd - zd_hat
    eu = ud_hat - udot
    l_recon = float((r * r).sum() / b)
    l_z = float((ez * ez).sum() / b)
    l_u = float((eu * eu).sum() / b)
    total = l_recon + w.beta_zdot * l_z + w.beta_udot * l_u
    bd = LossBreakdown(total, l_recon, l_z, l_u)
    if not want_grads:
        return bd, None

    d_uhat = (2.0 / b) * r
    d_udhat = (2.0 * w.beta_udot / b) * eu
    dwd, dbd, dz_dec, dzdhat_dec = backward_tangent(dec, cache_d, d_uhat, d_udhat)

    d_zdhat = dzdhat_dec - (2.0 * w.beta_zdot / b) * ez
    d_zd = (2.0 * w.beta_zdot / b) * ez

    d_xis = [np.zeros_like(x) for x in xis]
    for e in np.unique(eidx):
        mask = eidx == e
        d_xis[e] = theta[mask].T @ d_zdhat[mask]
    d_theta = np.einsum("bk,bjk->bj", d_zdhat, xi_b)
    d_z = dz_dec + basis_vjp(z, d_theta, spec)

    dwe, dbe, _, _ = backward_tangent(enc, cache_e, d_z, d_zd)
    return bd, (dwe, dbe, dwd, dbd, d_xis)


_EVAL_CHUNK = 1024  # fixed chunk size keeps full-database reductions ordered


def total_loss(db: TrainingDatabase, enc: MlpParams, dec: MlpParams,
               w: LossWeights) -> LossBreakdown:
    """Composite loss over every snapshot of every entry (deterministic order)."""
    if len(db) == 0:
        raise ValueError("empty training database")
    u, ud, eidx = db.stacked()
    spec = db.entries[0].di.spec
    xis = db.xis
    n = u.shape[0]
    sums = np.zeros(3)
    for lo in range(0, n, _EVAL_CHUNK):
        sl = slice(lo, min(lo + _EVAL_CHUNK, n))
        bd, _ = _batch_loss_grads(u[sl], ud[sl], eidx[sl], enc, dec, xis, spec,
                                  w, want_grads=False)
        nb = sl.stop - sl.start
        sums += nb * np.array([bd.recon, bd.zdot, bd.udot])
    recon, zdot, udot = sums / n
    total = recon + w.beta_zdot * zdot + w.beta_udot * udot
    return LossBreakdown(float(total), float(recon), float(zdot), float(udot))


def gradients(db: TrainingDatabase, enc: MlpParams, dec: MlpParams,
              w: LossWeights):
    """Exact full-database gradients of :func:`total_loss`.

    Returns ``(d_enc_w, d_enc_b, d_dec_w, d_dec_b, d_xis, breakdown)``.
    """
    if len(db) == 0:
        raise ValueError("empty training database")
    u, ud, eidx = db.stacked()
    spec = db.entries[0].di.spec
    bd, grads = _batch_loss_grads(u, ud, eidx, enc, dec, db.xis, spec, w)
    return (*grads, bd)


# --- Adam ----------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second-moment accumulators mirroring a parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps, t=0,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])

    def append_slot(self, shape):
        """Register a parameter added mid-run (fresh zero moments)."""
        self.m.append(np.zeros(shape))
        self.v.append(np.zeros(shape))


def adam_step(params: list, grads: list, state: AdamState) -> list:
    """One bias-corrected Adam update; returns the new parameter arrays."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter/gradient/state lengths disagree")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


# --- parameter packing -----------------------------------------------------------

def pack_params(enc: MlpParams, dec: MlpParams, xis: list) -> list:
    """Canonical flat parameter list: enc W, enc b, dec W, dec b, xis."""
    return [*enc.weights, *enc.biases, *dec.weights, *dec.biases, *xis]


def _unpack_into(params: list, enc: MlpParams, dec: MlpParams, db) -> None:
    k = 0
    for attr_net in (enc, dec):
        n = attr_net.n_layers
        attr_net.weights = params[k:k + n]
        k += n
        attr_net.biases = params[k:k + n]
        k += n
    for entry in db.entries:
        entry.di.xi = params[k]
        k += 1


# --- training loops ---------------------------------------------------------------

def train_epochs(db: TrainingDatabase, enc: MlpParams, dec: MlpParams,
                 adam: AdamState, n_epochs: int, cfg: TrainConfig, seed,
                 include_xis: bool = True) -> list[tuple]:
    """Run mini-batched Adam for ``n_epochs`` over all snapshots.

    Batch composition is drawn from ``seed`` (an int or a Generator, consumed
    in place so successive calls continue the stream).  Updates are applied in
    place to ``enc``, ``dec``, and the database's coefficient matrices.
    Returns one ``(epoch, total, recon, zdot, udot)`` row per epoch, where the
    loss values are batch-size-weighted means over the epoch's updates.
    """
    rng = np.random.default_rng(seed)
    u, ud, eidx = db.stacked()
    spec = db.entries[0].di.spec
    n = u.shape[0]
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    w = cfg.weights
    history = []
    for epoch in range(n_epochs):
        order = np.arange(n) if batch == n else rng.permutation(n)
        sums = np.zeros(4)
        for lo in range(0, n, batch):
            sel = order[lo:lo + batch]
            xis = db.xis
            bd, grads = _batch_loss_grads(u[sel], ud[sel], eidx[sel], enc, dec,
                                          xis, spec, w)
            if not np.isfinite(bd.total):
                raise DivergenceError(f"loss diverged at epoch {epoch}", index=epoch)
            dwe, dbe, dwd, dbd, d_xis = grads
            if include_xis:
                params = pack_params(enc, dec, xis)
                gs = [*dwe, *dbe, *dwd, *dbd, *d_xis]
            else:
                params = pack_params(enc, dec, [])
                gs = [*dwe, *dbe, *dwd, *dbd]
            new = adam_step(params, gs, adam)
            _unpack_into(new if include_xis else new + db.xis, enc, dec, db)
            sums += sel.size * np.array(bd.as_tuple())
        history.append((epoch, *(sums / n)))
    return history


def warm_start_xi(mu, db: TrainingDatabase, spec: BasisSpec, n_z: int,
                  k: int, p: float, space) -> np.ndarray:
    """Initial coefficients for a new anchor: interpolate existing anchors,
    or zeros when the database is empty."""
    from .dynamics import interpolate_coeffs
    if len(db) == 0:
        return np.zeros((spec.n_basis(n_z), n_z))
    k_eff = min(k, len(db))
    return interpolate_coeffs(mu, db.di_models, k_eff, p, space).xi


def fit_di_least_squares(db: TrainingDatabase, enc: MlpParams,
                         ridge: float = 1e-8) -> None:
    """Fit each anchored coefficient matrix by least squares (in place).

    For each entry the latent trajectory Z = enc(U) and its velocity
    Zdot = J_enc(U) @ Udot are computed with the frozen encoder, then xi
    solves basis(Z) @ xi ~ Zdot.  A rank-deficient system falls back to a
    ridge-regularized normal solve with a warning.
    """
    for entry in db.entries:
        traj = entry.trajectory
        z, zdot, _ = forward_tangent(traj.snapshots, traj.derivatives, enc)
        theta = basis_batch(z, entry.di.spec)
        xi, _, rank, _ = np.linalg.lstsq(theta, zdot, rcond=None)
        if rank < theta.shape[1]:
            warnings.warn(
                f"rank-deficient dynamics fit at anchor {np.asarray(entry.mu).tolist()}; "
                f"using ridge {ridge:g}", RuntimeWarning)
            gram = theta.T @ theta + ridge * np.eye(theta.shape[1])
            xi = np.linalg.solve(gram, theta.T @ zdot)
        entry.di.xi = xi


def train_lasdi_baseline(db: TrainingDatabase, enc: MlpParams, dec: MlpParams,
                         cfg: TrainConfig, n_epochs: int, seed) -> list[tuple]:
    """Decoupled two-stage baseline on a predefined sample set.

    Stage 1 trains the autoencoder on the reconstruction term only (the
    coefficient matrices are not in the optimizer's parameter list); stage 2
    freezes the autoencoder and fits every coefficient matrix by linear least
    squares.  Returns the stage-1 loss history.
    """
    stage1 = TrainConfig(weights=LossWeights(0.0, 0.0), lr=cfg.lr,
                         adam_beta1=cfg.adam_beta1, adam_beta2=cfg.adam_beta2,
                         adam_eps=cfg.adam_eps, batch_size=cfg.batch_size)
    adam = AdamState.for_params(pack_params(enc, dec, []), lr=cfg.lr,
                                beta1=cfg.adam_beta1, beta2=cfg.adam_beta2,
                                eps=cfg.adam_eps)
    history = train_epochs(db, enc, dec, adam, n_epochs, stage1, seed,
                           include_xis=False)
    fit_di_least_squares(db, enc)
    return history
