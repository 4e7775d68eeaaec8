"""Dense MLP machinery: forward evaluation, tangent (JVP) propagation, and
reverse-mode adjoints of both.

Everything is written directly against numpy in 64-bit arithmetic.  The joint
training loss differentiates through Jacobian-vector products, which brings in
second derivatives of the activation; the backward pass below propagates
adjoints of (value, tangent) pairs layer by layer, so no autodiff framework is
involved anywhere.

Batch convention: rows are samples, ``x @ W + b`` with weight shapes
``(fan_in, fan_out)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = ("tanh",)


@dataclass
class MlpParams:
    """Weights and biases of one MLP (encoder or decoder half).

    Hidden layers apply the smooth activation; the output layer is affine.
    Treated as immutable during evaluation; the trainer replaces arrays
    wholesale.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpParams":
        return MlpParams(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )


def init_mlp(layer_sizes, activation: str = "tanh", seed: int = 0) -> MlpParams:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1, got {sizes}")
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unsupported activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(layer_sizes=sizes, weights=weights, biases=biases,
                     activation=activation)


def _check_input(x: np.ndarray, net: MlpParams, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_dim:
        raise ValueError(
            f"{name}: input width {x.shape[-1]} does not match first layer "
            f"size {net.in_dim}"
        )
    return x


def forward(x: np.ndarray, net: MlpParams) -> np.ndarray:
    """Plain forward pass; accepts a vector or a batch of row vectors."""
    x = _check_input(x, net, "forward")
    a = np.atleast_2d(x)
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if l < last:
            a = np.tanh(a)
    return a[0] if x.ndim == 1 else a


def forward_tangent(x, xdot, net: MlpParams):
    """Forward pass carrying a tangent: returns (value, J(x) @ xdot, cache).

    The cache stores per-layer inputs, activations, and tangent pre-images for
    :func:`backward_tangent`.
    """
    x = _check_input(x, net, "forward_tangent")
    xdot = np.asarray(xdot, dtype=float)
    if xdot.shape != x.shape:
        raise ValueError(f"tangent shape {xdot.shape} != input shape {x.shape}")
    single = x.ndim == 1
    a = np.atleast_2d(x)
    t = np.atleast_2d(xdot)
    last = net.n_layers - 1
    a_list, t_list, g_list = [a], [t], []
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = a @ w + b
        g = t @ w
        if l < last:
            a = np.tanh(h)
            t = (1.0 - a * a) * g
        else:
            a, t = h, g
        a_list.append(a)
        t_list.append(t)
        g_list.append(g)
    cache = (a_list, t_list, g_list)
    if single:
        return a[0], t[0], cache
    return a, t, cache


def backward_tangent(net: MlpParams, cache, d_out, d_tangent):
    """Adjoint of :func:`forward_tangent`.

    Given gradients of a scalar loss with respect to the output value and the
    output tangent, accumulates gradients for every weight and bias and
    returns them together with the adjoints of the input value and the input
    tangent.  The ``-2 * a * g`` term is the activation's second derivative
    entering through the tangent path.
    """
    a_list, t_list, g_list = cache
    last = net.n_layers - 1
    da = np.atleast_2d(np.asarray(d_out, dtype=float))
    dt = np.atleast_2d(np.asarray(d_tangent, dtype=float))
    d_weights = [None] * net.n_layers
    d_biases = [None] * net.n_layers
    for l in range(last, -1, -1):
        if l == last:
            dh, dg = da, dt
        else:
            a_next = a_list[l + 1]
            sp = 1.0 - a_next * a_next
            dg = sp * dt
            dh = sp * (da - 2.0 * a_next * g_list[l] * dt)
        w = net.weights[l]
        d_weights[l] = a_list[l].T @ dh + t_list[l].T @ dg
        d_biases[l] = dh.sum(axis=0)
        da = dh @ w.T
        dt = dg @ w.T
    return d_weights, d_biases, da, dt


def forward_cached(x, net: MlpParams):
    """Forward pass saving per-layer activations for :func:`backward_plain`."""
    x = _check_input(x, net, "forward_cached")
    a = np.atleast_2d(x)
    last = net.n_layers - 1
    a_list = [a]
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if l < last:
            a = np.tanh(a)
        a_list.append(a)
    return a, a_list


def backward_plain(net: MlpParams, a_list, d_out):
    """Standard reverse pass for losses that never touch the tangents."""
    last = net.n_layers - 1
    da = np.atleast_2d(np.asarray(d_out, dtype=float))
    d_weights = [None] * net.n_layers
    d_biases = [None] * net.n_layers
    for l in range(last, -1, -1):
        if l == last:
            dh = da
        else:
            a_next = a_list[l + 1]
            dh = (1.0 - a_next * a_next) * da
        d_weights[l] = a_list[l].T @ dh
        d_biases[l] = dh.sum(axis=0)
        da = dh @ net.weights[l].T
    return d_weights, d_biases, da


# --- public autoencoder-facing wrappers --------------------------------------

def encode(u, enc: MlpParams) -> np.ndarray:
    """Map full-order states to latent coordinates."""
    return forward(u, enc)


def decode(z, dec: MlpParams) -> np.ndarray:
    """Map latent coordinates back to full-order states."""
    return forward(z, dec)


def encoder_jvp(u, udot, enc: MlpParams) -> np.ndarray:
    """Directional derivative of the encoder: J(u) @ udot."""
    _, tangent, _ = forward_tangent(u, udot, enc)
    return tangent


def decoder_jvp(z, zdot, dec: MlpParams) -> np.ndarray:
    """Directional derivative of the decoder: J(z) @ zdot."""
    _, tangent, _ = forward_tangent(z, zdot, dec)
    return tangent
