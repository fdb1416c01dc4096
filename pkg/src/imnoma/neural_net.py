"""Minimal dense feed-forward network in 64-bit floats.

Forward pass, MSE loss against softmax outputs (with the full softmax
Jacobian in the backward pass, not the usual softmax+cross-entropy
shortcut), exact reverse-mode gradients, and a hand-rolled Adam update.
Inputs may be single vectors (in,) or batches (B, in); batch losses and
gradients are averaged over the batch.

Weights persist in a little-endian binary format: magic "DSIM", format
version u16, layer count u16, then per layer (in u32, out u32, activation
tag u8, W row-major float64, bias float64).
"""

import struct
from dataclasses import dataclass

import numpy as np

ACTIVATION_TAGS = {"identity": 0, "relu": 1, "tanh": 2, "softmax": 3}
_TAG_TO_ACTIVATION = {v: k for k, v in ACTIVATION_TAGS.items()}

_MAGIC = b"DSIM"
_FORMAT_VERSION = 1


@dataclass
class Layer:
    w: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATION_TAGS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.w.shape[0] != self.bias.shape[0]:
            raise ValueError(f"W rows {self.w.shape[0]} != bias length {self.bias.shape[0]}")


@dataclass
class MlpParams:
    layers: list

    def __post_init__(self):
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.w.shape[1] != prev.w.shape[0]:
                raise ValueError(
                    f"layer dims do not chain: {prev.w.shape} -> {cur.w.shape}")

    @property
    def in_dim(self):
        return self.layers[0].w.shape[1]

    @property
    def out_dim(self):
        return self.layers[-1].w.shape[0]

    def n_parameters(self):
        return sum(l.w.size + l.bias.size for l in self.layers)


def init_params(dims, activations, rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights in +-sqrt(6/(in+out)), zero biases."""
    if len(dims) < 2:
        raise ValueError("need at least an input and an output dimension")
    if len(activations) != len(dims) - 1:
        raise ValueError(f"{len(dims) - 1} layers but {len(activations)} activations")
    layers = []
    for d_in, d_out, act in zip(dims, dims[1:], activations):
        lim = np.sqrt(6.0 / (d_in + d_out))
        w = rng.uniform(-lim, lim, size=(d_out, d_in))
        layers.append(Layer(w=w, bias=np.zeros(d_out), activation=act))
    return MlpParams(layers=layers)


def _softmax(z):
    z_shift = z - np.max(z, axis=-1, keepdims=True)  # overflow guard
    e = np.exp(z_shift)
    return e / np.sum(e, axis=-1, keepdims=True)


def _apply_activation(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "softmax":
        return _softmax(z)
    return z


def forward(params: MlpParams, s: np.ndarray):
    """Run the network; returns (output, cache) with cache feeding backward."""
    a = np.asarray(s, dtype=float)
    if a.shape[-1] != params.in_dim:
        raise ValueError(f"input length {a.shape[-1]} != first layer width {params.in_dim}")
    cache = []
    for layer in params.layers:
        z = a @ layer.w.T + layer.bias
        out = _apply_activation(layer.activation, z)
        cache.append((a, out))
        a = out
    return a, cache


def mse_loss(u_hat: np.ndarray, u: np.ndarray, b: int):
    """(1/b) ||u - u_hat||^2 and its gradient (2/b)(u_hat - u).

    For (B, n) batches the loss and gradient are averaged over the batch.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    u = np.asarray(u, dtype=float)
    if u_hat.shape != u.shape:
        raise ValueError(f"shape mismatch {u_hat.shape} vs {u.shape}")
    diff = u_hat - u
    if diff.ndim == 1:
        return float(diff @ diff) / b, (2.0 / b) * diff
    n_samples = diff.shape[0]
    loss = float(np.einsum("ij,ij->", diff, diff)) / (b * n_samples)
    return loss, (2.0 / (b * n_samples)) * diff


def backward(params: MlpParams, cache, d_output: np.ndarray):
    """Exact reverse-mode gradients; returns (per-layer (dW, dbias), d_input)."""
    if len(cache) != len(params.layers):
        raise ValueError(f"cache has {len(cache)} layers, params {len(params.layers)}")
    g = np.asarray(d_output, dtype=float)
    grads = [None] * len(params.layers)
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        a_in, a_out = cache[i]
        if g.shape != a_out.shape:
            raise ValueError(f"stale cache: upstream grad {g.shape} vs output {a_out.shape}")
        if layer.activation == "softmax":
            # full Jacobian-vector product: dz = s * (g - <g, s>)
            dz = a_out * (g - np.sum(g * a_out, axis=-1, keepdims=True))
        elif layer.activation == "tanh":
            dz = g * (1.0 - a_out * a_out)
        elif layer.activation == "relu":
            dz = g * (a_out > 0)  # subgradient 0 at 0
        else:
            dz = g
        if dz.ndim == 1:
            grads[i] = (np.outer(dz, a_in), dz.copy())
        else:
            grads[i] = (dz.T @ a_in, dz.sum(axis=0))
        g = dz @ layer.w
    return grads, g


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    eta: float = 0.001


def init_adam(params: MlpParams, eta: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    zeros = lambda l: (np.zeros_like(l.w), np.zeros_like(l.bias))
    return AdamState(m=[zeros(l) for l in params.layers],
                     v=[zeros(l) for l in params.layers],
                     t=0, beta1=beta1, beta2=beta2, epsilon=epsilon, eta=eta)


def adam_step(params: MlpParams, grads, state: AdamState):
    """One Adam update in place; returns the updated (params, state)."""
    if len(grads) != len(params.layers):
        raise ValueError(f"{len(grads)} gradient blocks for {len(params.layers)} layers")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for layer, (dw, db), m_pair, v_pair in zip(params.layers, grads, state.m, state.v):
        for theta, g, m, v in ((layer.w, dw, m_pair[0], v_pair[0]),
                               (layer.bias, db, m_pair[1], v_pair[1])):
            if g.shape != theta.shape:
                raise ValueError(f"gradient shape {g.shape} vs parameter {theta.shape}")
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            theta -= state.eta * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def save_weights(params: MlpParams, fh) -> None:
    """Write the versioned binary weight block to a binary file object."""
    fh.write(_MAGIC)
    fh.write(struct.pack("<HH", _FORMAT_VERSION, len(params.layers)))
    for layer in params.layers:
        d_out, d_in = layer.w.shape
        fh.write(struct.pack("<IIB", d_in, d_out, ACTIVATION_TAGS[layer.activation]))
        fh.write(np.ascontiguousarray(layer.w, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("truncated weight block")
    return data


def load_weights(fh) -> MlpParams:
    """Read one weight block; rejects unknown magic, version, or activation tags."""
    if _read_exact(fh, 4) != _MAGIC:
        raise ValueError("not a weight block (bad magic)")
    version, n_layers = struct.unpack("<HH", _read_exact(fh, 4))
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported weight format version {version}")
    layers = []
    for _ in range(n_layers):
        d_in, d_out, tag = struct.unpack("<IIB", _read_exact(fh, 9))
        if tag not in _TAG_TO_ACTIVATION:
            raise ValueError(f"unknown activation tag {tag}")
        w = np.frombuffer(_read_exact(fh, 8 * d_in * d_out), dtype="<f8")
        bias = np.frombuffer(_read_exact(fh, 8 * d_out), dtype="<f8")
        layers.append(Layer(w=w.reshape(d_out, d_in).copy(),
                            bias=bias.copy(),
                            activation=_TAG_TO_ACTIVATION[tag]))
    return MlpParams(layers=layers)
