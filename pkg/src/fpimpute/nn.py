"""Minimal dense feedforward networks with exact reverse-mode gradients.

Everything runs in float64 on plain numpy arrays. Networks are small
(a few dense layers, <= a few hundred units), so there is no need for a
graph compiler or GPU support: batched matrix products cover all of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError

_ACTIVATIONS = ("tanh", "identity")

CHECKPOINT_FORMAT = "fpimpute-mlp-1"


class Mlp:
    """Fully connected network: hidden layers tanh, output identity by default.

    Weights are Glorot-uniform initialised, biases zero. ``weights[i]`` has
    shape ``(layer_sizes[i], layer_sizes[i+1])`` so a batch forward is a
    chain of ``x @ W + b``.
    """

    def __init__(self, layer_sizes, activations=None, seed=None):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output size")
        if any(s <= 0 for s in layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {layer_sizes}")
        n_layers = len(layer_sizes) - 1
        if activations is None:
            activations = ["tanh"] * (n_layers - 1) + ["identity"]
        activations = list(activations)
        if len(activations) != n_layers:
            raise ValueError(f"expected {n_layers} activations, got {len(activations)}")
        for act in activations:
            if act not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

        self.layer_sizes = layer_sizes
        self.activations = activations
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @classmethod
    def zeros(cls, layer_sizes, activations=None):
        """All-zero weights and biases (identity/tanh both map input to 0)."""
        net = cls(layer_sizes, activations=activations, seed=0)
        for w in net.weights:
            w[:] = 0.0
        return net

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_size(self):
        return self.layer_sizes[0]

    @property
    def output_size(self):
        return self.layer_sizes[-1]

    def parameters(self):
        """Flat parameter list [W0, b0, W1, b1, ...] (live references)."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def set_parameters(self, params):
        if len(params) != 2 * self.n_layers:
            raise ValueError("parameter list length does not match the network")
        for i in range(self.n_layers):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError(f"parameter shape mismatch at layer {i}")
            self.weights[i] = np.asarray(w, dtype=float)
            self.biases[i] = np.asarray(b, dtype=float)

    def copy(self):
        other = Mlp.zeros(self.layer_sizes, activations=self.activations)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other


def _as_batch(net, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != net.input_size:
            raise DataError(
                f"input length {x.shape[0]} does not match network input size {net.input_size}"
            )
        return x[None, :], True
    if x.ndim == 2:
        if x.shape[1] != net.input_size:
            raise DataError(
                f"input width {x.shape[1]} does not match network input size {net.input_size}"
            )
        return x, False
    raise DataError(f"input must be a vector or matrix, got ndim={x.ndim}")


def _forward_trace(net, x_batch):
    """Forward pass keeping every post-activation; acts[0] is the input."""
    acts = [x_batch]
    for w, b, act in zip(net.weights, net.biases, net.activations):
        pre = acts[-1] @ w + b
        acts.append(np.tanh(pre) if act == "tanh" else pre)
    return acts


def _backward_from_trace(net, acts, out_grad):
    """Reverse-mode pass from a stored trace.

    Returns (param_grads, input_grad) where param_grads mirrors
    ``net.parameters()`` and batch rows are summed into the weight grads.
    """
    g = np.asarray(out_grad, dtype=float)
    param_grads = [None] * (2 * net.n_layers)
    for i in range(net.n_layers - 1, -1, -1):
        if net.activations[i] == "tanh":
            g = g * (1.0 - acts[i + 1] ** 2)
        param_grads[2 * i] = acts[i].T @ g
        param_grads[2 * i + 1] = g.sum(axis=0)
        g = g @ net.weights[i].T
    return param_grads, g


def forward(net, x):
    """Apply the network. Accepts a vector or an (n, input_size) batch."""
    batch, single = _as_batch(net, x)
    out = _forward_trace(net, batch)[-1]
    return out[0] if single else out


def backward(net, x, output_grad):
    """Exact gradients of ``forward(net, x)`` seeded by ``output_grad``.

    Returns (param_grads, input_grad); shapes mirror ``net.parameters()``
    and ``x``.
    """
    batch, single = _as_batch(net, x)
    out_grad = np.asarray(output_grad, dtype=float)
    if single:
        if out_grad.shape != (net.output_size,):
            raise DataError(
                f"output_grad shape {out_grad.shape} does not match output size {net.output_size}"
            )
        out_grad = out_grad[None, :]
    elif out_grad.shape != (batch.shape[0], net.output_size):
        raise DataError(
            f"output_grad shape {out_grad.shape} does not match ({batch.shape[0]}, {net.output_size})"
        )
    acts = _forward_trace(net, batch)
    param_grads, input_grad = _backward_from_trace(net, acts, out_grad)
    return param_grads, input_grad[0] if single else input_grad


@dataclass
class AdamState:
    """Adam accumulators for one parameter list; shapes mirror the params."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, learning_rate=1e-3):
        state = cls(learning_rate=learning_rate)
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
        return state


def adam_step(params, grads, state):
    """One Adam update (descent direction). Mutates ``state``, returns new params."""
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ValueError("params, grads, and state lengths disagree")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_params = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape mismatch for parameter {i}")
        if not np.all(np.isfinite(g)):
            kind = "weights" if i % 2 == 0 else "biases"
            raise NumericError(f"non-finite gradient in layer {i // 2} {kind}")
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        step = state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        new_params.append(p - step)
    return new_params


def mlp_to_dict(net):
    """Serialisable dict; floats as hex strings so round trips are bit-exact."""
    return {
        "format": CHECKPOINT_FORMAT,
        "layer_sizes": list(net.layer_sizes),
        "activations": list(net.activations),
        "weights": [[v.hex() for v in w.ravel()] for w in net.weights],
        "biases": [[v.hex() for v in b] for b in net.biases],
    }


def mlp_from_dict(data):
    if data.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"unsupported checkpoint format {data.get('format')!r}")
    net = Mlp.zeros(data["layer_sizes"], activations=data["activations"])
    for i, (w_hex, b_hex) in enumerate(zip(data["weights"], data["biases"])):
        shape = net.weights[i].shape
        net.weights[i] = np.array([float.fromhex(v) for v in w_hex]).reshape(shape)
        net.biases[i] = np.array([float.fromhex(v) for v in b_hex])
    return net


def save_mlp(net, path):
    """Textual key-value checkpoint: header, sizes, then row-major hex floats."""
    lines = [f"format {CHECKPOINT_FORMAT}"]
    lines.append("layer_sizes " + " ".join(str(s) for s in net.layer_sizes))
    lines.append("activations " + " ".join(net.activations))
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"weights[{i}] " + " ".join(v.hex() for v in w.ravel()))
        lines.append(f"biases[{i}] " + " ".join(v.hex() for v in b))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path):
    fields = {}
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            fields[key] = rest
    if fields.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"unsupported checkpoint format in {path}")
    sizes = [int(s) for s in fields["layer_sizes"].split()]
    acts = fields["activations"].split()
    net = Mlp.zeros(sizes, activations=acts)
    for i in range(net.n_layers):
        shape = net.weights[i].shape
        w = np.array([float.fromhex(v) for v in fields[f"weights[{i}]"].split()])
        net.weights[i] = w.reshape(shape)
        net.biases[i] = np.array([float.fromhex(v) for v in fields[f"biases[{i}]"].split()])
    return net
