"""Dense feed-forward networks with hand-written backprop, inverted dropout and Adam.

Everything works on one sample at a time (1-D input vectors); there is no
minibatch axis.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import ACTIVATION_CODES


class StaleCacheError(RuntimeError):
    """A forward cache was used after the network's parameters changed."""


def glorot_init(fan_in, fan_out, rng):
    """Weights of shape (fan_out, fan_in) drawn from U[-sqrt(6/(in+out)), +sqrt(6/(in+out))]."""
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def activation_apply(kind, a, beta=0.0):
    """Scalar or elementwise activation; ``beta`` is the leak slope for ``lrelu``."""
    code = ACTIVATION_CODES[kind]
    arr = np.atleast_1d(np.asarray(a, dtype=np.float64))
    out = kernels.numpy_impl.activate(arr, code, float(beta))
    return float(out[0]) if np.ndim(a) == 0 else out.reshape(np.shape(a))


@dataclass
class Layer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "identity"
    beta: float = 0.0

    def __post_init__(self):
        if self.activation not in ACTIVATION_CODES:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.beta < 0:
            raise ValueError("leak slope must be non-negative")
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"bias shape {self.b.shape} does not match weights {self.W.shape}")
        self.code = ACTIVATION_CODES[self.activation]

    @property
    def fan_in(self):
        return self.W.shape[1]

    @property
    def fan_out(self):
        return self.W.shape[0]


@dataclass
class ForwardCache:
    network_id: int
    version: int
    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    output: np.ndarray = None


class DenseNetwork:
    """A stack of dense layers; dropout is applied to every hidden layer's output."""

    def __init__(self, layers, dropout_prob=0.0):
        if not layers:
            raise ValueError("a network needs at least one layer")
        if not 0.0 <= dropout_prob < 1.0:
            raise ValueError("dropout_prob must lie in [0, 1)")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ValueError(
                    f"layer widths do not chain: {prev.fan_out} outputs feed {nxt.fan_in} inputs"
                )
        self.layers = list(layers)
        self.dropout_prob = float(dropout_prob)
        self._version = 0

    @classmethod
    def build(cls, sizes, hidden_activation, output_activation, rng, beta=0.0, dropout_prob=0.0):
        """Glorot-initialized network with zero biases; ``sizes`` lists every layer width."""
        if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {list(sizes)}")
        layers = []
        for k, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            last = k == len(sizes) - 2
            layers.append(
                Layer(
                    glorot_init(int(fan_in), int(fan_out), rng),
                    np.zeros(int(fan_out)),
                    output_activation if last else hidden_activation,
                    beta,
                )
            )
        return cls(layers, dropout_prob)

    @property
    def input_dim(self):
        return self.layers[0].fan_in

    @property
    def output_dim(self):
        return self.layers[-1].fan_out

    @property
    def sizes(self):
        return [self.input_dim] + [layer.fan_out for layer in self.layers]

    def params(self):
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def mark_updated(self):
        self._version += 1

    def forward(self, x, train=False, rng=None):
        """Run one sample through the network; returns ``(output, cache)``.

        In train mode hidden outputs are zeroed with probability
        ``dropout_prob`` and survivors scaled by ``1 / (1 - dropout_prob)``.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected input of length {self.input_dim}, got shape {x.shape}")
        use_dropout = train and self.dropout_prob > 0.0
        if use_dropout and rng is None:
            raise ValueError("train-mode dropout needs an rng")
        cache = ForwardCache(id(self), self._version)
        h = x
        last = len(self.layers) - 1
        for k, layer in enumerate(self.layers):
            cache.inputs.append(h)
            a, h = kernels.dense_forward(layer.W, layer.b, h, layer.code, layer.beta)
            cache.pre.append(a)
            cache.post.append(h)
            if k < last and use_dropout:
                keep = rng.random(h.shape[0]) >= self.dropout_prob
                mask = keep / (1.0 - self.dropout_prob)
                h = h * mask
            else:
                mask = None
            cache.masks.append(mask)
        cache.output = h
        return h, cache

    def predict(self, x):
        return self.forward(x, train=False)[0]

    def backward(self, cache, grad_out, param_grads=True, input_grad=True):
        """Gradients of a scalar loss given ``dL/d(output)``.

        Returns ``(grads, grad_input)`` where ``grads`` lines up with
        :meth:`params` (W0, b0, W1, b1, ...). Either half can be skipped:
        ``grads`` is then None, or ``grad_input`` is None.
        """
        if cache.network_id != id(self) or cache.version != self._version:
            raise StaleCacheError("forward cache does not belong to the current network state")
        g = np.asarray(grad_out, dtype=np.float64)
        if g.shape != (self.output_dim,):
            raise ValueError(f"expected output gradient of length {self.output_dim}, got {g.shape}")
        grads = [None] * (2 * len(self.layers))
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            mask = cache.masks[k]
            if mask is not None:
                g = g * mask
            dW, db, g = kernels.dense_backward(
                layer.W, cache.inputs[k], cache.pre[k], cache.post[k], g, layer.code, layer.beta,
                param_grads, k > 0 or input_grad,
            )
            grads[2 * k] = dW
            grads[2 * k + 1] = db
        return (grads if param_grads else None), (g if input_grad else None)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = None
    v: list = None

    @classmethod
    def for_params(cls, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m=[np.zeros(p.size) for p in params],
            v=[np.zeros(p.size) for p in params],
        )


def adam_step(state, params, grads):
    """Bias-corrected Adam update applied in place; returns ``params``."""
    if state.m is None:
        state.m = [np.zeros(p.size) for p in params]
        state.v = [np.zeros(p.size) for p in params]
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state must line up")
    state.t += 1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        kernels.adam_update(
            p.reshape(-1), np.ascontiguousarray(g).reshape(-1), m, v,
            state.lr, state.beta1, state.beta2, state.eps, float(state.t),
        )
    return params


class Trainer:
    """Pairs a network with its own Adam state."""

    def __init__(self, net, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.net = net
        self.state = AdamState.for_params(net.params(), lr, beta1, beta2, eps)

    def step(self, grads):
        adam_step(self.state, self.net.params(), grads)
        self.net.mark_updated()
