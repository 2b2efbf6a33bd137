"""Hot numeric kernels.

Every kernel exists twice: a numba-compiled loop version and a pure-numpy
version with the same signature. ``_accel.JIT_ENABLED`` picks which pair is
exported under the public names; both stay importable as ``numba_impl`` and
``numpy_impl`` so tests and the benchmark can compare them directly.
"""
import math
from types import SimpleNamespace

import numpy as np

from ._accel import JIT_ENABLED, njit

IDENTITY, RELU, LRELU, TANH, SIGMOID = 0, 1, 2, 3, 4

ACTIVATION_CODES = {
    "identity": IDENTITY,
    "relu": RELU,
    "lrelu": LRELU,
    "tanh": TANH,
    "sigmoid": SIGMOID,
}

_CF_MAX_ITER = 300
_CF_EPS = 1e-15
_CF_FPMIN = 1e-300


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit
def _act_scalar(a, act, beta):
    if act == RELU:
        return a if a > 0.0 else 0.0
    if act == LRELU:
        # max(0, a) - beta * min(0, a)
        return a if a > 0.0 else -beta * a
    if act == TANH:
        return math.tanh(a)
    if act == SIGMOID:
        if a >= 0.0:
            return 1.0 / (1.0 + math.exp(-a))
        e = math.exp(a)
        return e / (1.0 + e)
    return a


@njit
def _act_deriv_scalar(a, h, act, beta):
    if act == RELU:
        return 1.0 if a > 0.0 else 0.0
    if act == LRELU:
        return 1.0 if a > 0.0 else -beta
    if act == TANH:
        return 1.0 - h * h
    if act == SIGMOID:
        return h * (1.0 - h)
    return 1.0


@njit
def _activate_nb(a, act, beta):
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        out[i] = _act_scalar(a[i], act, beta)
    return out


@njit(fastmath=True)
def _dense_forward_nb(W, b, x, act, beta):
    n_out, n_in = W.shape
    a = np.empty(n_out)
    h = np.empty(n_out)
    for i in range(n_out):
        s = b[i]
        for j in range(n_in):
            s += W[i, j] * x[j]
        a[i] = s
        h[i] = _act_scalar(s, act, beta)
    return a, h


@njit(fastmath=True)
def _dense_backward_nb(W, x, a, h, grad_h, act, beta, want_dW=True, want_gx=True):
    n_out, n_in = W.shape
    delta = np.empty(n_out)
    for i in range(n_out):
        delta[i] = grad_h[i] * _act_deriv_scalar(a[i], h[i], act, beta)
    if want_dW:
        dW = np.empty((n_out, n_in))
        for i in range(n_out):
            d = delta[i]
            for j in range(n_in):
                dW[i, j] = d * x[j]
    else:
        dW = np.empty((0, 0))
    grad_x = np.zeros(n_in if want_gx else 0)
    if want_gx:
        for i in range(n_out):
            d = delta[i]
            for j in range(n_in):
                grad_x[j] += W[i, j] * d
    return dW, delta, grad_x


@njit(fastmath=True)
def _adam_update_nb(p, g, m, v, lr, beta1, beta2, eps, t):
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for i in range(p.shape[0]):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (m[i] / c1) / (math.sqrt(v[i] / c2) + eps)


@njit
def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


@njit
def _beta_front(a, b, x):
    return math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )


@njit
def _betainc_nb(a, b, x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = _beta_front(a, b, x)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _activate_np(a, act, beta):
    if act == RELU:
        return np.maximum(a, 0.0)
    if act == LRELU:
        return np.where(a > 0.0, a, -beta * a)
    if act == TANH:
        return np.tanh(a)
    if act == SIGMOID:
        out = np.empty_like(a)
        pos = a >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
        e = np.exp(a[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    return a.copy()


def _act_deriv_np(a, h, act, beta):
    if act == RELU:
        return (a > 0.0).astype(np.float64)
    if act == LRELU:
        return np.where(a > 0.0, 1.0, -beta)
    if act == TANH:
        return 1.0 - h * h
    if act == SIGMOID:
        return h * (1.0 - h)
    return np.ones_like(a)


def _dense_forward_np(W, b, x, act, beta):
    a = W @ x + b
    return a, _activate_np(a, act, beta)


def _dense_backward_np(W, x, a, h, grad_h, act, beta, want_dW=True, want_gx=True):
    delta = grad_h * _act_deriv_np(a, h, act, beta)
    dW = np.outer(delta, x) if want_dW else np.empty((0, 0))
    grad_x = W.T @ delta if want_gx else np.empty(0)
    return dW, delta, grad_x


def _adam_update_np(p, g, m, v, lr, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


_betacf_py = getattr(_betacf, "py_func", _betacf)
_beta_front_py = getattr(_beta_front, "py_func", _beta_front)


def _betainc_np(a, b, x):
    # scalar recurrence; same algorithm as the compiled version, run by the interpreter
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = _beta_front_py(a, b, x)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf_py(a, b, x) / a
    return 1.0 - front * _betacf_py(b, a, 1.0 - x) / b


numba_impl = SimpleNamespace(
    activate=_activate_nb,
    dense_forward=_dense_forward_nb,
    dense_backward=_dense_backward_nb,
    adam_update=_adam_update_nb,
    betainc=_betainc_nb,
)

numpy_impl = SimpleNamespace(
    activate=_activate_np,
    dense_forward=_dense_forward_np,
    dense_backward=_dense_backward_np,
    adam_update=_adam_update_np,
    betainc=_betainc_np,
)

_active = numba_impl if JIT_ENABLED else numpy_impl

activate = _active.activate
dense_forward = _active.dense_forward
dense_backward = _active.dense_backward
adam_update = _active.adam_update
betainc = _active.betainc
