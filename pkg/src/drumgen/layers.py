"""Network building blocks: linear layers, LSTM cells, stacked LSTM,
inverted dropout and concatenation merge."""

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor


def glorot_uniform(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class LinearLayer:
    """W x + b with identity activation."""

    def __init__(self, out_dim, in_dim, rng=None, zero_init=False, name="linear"):
        if zero_init or rng is None:
            w = np.zeros((out_dim, in_dim))
        else:
            w = glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim))
        self.W = Parameter(w, name=f"{name}.W")
        self.b = Parameter(np.zeros(out_dim), name=f"{name}.b")

    def forward(self, x):
        return ad.add(ad.matmul(self.W, x), self.b)

    def parameters(self):
        return [self.W, self.b]


class LSTMLayer:
    """Single LSTM layer with fused gate weights, gate order (i, f, g, o).

    Forget-gate bias slice starts at 1.0.
    """

    def __init__(self, hidden, in_dim, rng, name="lstm"):
        self.hidden = hidden
        self.in_dim = in_dim
        self.Wx = Parameter(
            glorot_uniform(rng, in_dim, 4 * hidden, (4 * hidden, in_dim)),
            name=f"{name}.Wx")
        self.Wh = Parameter(
            glorot_uniform(rng, hidden, 4 * hidden, (4 * hidden, hidden)),
            name=f"{name}.Wh")
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0
        self.bias = Parameter(bias, name=f"{name}.bias")

    def zero_state(self):
        return [Tensor(np.zeros(self.hidden)), Tensor(np.zeros(self.hidden))]

    def parameters(self):
        return [self.Wx, self.Wh, self.bias]


def lstm_step(layer, x, state):
    """One cell update; returns (h', c')."""
    h_prev, c_prev = state
    n = layer.hidden
    z = ad.add(ad.add(ad.matmul(layer.Wx, x), ad.matmul(layer.Wh, h_prev)), layer.bias)
    i = ad.sigmoid(ad.slice_vec(z, 0, n))
    f = ad.sigmoid(ad.slice_vec(z, n, 2 * n))
    g = ad.tanh(ad.slice_vec(z, 2 * n, 3 * n))
    o = ad.sigmoid(ad.slice_vec(z, 3 * n, 4 * n))
    c_new = ad.add(ad.hadamard(f, c_prev), ad.hadamard(i, g))
    h_new = ad.hadamard(o, ad.tanh(c_new))
    return h_new, c_new


def dropout_apply(x, rate, training, rng):
    """Inverted dropout: zero with probability rate, scale survivors by
    1/(1-rate) while training; identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0,1), got {rate}")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return ad.hadamard(x, Tensor(mask))


def stacked_lstm_step(layers, x, state, dropout_rate, training, rng):
    """Run a stack of LSTM layers for one time step.

    Dropout is applied to the stack input and between layers (feed-in
    connections only, never on h->h). state is a list of per-layer
    [h, c] pairs, updated in place. Returns the top-layer h.
    """
    inp = x
    for idx, layer in enumerate(layers):
        inp = dropout_apply(inp, dropout_rate, training, rng)
        h_new, c_new = lstm_step(layer, inp, state[idx])
        state[idx][0] = h_new
        state[idx][1] = c_new
        inp = h_new
    return inp


def concat_merge(parts):
    """Concatenate vectors in the given order."""
    return ad.concat(parts)
