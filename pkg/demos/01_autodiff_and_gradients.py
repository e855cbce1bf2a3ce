#!/usr/bin/env python3
"""Tour of the tensor/autodiff core: build a small graph on a tape,
backpropagate, and cross-check every gradient against central finite
differences."""

import numpy as np

from drumgen import autodiff as ad
from drumgen.autodiff import Parameter, Tape, Tensor, backward, finite_diff_check

# ---------------------------------------------------------------------
# A loss with known gradient: sum(x * x) has d/dx = 2x
x = Parameter(np.array([1.0, 2.0, 3.0]))
with Tape() as tape:
    loss = ad.sum_all(ad.hadamard(x, x))
backward(loss, tape)
print("loss =", float(loss.data))
print("grad =", x.grad, "(analytic 2x =", 2 * x.data, ")")

# Gradients accumulate until reset, by contract
backward(loss, tape)
print("after a second backward:", x.grad)
x.reset_grad()

# ---------------------------------------------------------------------
# A small classifier-shaped graph: W x + b -> tanh -> softmax -> CE
rng = np.random.default_rng(0)
W = Parameter(rng.uniform(-1, 1, size=(3, 4)))
b = Parameter(np.zeros(3))
inp = Tensor(rng.uniform(-1, 1, size=4))


def loss_fn():
    h = ad.tanh(ad.add(ad.matmul(W, inp), b))
    return ad.cross_entropy(ad.softmax_rows(h), 2)


with Tape() as tape:
    out = loss_fn()
backward(out, tape)
print("\nclassifier loss:", float(out.data))
print("|dW| max:", np.abs(W.grad).max())

# The oracle: central differences over every scalar parameter
err = finite_diff_check(loss_fn, [W, b])
print("max relative error vs finite differences:", err)
assert err <= 1e-4

# ---------------------------------------------------------------------
# Softmax rows are shift-invariant distributions
row = Tensor([[1.0, 2.0, 3.0]])
shifted = Tensor([[101.0, 102.0, 103.0]])
print("\nsoftmax:", ad.softmax_rows(row).data)
print("shifted:", ad.softmax_rows(shifted).data)
