"""Shared test utilities."""

import math

import numpy as np

from walklab.approx import Mlp


def away_from_relu_kinks(net, x, floor=1e-3):
    """Central differences are only trustworthy off the ReLU kinks."""
    h = np.asarray(x, dtype=float)[None, :]
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i < len(net.weights) - 1:
            if np.any(np.abs(h) < floor):
                return False
            h = np.maximum(h, 0.0)
    return True


def sample_checkable_net(rng, max_hidden=3):
    """Random architecture plus an input that avoids pre-activation kinks."""
    while True:
        depth = int(rng.integers(1, max_hidden + 1))
        sizes = [int(rng.integers(2, 7))]
        sizes += [int(rng.integers(2, 9)) for _ in range(depth)]
        sizes.append(int(rng.integers(1, 5)))
        net = Mlp.initialize(sizes, rng)
        for b in net.biases[:-1]:
            b[...] = rng.uniform(-0.3, 0.3, size=b.shape)
        for _ in range(20):
            x = rng.normal(size=sizes[0])
            if away_from_relu_kinks(net, x):
                return net, x


def scripted_gait_action(phase):
    """Stride drive synchronized with the gait phase, other channels idle."""
    s = math.sin(phase)
    return np.array([math.copysign(1.0, s) if s != 0.0 else 1.0, 0.0, 0.0, 0.0])
