"""Feed-forward function approximation with hand-rolled reverse-mode gradients.

Everything the learners need and nothing more: ReLU MLPs, Adam with bias
correction, Polyak target blending, and a tanh-squashed Gaussian policy
head with the change-of-variables log-density correction. Heavy math runs
through `walklab.kernels`, which dispatches to the compiled core when it
is available.

Conventions: float64 throughout; weight matrices are (fan_out, fan_in);
parameter lists interleave weights and biases layer by layer; the ReLU
subgradient at exactly 0 is 0; bit-identical results for identical seeds.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

DEFAULT_HIDDEN = (256, 256)
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0


class DimensionError(ValueError):
    """An input, upstream, or architecture shape does not match."""


@dataclass
class Mlp:
    """ReLU network: hidden layers rectified, output layer affine."""

    layer_sizes: list
    weights: list
    biases: list

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise DimensionError("need at least an input and an output layer")
        for i, w in enumerate(self.weights):
            expect = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != expect:
                raise DimensionError(f"weight {i} has shape {w.shape}, expected {expect}")
            if self.biases[i].shape != (self.layer_sizes[i + 1],):
                raise DimensionError(f"bias {i} has shape {self.biases[i].shape}")

    @classmethod
    def initialize(cls, layer_sizes, rng):
        """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
        sizes = list(layer_sizes)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases)

    @property
    def in_dim(self):
        return self.layer_sizes[0]

    @property
    def out_dim(self):
        return self.layer_sizes[-1]

    def params(self):
        """Flat parameter list [W0, b0, W1, b1, ...]; arrays are live views."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def clone(self):
        return Mlp(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def forward_batch(self, x):
        if x.shape[1] != self.in_dim:
            raise DimensionError(f"input width {x.shape[1]} != {self.in_dim}")
        return kernels.mlp_forward(self.weights, self.biases, x)

    def forward_cached(self, x):
        if x.shape[1] != self.in_dim:
            raise DimensionError(f"input width {x.shape[1]} != {self.in_dim}")
        return kernels.mlp_forward_cached(self.weights, self.biases, x)

    def backward(self, acts, upstream):
        """(dweights, dbiases, dx) for sum(upstream * output)."""
        return kernels.mlp_backward(self.weights, acts, upstream)

    def backward_input(self, acts, upstream):
        return kernels.mlp_backward_input(self.weights, acts, upstream)

    def grad_params(self, dws, dbs):
        """Interleave layer gradients to match params() ordering."""
        out = []
        for dw, db in zip(dws, dbs):
            out.append(dw)
            out.append(db)
        return out

    def to_record(self):
        """Checkpoint fragment: sizes plus flat row-major arrays."""
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.ravel() for w in self.weights],
            "biases": [b.copy() for b in self.biases],
        }

    @classmethod
    def from_record(cls, rec):
        sizes = list(rec["layer_sizes"])
        weights = []
        biases = []
        for i in range(len(sizes) - 1):
            shape = (sizes[i + 1], sizes[i])
            weights.append(np.asarray(rec["weights"][i], dtype=np.float64).reshape(shape).copy())
            biases.append(np.asarray(rec["biases"][i], dtype=np.float64).copy())
        return cls(sizes, weights, biases)


def mlp_forward(net, x):
    """Single-vector forward pass."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.in_dim,):
        raise DimensionError(f"input shape {x.shape} != ({net.in_dim},)")
    return net.forward_batch(x[None, :])[0]


def mlp_gradient(net, x, upstream):
    """Exact gradients of upstream . output w.r.t. parameters and input.

    Returns ((dweights, dbiases), dx) with shapes mirroring the network.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (net.out_dim,):
        raise DimensionError(f"upstream shape {upstream.shape} != ({net.out_dim},)")
    _, acts = net.forward_cached(x[None, :])
    dws, dbs, dx = net.backward(acts, upstream[None, :])
    return (dws, dbs), dx[0]


@dataclass
class AdamState:
    """Adam moments for one parameter list, updated in lockstep with it."""

    first_moment: list
    second_moment: list
    step_count: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params, learning_rate=3e-4):
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
        )

    def to_record(self):
        return {
            "m": [m.ravel() for m in self.first_moment],
            "v": [v.ravel() for v in self.second_moment],
            "step_count": self.step_count,
            "learning_rate": self.learning_rate,
        }

    def load_record(self, rec):
        for m, flat in zip(self.first_moment, rec["m"]):
            m[...] = np.asarray(flat, dtype=np.float64).reshape(m.shape)
        for v, flat in zip(self.second_moment, rec["v"]):
            v[...] = np.asarray(flat, dtype=np.float64).reshape(v.shape)
        self.step_count = int(rec["step_count"])
        self.learning_rate = float(rec["learning_rate"])


def adam_step(params, grads, state):
    """Apply one Adam update in place; returns the advanced state."""
    if len(params) != len(state.first_moment):
        raise DimensionError("optimizer state does not match parameter list")
    state.step_count += 1
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        kernels.adam_step_inplace(
            p, g, m, v, state.step_count,
            state.learning_rate, state.beta1, state.beta2, state.epsilon,
        )
    return state


def polyak_update(target, source, tau):
    """target <- (1 - tau) * target + tau * source, parameter-wise."""
    if target.layer_sizes != source.layer_sizes:
        raise DimensionError("polyak blend requires identical architectures")
    for pt, ps in zip(target.params(), source.params()):
        kernels.polyak_inplace(pt, ps, tau)
    return target


@dataclass
class GaussianPolicyHead:
    """Tanh-squashed Gaussian policy.

    The trunk emits [mean, log_std] of the action dimension; log_std is
    clamped to [-20, 2] before exponentiation, and sampled actions land
    strictly inside (-1, 1) per component.
    """

    trunk: Mlp
    action_dim: int = field(default=0)

    def __post_init__(self):
        if self.action_dim == 0:
            self.action_dim = self.trunk.out_dim // 2
        if self.trunk.out_dim != 2 * self.action_dim:
            raise DimensionError("trunk output must split into mean and log-std")

    @classmethod
    def initialize(cls, obs_dim, action_dim, hidden, rng):
        sizes = [obs_dim, *hidden, 2 * action_dim]
        return cls(Mlp.initialize(sizes, rng), action_dim)

    def clone(self):
        return GaussianPolicyHead(self.trunk.clone(), self.action_dim)

    def sample_batch(self, obs, noise):
        """Reparameterized batch sample: (actions, log_probs)."""
        out = self.trunk.forward_batch(obs)
        action, log_prob, _ = kernels.head_sample(out, noise)
        return action, log_prob

    def sample_batch_cached(self, obs, noise):
        """Sample and keep the intermediates the actor backward needs."""
        out, acts = self.trunk.forward_cached(obs)
        action, log_prob, std = kernels.head_sample(out, noise)
        cache = {"acts": acts, "out": out, "action": action, "std": std, "noise": noise}
        return action, log_prob, cache

    def backward_sample(self, cache, d_action, d_log_prob):
        """Parameter gradients through a cached reparameterized sample.

        d_action: (batch, action_dim) upstream on the squashed action.
        d_log_prob: (batch,) upstream on each sample's log-density.
        """
        upstream = kernels.head_sample_grad(
            cache["out"], cache["action"], cache["std"], cache["noise"],
            d_action, d_log_prob,
        )
        dws, dbs, _ = self.trunk.backward(cache["acts"], upstream)
        return self.trunk.grad_params(dws, dbs)

    def mode_batch(self, obs):
        """Deterministic action: tanh of the mean (noise pinned to 0)."""
        out = self.trunk.forward_batch(obs)
        mean = out[:, : self.action_dim]
        return np.tanh(mean)

    def act(self, obs, rng=None):
        """Single-observation action; stochastic when an rng is given."""
        obs = np.asarray(obs, dtype=np.float64)[None, :]
        if rng is None:
            return self.mode_batch(obs)[0]
        noise = rng.standard_normal((1, self.action_dim))
        action, _ = self.sample_batch(obs, noise)
        return action[0]

    def to_record(self):
        return {"trunk": self.trunk.to_record(), "action_dim": self.action_dim}

    @classmethod
    def from_record(cls, rec):
        return cls(Mlp.from_record(rec["trunk"]), int(rec["action_dim"]))


def policy_sample(head, obs, noise):
    """Squash one draw: action = tanh(mean + std * noise), with log-density."""
    obs = np.asarray(obs, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != (head.action_dim,):
        raise DimensionError(f"noise shape {noise.shape} != ({head.action_dim},)")
    action, log_prob = head.sample_batch(obs[None, :], noise[None, :])
    return action[0], float(log_prob[0])


def finite_diff_check(net, x, upstream=None, gradient_fn=None, h=1e-5):
    """Max relative deviation of analytic gradients from central differences.

    The finite-difference side is the reference: errors are measured as
    |analytic - fd| / max(|fd|, 1e-6), maximized over every weight, bias,
    and input component.
    """
    x = np.array(x, dtype=np.float64)  # private copy; components get perturbed
    if upstream is None:
        upstream = np.ones(net.out_dim)
    if gradient_fn is None:
        gradient_fn = mlp_gradient
    (dws, dbs), dx = gradient_fn(net, x, upstream)

    def loss():
        return float(upstream @ mlp_forward(net, x))

    worst = 0.0

    def compare(analytic, array):
        nonlocal worst
        flat = array.ravel()
        aflat = analytic.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = loss()
            flat[i] = keep - h
            down = loss()
            flat[i] = keep
            fd = (up - down) / (2.0 * h)
            err = abs(aflat[i] - fd) / max(abs(fd), 1e-6)
            worst = max(worst, err)

    for dw, w in zip(dws, net.weights):
        compare(dw, w)
    for db, b in zip(dbs, net.biases):
        compare(db, b)
    compare(dx, x)
    return worst
