"""Safety-constrained soft actor-critic for a single task.

One learner owns a tanh-Gaussian actor, twin reward critics with Polyak
targets, a single safety critic with its own target, an automatically
tuned entropy temperature, and a non-negative multiplier that trades
reward against the tilt-margin constraint by dual descent. Training reads
uniform batches from a FIFO replay buffer and performs two gradient
rounds per environment step once the warmup threshold is met.

Backup rules: transitions that ended in a fall are true terminals and
never bootstrap; boundary and horizon timeouts are not failure states,
so their targets keep the discounted next-state value.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .approx import AdamState, GaussianPolicyHead, Mlp, adam_step, polyak_update


class TerminationKind(enum.IntEnum):
    RUNNING = 0
    FALL_TERMINAL = 1
    BOUNDARY_TIMEOUT = 2
    EPISODE_TIMEOUT = 3


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    safety: float  # tilt margin at next_obs
    kind: TerminationKind

    def __post_init__(self):
        if not (math.isfinite(self.reward) and math.isfinite(self.safety)):
            raise ValueError("reward and safety must be finite")
        if self.kind == TerminationKind.FALL_TERMINAL and self.safety >= 0.0:
            raise ValueError("fall_terminal requires a negative safety margin")


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    safety: np.ndarray
    kind: np.ndarray

    @property
    def bootstrap(self):
        """1.0 where the target keeps the discounted next-state value."""
        return (self.kind != int(TerminationKind.FALL_TERMINAL)).astype(np.float64)

    def __len__(self):
        return self.obs.shape[0]


class ReplayBuffer:
    """FIFO ring of transitions with a dedicated uniform sampling stream."""

    def __init__(self, capacity=100_000, seed=0):
        self.capacity = int(capacity)
        self.rng = np.random.default_rng(seed)
        self._size = 0
        self._head = 0
        self._storage = None

    def _allocate(self, obs_dim, action_dim):
        n = self.capacity
        self._storage = {
            "obs": np.empty((n, obs_dim)),
            "action": np.empty((n, action_dim)),
            "reward": np.empty(n),
            "next_obs": np.empty((n, obs_dim)),
            "safety": np.empty(n),
            "kind": np.empty(n, dtype=np.int8),
        }

    def push(self, tr):
        if self._storage is None:
            self._allocate(len(tr.obs), len(tr.action))
        s = self._storage
        i = self._head
        s["obs"][i] = tr.obs
        s["action"][i] = tr.action
        s["reward"][i] = tr.reward
        s["next_obs"][i] = tr.next_obs
        s["safety"][i] = tr.safety
        s["kind"][i] = int(tr.kind)
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def __len__(self):
        return self._size

    def __contains__(self, tr):
        if self._storage is None:
            return False
        s = self._storage
        hits = np.flatnonzero(
            (s["reward"][: self._size] == tr.reward)
            & (s["safety"][: self._size] == tr.safety)
        )
        return any(
            np.array_equal(s["obs"][i], tr.obs) and np.array_equal(s["action"][i], tr.action)
            for i in hits
        )

    def sample(self, batch_size):
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} < batch size {batch_size}")
        idx = self.rng.integers(0, self._size, size=batch_size)
        s = self._storage
        return Batch(
            obs=s["obs"][idx],
            action=s["action"][idx],
            reward=s["reward"][idx],
            next_obs=s["next_obs"][idx],
            safety=s["safety"][idx],
            kind=s["kind"][idx].astype(np.int64),
        )


@dataclass
class SacConfig:
    """Learner hyperparameters; defaults are the pinned desk-scale choices."""

    hidden: tuple = (256, 256)
    batch_size: int = 256
    discount: float = 0.99
    polyak_tau: float = 0.005
    learning_rate: float = 3e-4
    lambda_lr: float = 0.001
    lambda_init: float = 1.0
    alpha_init: float = 0.1
    alpha_lr: float = 3e-3
    target_entropy: float = -4.0
    warmup: int = 1000
    gradient_rounds: int = 2
    buffer_capacity: int = 100_000
    use_safety_critic: bool = True
    # alternate dual signal (long-horizon safety estimate instead of the
    # stored per-step margin); off by default
    dual_from_safety_critic: bool = False

    def replace(self, **kw):
        from dataclasses import replace as _replace

        return _replace(self, **kw)


class Learner:
    """All networks, dual variables, and optimizer state for one task."""

    def __init__(self, obs_dim, action_dim, config=None, seed=0):
        self.config = config or SacConfig()
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        init_ss, noise_ss = ss.spawn(2)
        init_rng = np.random.default_rng(init_ss)
        self.noise_rng = np.random.default_rng(noise_ss)

        c = self.config
        critic_sizes = [obs_dim + action_dim, *c.hidden, 1]
        self.actor = GaussianPolicyHead.initialize(obs_dim, action_dim, c.hidden, init_rng)
        self.q1 = Mlp.initialize(critic_sizes, init_rng)
        self.q2 = Mlp.initialize(critic_sizes, init_rng)
        self.s_critic = Mlp.initialize(critic_sizes, init_rng)
        self.q1_target = self.q1.clone()
        self.q2_target = self.q2.clone()
        self.s_target = self.s_critic.clone()

        lr = c.learning_rate
        self.actor_adam = AdamState.for_params(self.actor.trunk.params(), lr)
        self.q1_adam = AdamState.for_params(self.q1.params(), lr)
        self.q2_adam = AdamState.for_params(self.q2.params(), lr)
        self.s_adam = AdamState.for_params(self.s_critic.params(), lr)

        self.lam = float(c.lambda_init)
        self.log_alpha = float(np.log(c.alpha_init))

    @property
    def alpha(self):
        return math.exp(self.log_alpha)

    def _noise(self, n):
        return self.noise_rng.standard_normal((n, self.action_dim))

    def act(self, obs, stochastic=True):
        """Action for one observation; stochastic draws use the noise stream."""
        return self.actor.act(obs, self.noise_rng if stochastic else None)

    def _next_values(self, batch):
        """Fresh next-state actions and all target-net value estimates."""
        noise = self._noise(len(batch))
        a2, logp2 = self.actor.sample_batch(batch.next_obs, noise)
        xin = np.concatenate([batch.next_obs, a2], axis=1)
        q1t = self.q1_target.forward_batch(xin)[:, 0]
        q2t = self.q2_target.forward_batch(xin)[:, 0]
        st = self.s_target.forward_batch(xin)[:, 0]
        return q1t, q2t, logp2, st

    def q_target(self, batch):
        """Backup for the reward critics.

        Falls never bootstrap; every other termination kind keeps the
        entropy-regularized next-state value.
        """
        q1t, q2t, logp2, _ = self._next_values(batch)
        return kernels.soft_backup(
            batch.reward, batch.bootstrap, self.config.discount, self.alpha, q1t, q2t, logp2
        )

    def s_critic_target(self, batch):
        """Backup for the safety critic: like the reward backup, no entropy."""
        _, _, _, st = self._next_values(batch)
        return kernels.value_backup(batch.safety, batch.bootstrap, self.config.discount, st)

    def _regress(self, net, adam, xin, target):
        pred, acts = net.forward_cached(xin)
        loss, upstream = kernels.mse_upstream(pred, target)
        dws, dbs, _ = net.backward(acts, upstream)
        adam_step(net.params(), net.grad_params(dws, dbs), adam)
        return loss

    def critic_update(self, batch):
        """One Adam step per critic against its target, then Polyak blends."""
        c = self.config
        q1t, q2t, logp2, st = self._next_values(batch)
        boot = batch.bootstrap
        y = kernels.soft_backup(batch.reward, boot, c.discount, self.alpha, q1t, q2t, logp2)
        xin = np.concatenate([batch.obs, batch.action], axis=1)
        q_loss = 0.5 * (
            self._regress(self.q1, self.q1_adam, xin, y)
            + self._regress(self.q2, self.q2_adam, xin, y)
        )
        s_loss = 0.0
        if c.use_safety_critic:
            ys = kernels.value_backup(batch.safety, boot, c.discount, st)
            s_loss = self._regress(self.s_critic, self.s_adam, xin, ys)
        polyak_update(self.q1_target, self.q1, c.polyak_tau)
        polyak_update(self.q2_target, self.q2, c.polyak_tau)
        if c.use_safety_critic:
            polyak_update(self.s_target, self.s_critic, c.polyak_tau)
        return q_loss, s_loss

    def actor_update(self, batch):
        """Reparameterized step on E[alpha*logpi - min(Q1,Q2) - lambda*S]."""
        n = len(batch)
        noise = self._noise(n)
        action, logp, cache = self.actor.sample_batch_cached(batch.obs, noise)
        xin = np.concatenate([batch.obs, action], axis=1)

        q1v, acts1 = self.q1.forward_cached(xin)
        q2v, acts2 = self.q2.forward_cached(xin)
        through_q1 = (q1v <= q2v).astype(np.float64)
        qmin = np.minimum(q1v[:, 0], q2v[:, 0])

        scale = -1.0 / n
        d_in = self.q1.backward_input(acts1, scale * through_q1)
        d_in += self.q2.backward_input(acts2, scale * (1.0 - through_q1))

        use_safety = self.config.use_safety_critic and self.lam != 0.0
        s_term = 0.0
        if use_safety:
            sv, acts_s = self.s_critic.forward_cached(xin)
            s_term = sv[:, 0]
            d_in += self.s_critic.backward_input(acts_s, (self.lam * scale) * np.ones_like(sv))

        d_action = np.ascontiguousarray(d_in[:, self.obs_dim :])
        d_logp = np.full(n, self.alpha / n)
        grads = self.actor.backward_sample(cache, d_action, d_logp)
        adam_step(self.actor.trunk.params(), grads, self.actor_adam)

        actor_loss = float(np.mean(self.alpha * logp - qmin - self.lam * s_term))
        return actor_loss, float(np.mean(logp))

    def lambda_update(self, batch):
        """Dual descent on E[lambda * f_s], projected to lambda >= 0."""
        if self.config.dual_from_safety_critic:
            noise = self._noise(len(batch))
            a, _ = self.actor.sample_batch(batch.obs, noise)
            xin = np.concatenate([batch.obs, a], axis=1)
            signal = float(np.mean(self.s_critic.forward_batch(xin)[:, 0]))
        else:
            signal = float(np.mean(batch.safety))
        self.lam = max(0.0, self.lam - self.config.lambda_lr * signal)
        return self.lam

    def alpha_update(self, batch, mean_logp=None):
        """Dual descent on the entropy temperature, in log space."""
        if mean_logp is None:
            noise = self._noise(len(batch))
            _, logp = self.actor.sample_batch(batch.obs, noise)
            mean_logp = float(np.mean(logp))
        self.log_alpha += self.config.alpha_lr * (mean_logp + self.config.target_entropy)
        return self.alpha

    def train_step(self, buffer):
        """Two gradient rounds (critics, actor, duals); no-op before warmup."""
        c = self.config
        if len(buffer) < max(c.warmup, c.batch_size):
            return None
        diag = {}
        for _ in range(c.gradient_rounds):
            batch = buffer.sample(c.batch_size)
            q_loss, s_loss = self.critic_update(batch)
            actor_loss, mean_logp = self.actor_update(batch)
            if c.use_safety_critic:
                self.lambda_update(batch)
            self.alpha_update(batch, mean_logp=mean_logp)
            diag = {
                "q_loss": q_loss,
                "s_loss": s_loss,
                "actor_loss": actor_loss,
                "lambda": self.lam,
                "alpha": self.alpha,
                "entropy": -mean_logp,
            }
        return diag

    def to_record(self):
        return {
            "obs_dim": self.obs_dim,
            "action_dim": self.action_dim,
            "actor": self.actor.to_record(),
            "q1": self.q1.to_record(),
            "q2": self.q2.to_record(),
            "s_critic": self.s_critic.to_record(),
            "q1_target": self.q1_target.to_record(),
            "q2_target": self.q2_target.to_record(),
            "s_target": self.s_target.to_record(),
            "adam": {
                "actor": self.actor_adam.to_record(),
                "q1": self.q1_adam.to_record(),
                "q2": self.q2_adam.to_record(),
                "s_critic": self.s_adam.to_record(),
            },
            "lambda": self.lam,
            "log_alpha": self.log_alpha,
            "noise_rng": self.noise_rng.bit_generator.state,
        }

    def load_record(self, rec):
        self.actor = GaussianPolicyHead.from_record(rec["actor"])
        self.q1 = Mlp.from_record(rec["q1"])
        self.q2 = Mlp.from_record(rec["q2"])
        self.s_critic = Mlp.from_record(rec["s_critic"])
        self.q1_target = Mlp.from_record(rec["q1_target"])
        self.q2_target = Mlp.from_record(rec["q2_target"])
        self.s_target = Mlp.from_record(rec["s_target"])
        lr = self.config.learning_rate
        self.actor_adam = AdamState.for_params(self.actor.trunk.params(), lr)
        self.q1_adam = AdamState.for_params(self.q1.params(), lr)
        self.q2_adam = AdamState.for_params(self.q2.params(), lr)
        self.s_adam = AdamState.for_params(self.s_critic.params(), lr)
        self.actor_adam.load_record(rec["adam"]["actor"])
        self.q1_adam.load_record(rec["adam"]["q1"])
        self.q2_adam.load_record(rec["adam"]["q2"])
        self.s_adam.load_record(rec["adam"]["s_critic"])
        self.lam = float(rec["lambda"])
        self.log_alpha = float(rec["log_alpha"])
        self.noise_rng.bit_generator.state = rec["noise_rng"]

    @classmethod
    def from_record(cls, rec, config=None, seed=0):
        learner = cls(int(rec["obs_dim"]), int(rec["action_dim"]), config, seed)
        learner.load_record(rec)
        return learner
