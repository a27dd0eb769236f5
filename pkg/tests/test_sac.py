import math

import numpy as np
import pytest

from walklab.approx import Mlp
from walklab.sac import (
    Batch,
    Learner,
    ReplayBuffer,
    SacConfig,
    TerminationKind,
    Transition,
)

OBS, ACT = 6, 4
STD_NORMAL_LOGP = -2.0 * math.log(2.0 * math.pi)  # 4 dims at the origin


def tiny_config(**kw):
    base = dict(hidden=(8,), batch_size=8, warmup=8, buffer_capacity=512,
                lambda_lr=0.01, alpha_init=0.1)
    base.update(kw)
    return SacConfig(**base)


def make_learner(seed=0, **kw):
    return Learner(OBS, ACT, tiny_config(**kw), seed)


def constant_output(net, value):
    """Zero every weight and pin the output bias: net(x) == value."""
    for w in net.weights:
        w[...] = 0.0
    for b in net.biases:
        b[...] = 0.0
    net.biases[-1][...] = value


def zero_noise(learner):
    learner._noise = lambda n: np.zeros((n, ACT))


def batch_of(kinds, reward=0.0, safety=0.05, seed=0):
    rng = np.random.default_rng(seed)
    n = len(kinds)
    return Batch(
        obs=rng.normal(size=(n, OBS)),
        action=rng.uniform(-0.9, 0.9, size=(n, ACT)),
        reward=np.full(n, float(reward)),
        next_obs=rng.normal(size=(n, OBS)),
        safety=np.full(n, float(safety)),
        kind=np.array([int(k) for k in kinds]),
    )


class TestQTarget:
    def test_fall_terminal_has_no_bootstrap(self):
        ln = make_learner()
        batch = batch_of([TerminationKind.FALL_TERMINAL], reward=-0.05, safety=-0.1)
        assert ln.q_target(batch)[0] == pytest.approx(-0.05, abs=1e-12)

    def test_boundary_timeout_bootstraps_with_entropy(self):
        ln = make_learner()
        constant_output(ln.q1_target, 2.0)
        constant_output(ln.q2_target, 2.5)
        constant_output(ln.actor.trunk, 0.0)  # mean 0, log-std 0
        zero_noise(ln)  # pre-squash sample lands at the origin
        ln.log_alpha = math.log(0.1 / -STD_NORMAL_LOGP)  # alpha*logpi == -0.1
        batch = batch_of([TerminationKind.BOUNDARY_TIMEOUT], reward=0.1)
        # 0.1 + 0.99 * (2.0 + 0.1) = 2.179
        assert ln.q_target(batch)[0] == pytest.approx(2.179, abs=1e-12)

    def test_zero_discount_is_myopic_for_every_kind(self):
        ln = make_learner(discount=0.0)
        kinds = [TerminationKind.RUNNING, TerminationKind.FALL_TERMINAL,
                 TerminationKind.BOUNDARY_TIMEOUT, TerminationKind.EPISODE_TIMEOUT]
        batch = batch_of(kinds, reward=0.7, safety=-0.01)
        batch.safety[:] = [0.1, -0.01, 0.1, 0.1]
        assert np.allclose(ln.q_target(batch), 0.7, atol=1e-12)

    def test_swapping_kind_changes_target_by_exactly_the_bootstrap_term(self):
        ln = make_learner()
        snapshot = ln.noise_rng.bit_generator.state
        as_timeout = batch_of([TerminationKind.BOUNDARY_TIMEOUT], reward=0.3, safety=0.1)
        as_fall = batch_of([TerminationKind.FALL_TERMINAL], reward=0.3, safety=0.1)

        ln.noise_rng.bit_generator.state = snapshot
        y_timeout = ln.q_target(as_timeout)[0]
        ln.noise_rng.bit_generator.state = snapshot
        y_fall = ln.q_target(as_fall)[0]
        ln.noise_rng.bit_generator.state = snapshot
        q1t, q2t, logp, _ = ln._next_values(as_timeout)
        expected = ln.config.discount * (min(q1t[0], q2t[0]) - ln.alpha * logp[0])
        assert y_timeout - y_fall == pytest.approx(expected, abs=1e-12)


class TestSafetyTarget:
    def test_fall_terminal_is_raw_margin(self):
        ln = make_learner()
        batch = batch_of([TerminationKind.FALL_TERMINAL], safety=-0.1)
        assert ln.s_critic_target(batch)[0] == pytest.approx(-0.1, abs=1e-12)

    def test_running_bootstrap_no_entropy(self):
        ln = make_learner()
        constant_output(ln.s_target, 1.0)
        batch = batch_of([TerminationKind.RUNNING], safety=0.2)
        assert ln.s_critic_target(batch)[0] == pytest.approx(0.2 + 0.99 * 1.0, abs=1e-12)

    def test_constant_margin_fixed_point(self):
        margin = 0.12
        ln = make_learner()
        constant_output(ln.s_target, margin / (1.0 - 0.99))
        batch = batch_of([TerminationKind.RUNNING] * 4, safety=margin)
        ys = ln.s_critic_target(batch)
        assert np.allclose(ys, margin / (1.0 - 0.99), atol=1e-9)


class TestCriticUpdate:
    def test_zero_residual_leaves_parameters_fixed(self):
        ln = make_learner(discount=0.0)
        ln.q2 = ln.q1.clone()
        ln.q2_target = ln.q1_target.clone()
        batch = batch_of([TerminationKind.RUNNING] * 8)
        xin = np.concatenate([batch.obs, batch.action], axis=1)
        batch.reward[:] = ln.q1.forward_batch(xin)[:, 0]
        batch.safety[:] = ln.s_critic.forward_batch(xin)[:, 0]
        before = [p.copy() for p in ln.q1.params() + ln.q2.params() + ln.s_critic.params()]
        q_loss, s_loss = ln.critic_update(batch)
        after = ln.q1.params() + ln.q2.params() + ln.s_critic.params()
        assert q_loss == 0.0 and s_loss == 0.0
        assert all(np.array_equal(b, a) for b, a in zip(before, after))

    def test_regression_loss_drops_on_fixed_batch(self):
        ln = make_learner(discount=0.0)
        batch = batch_of([TerminationKind.RUNNING] * 8, reward=3.0, safety=0.2, seed=4)
        first = ln.critic_update(batch)
        for _ in range(49):
            q_loss, s_loss = ln.critic_update(batch)
        assert q_loss < first[0]
        assert s_loss < first[1]
        assert math.isfinite(q_loss) and math.isfinite(s_loss)

    def test_polyak_moves_targets_toward_critics(self):
        ln = make_learner()
        batch = batch_of([TerminationKind.RUNNING] * 8, reward=1.0)
        gap_before = sum(
            float(np.sum((t - s) ** 2))
            for t, s in zip(ln.q1_target.params(), ln.q1.params())
        )
        ln.critic_update(batch)
        gap_after = sum(
            float(np.sum((t - s) ** 2))
            for t, s in zip(ln.q1_target.params(), ln.q1.params())
        )
        assert gap_after > 0.0  # tau is small, targets lag
        assert gap_before == 0.0  # clones start identical


class TestActorUpdate:
    def test_determinism_across_identical_learners(self):
        a, b = make_learner(seed=11), make_learner(seed=11)
        batch = batch_of([TerminationKind.RUNNING] * 8, reward=0.5)
        la, _ = a.actor_update(batch)
        lb, _ = b.actor_update(batch)
        assert la == lb
        assert all(
            np.array_equal(pa, pb)
            for pa, pb in zip(a.actor.trunk.params(), b.actor.trunk.params())
        )

    def test_safety_critic_ignored_when_lambda_zero(self):
        a, b = make_learner(seed=3), make_learner(seed=3)
        a.lam = 0.0
        b.lam = 0.0
        b.config = b.config.replace(use_safety_critic=False)
        batch = batch_of([TerminationKind.RUNNING] * 8)
        a.actor_update(batch)
        b.actor_update(batch)
        assert all(
            np.array_equal(pa, pb)
            for pa, pb in zip(a.actor.trunk.params(), b.actor.trunk.params())
        )

    def test_large_lambda_with_magnitude_penalizing_critic_shrinks_actions(self):
        # s_critic(s, a) = -sum|a_i| via paired relu units; reward critics zero
        ln = make_learner(seed=2, alpha_init=1e-12)
        constant_output(ln.q1, 0.0)
        constant_output(ln.q2, 0.0)
        s = Mlp([OBS + ACT, 2 * ACT, 1],
                [np.zeros((2 * ACT, OBS + ACT)), np.zeros((1, 2 * ACT))],
                [np.zeros(2 * ACT), np.zeros(1)])
        for i in range(ACT):
            s.weights[0][2 * i, OBS + i] = 1.0
            s.weights[0][2 * i + 1, OBS + i] = -1.0
            s.weights[1][0, 2 * i] = -1.0
            s.weights[1][0, 2 * i + 1] = -1.0
        ln.s_critic = s
        ln.lam = 1000.0
        batch = batch_of([TerminationKind.RUNNING] * 8, seed=9)
        obs = batch.obs
        before = np.abs(np.tanh(ln.actor.trunk.forward_batch(obs)[:, :ACT])).mean()
        for _ in range(50):
            ln.actor_update(batch)
        after = np.abs(np.tanh(ln.actor.trunk.forward_batch(obs)[:, :ACT])).mean()
        assert after < before

    def test_actor_gradient_matches_finite_differences(self):
        # dL/d(trunk params) via the analytic path vs central differences
        ln = make_learner(seed=8)
        ln.lam = 0.7
        batch = batch_of([TerminationKind.RUNNING] * 4, seed=13)
        noise = np.random.default_rng(21).standard_normal((4, ACT))

        def loss():
            action, logp, _ = ln.actor.sample_batch_cached(batch.obs, noise)
            xin = np.concatenate([batch.obs, action], axis=1)
            q1 = ln.q1.forward_batch(xin)[:, 0]
            q2 = ln.q2.forward_batch(xin)[:, 0]
            sv = ln.s_critic.forward_batch(xin)[:, 0]
            return float(np.mean(ln.alpha * logp - np.minimum(q1, q2) - ln.lam * sv))

        action, logp, cache = ln.actor.sample_batch_cached(batch.obs, noise)
        xin = np.concatenate([batch.obs, action], axis=1)
        q1v, acts1 = ln.q1.forward_cached(xin)
        q2v, acts2 = ln.q2.forward_cached(xin)
        sv, acts_s = ln.s_critic.forward_cached(xin)
        through_q1 = (q1v <= q2v).astype(float)
        scale = -1.0 / 4
        d_in = ln.q1.backward_input(acts1, scale * through_q1)
        d_in += ln.q2.backward_input(acts2, scale * (1.0 - through_q1))
        d_in += ln.s_critic.backward_input(acts_s, (ln.lam * scale) * np.ones_like(sv))
        d_action = np.ascontiguousarray(d_in[:, OBS:])
        d_logp = np.full(4, ln.alpha / 4)
        grads = ln.actor.backward_sample(cache, d_action, d_logp)

        params = ln.actor.trunk.params()
        rng = np.random.default_rng(0)
        h = 1e-6
        for p, g in zip(params, grads):
            flat, gflat = p.ravel(), g.ravel()
            for idx in rng.choice(flat.size, size=min(6, flat.size), replace=False):
                keep = flat[idx]
                flat[idx] = keep + h
                up = loss()
                flat[idx] = keep - h
                down = loss()
                flat[idx] = keep
                fd = (up - down) / (2 * h)
                assert gflat[idx] == pytest.approx(fd, abs=2e-4, rel=2e-4)


class TestLambdaUpdate:
    def test_violation_grows_multiplier(self):
        ln = make_learner()
        ln.lam = 1.0
        batch = batch_of([TerminationKind.RUNNING] * 4, safety=-0.1)
        assert ln.lambda_update(batch) == pytest.approx(1.001, abs=1e-12)

    def test_safe_batch_clamps_at_zero(self):
        ln = make_learner()
        ln.lam = 0.001
        batch = batch_of([TerminationKind.RUNNING] * 4, safety=0.2)
        assert ln.lambda_update(batch) == 0.0

    def test_zero_margin_is_stationary(self):
        ln = make_learner()
        ln.lam = 0.37
        batch = batch_of([TerminationKind.RUNNING] * 4, safety=0.0)
        assert ln.lambda_update(batch) == 0.37

    def test_sign_property_and_nonnegativity_randomized(self):
        ln = make_learner()
        rng = np.random.default_rng(17)
        for _ in range(500):
            ln.lam = rng.uniform(0, 2)
            margin = rng.uniform(-0.3, 0.3)
            batch = batch_of([TerminationKind.RUNNING] * 4, safety=margin)
            before = ln.lam
            after = ln.lambda_update(batch)
            assert after >= 0.0
            if after > 0.0 and margin != 0.0:  # unclamped
                assert math.copysign(1, after - before) == -math.copysign(1, margin)


class TestAlphaUpdate:
    def test_entropy_above_target_decreases_alpha(self):
        ln = make_learner()
        before = ln.alpha
        # mean logp 3 => entropy -3, above the -4 target
        ln.alpha_update(batch_of([TerminationKind.RUNNING] * 4), mean_logp=3.0)
        assert ln.alpha < before

    def test_entropy_below_target_increases_alpha(self):
        ln = make_learner()
        before = ln.alpha
        ln.alpha_update(batch_of([TerminationKind.RUNNING] * 4), mean_logp=5.0)
        assert ln.alpha > before

    def test_entropy_at_target_is_stationary(self):
        ln = make_learner()
        before = ln.alpha
        ln.alpha_update(batch_of([TerminationKind.RUNNING] * 4), mean_logp=4.0)
        assert ln.alpha == before

    def test_alpha_stays_positive_under_random_updates(self):
        ln = make_learner()
        rng = np.random.default_rng(23)
        batch = batch_of([TerminationKind.RUNNING] * 4)
        for _ in range(1000):
            ln.alpha_update(batch, mean_logp=rng.uniform(-50, 50))
            assert ln.alpha > 0.0


class TestTrainStep:
    def fill(self, buffer, n, seed=0):
        rng = np.random.default_rng(seed)
        for i in range(n):
            buffer.push(Transition(
                obs=rng.normal(size=OBS), action=rng.uniform(-0.9, 0.9, size=ACT),
                reward=float(rng.normal()), next_obs=rng.normal(size=OBS),
                safety=float(rng.uniform(0, 0.25)), kind=TerminationKind.RUNNING,
            ))

    def test_noop_below_warmup(self):
        ln = make_learner(warmup=100)
        buf = ReplayBuffer(256, seed=1)
        self.fill(buf, 50)
        before = [p.copy() for p in ln.actor.trunk.params()]
        assert ln.train_step(buf) is None
        assert all(np.array_equal(b, p) for b, p in zip(before, ln.actor.trunk.params()))
        assert ln.q1_adam.step_count == 0

    def test_two_rounds_advance_every_adam_twice(self):
        ln = make_learner()
        buf = ReplayBuffer(256, seed=1)
        self.fill(buf, 32)
        diag = ln.train_step(buf)
        assert diag is not None
        for adam in (ln.actor_adam, ln.q1_adam, ln.q2_adam, ln.s_adam):
            assert adam.step_count == 2

    def test_lambda_pinned_without_safety_critic(self):
        ln = make_learner(use_safety_critic=False, lambda_init=0.0)
        buf = ReplayBuffer(256, seed=1)
        self.fill(buf, 32)
        ln.train_step(buf)
        assert ln.lam == 0.0
        assert ln.s_adam.step_count == 0


@pytest.mark.slow
def test_5000_step_run_improves_late_returns():
    from walklab.tasks import SessionConfig, training_session

    cfg = SessionConfig(
        seed=0, steps_per_task=2500, horizon=500,
        sac=SacConfig(hidden=(64, 64), batch_size=64, warmup=1000),
    )
    _, records = training_session(cfg)
    first = np.mean([r.episode_return for r in records[:10]])
    last = np.mean([r.episode_return for r in records[-10:]])
    assert last > first


class TestReplayBuffer:
    def tr(self, i):
        return Transition(
            obs=np.full(OBS, float(i)), action=np.zeros(ACT), reward=float(i),
            next_obs=np.zeros(OBS), safety=0.1, kind=TerminationKind.RUNNING,
        )

    def test_fifo_eviction(self):
        buf = ReplayBuffer(capacity=50, seed=0)
        for i in range(60):
            buf.push(self.tr(i))
        assert len(buf) == 50
        for i in range(10):
            assert self.tr(i) not in buf
        for i in (10, 35, 59):
            assert self.tr(i) in buf

    def test_sampling_requires_enough_items(self):
        buf = ReplayBuffer(capacity=50, seed=0)
        for i in range(4):
            buf.push(self.tr(i))
        with pytest.raises(ValueError):
            buf.sample(8)
        batch = buf.sample(4)
        assert len(batch) == 4

    def test_dedicated_generator_reproducible(self):
        a, b = ReplayBuffer(64, seed=5), ReplayBuffer(64, seed=5)
        for i in range(20):
            a.push(self.tr(i))
            b.push(self.tr(i))
        assert np.array_equal(a.sample(8).reward, b.sample(8).reward)


class TestTransition:
    def test_fall_requires_negative_margin(self):
        with pytest.raises(ValueError):
            Transition(np.zeros(OBS), np.zeros(ACT), 0.0, np.zeros(OBS), 0.1,
                       TerminationKind.FALL_TERMINAL)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Transition(np.zeros(OBS), np.zeros(ACT), math.nan, np.zeros(OBS), 0.1,
                       TerminationKind.RUNNING)

    def test_bootstrap_mask(self):
        batch = batch_of([TerminationKind.RUNNING, TerminationKind.FALL_TERMINAL,
                          TerminationKind.BOUNDARY_TIMEOUT, TerminationKind.EPISODE_TIMEOUT],
                         safety=-0.01)
        assert list(batch.bootstrap) == [1.0, 0.0, 1.0, 1.0]
