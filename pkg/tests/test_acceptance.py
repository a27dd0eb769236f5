"""Criteria-level checks, one per test, each printing a PASS/FAIL line.

Run the fast subset with `pytest tests/test_acceptance.py -m "not slow"`,
or everything (training ablations included, ~40 minutes on one core) with
`pytest tests/test_acceptance.py -s`.
"""

import math
import time

import numpy as np
import pytest

from helpers import sample_checkable_net, scripted_gait_action
from walklab import env as E
from walklab.approx import finite_diff_check
from walklab.env import PlanarWalker, WalkerState, safety_margin
from walklab.harness import checkpoint as cp
from walklab.harness.ablate import run_ablation_oob, run_ablation_safety
from walklab.harness.config import load_config
from walklab.harness.evaluate import evaluate_policy
from walklab.sac import Batch, Learner, SacConfig, TerminationKind
from walklab.tasks import (
    EpisodeFrame,
    TASK_PRESETS,
    TaskVector,
    task_reward,
    training_session,
)

# desk-scale training preset: sized so the full suite fits a single CPU core
DESK = [
    "sac.hidden=64 64",
    "sac.batch_size=64",
    "sac.warmup=1000",
]


def report(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line, flush=True)
    assert passed, line


def test_c1_gradient_correctness():
    rng = np.random.default_rng(20260809)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        net, x = sample_checkable_net(rng)
        worst = max(worst, finite_diff_check(net, x))
    elapsed = time.perf_counter() - t0
    report(
        "1 gradient-correctness",
        worst < 1e-4 and elapsed < 10.0,
        f"max rel err {worst:.2e} over 20 architectures in {elapsed:.1f}s",
    )


def test_c2_task_reward_unit_tests():
    still = (np.zeros(4), np.zeros(4), np.zeros(4))
    fwd = TASK_PRESETS["two-task"][0]
    turn = TASK_PRESETS["four-task"][2]
    frame0 = EpisodeFrame.from_pose((0.0, 0.0, 0.0))
    ok = True
    ok &= task_reward(frame0, (0, 0, 0), (0.1, 0.05, 0.2), still, fwd) == pytest.approx(0.1, abs=1e-15)
    ok &= task_reward(frame0, (0, 0, 0), (0.0, 0.0, 0.4), still, turn) == pytest.approx(0.2, abs=1e-15)
    a = np.array([0.2, -0.5, 0.7, 0.0])
    stepped = a.copy()
    stepped[2] += 1.0
    ok &= task_reward(frame0, (0, 0, 0), (0, 0, 0), (a, a, stepped), fwd) == pytest.approx(
        -0.001, abs=1e-15
    )

    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        pose0 = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-math.pi, math.pi))
        pose1 = (pose0[0] + rng.normal(0, 0.1), pose0[1] + rng.normal(0, 0.1),
                 pose0[2] + rng.normal(0, 0.3))
        w = TaskVector(*rng.normal(size=3), name="w", counter="w")
        window = tuple(rng.uniform(-1, 1, 4) for _ in range(3))
        base = task_reward(EpisodeFrame.from_pose(pose0), pose0, pose1, window, w)
        phi, tx, ty = rng.uniform(-math.pi, math.pi), *rng.uniform(-5, 5, 2)
        c, s = math.cos(phi), math.sin(phi)
        move = lambda p: (c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty, p[2] + phi)
        moved = task_reward(EpisodeFrame.from_pose(move(pose0)), move(pose0), move(pose1), window, w)
        worst = max(worst, abs(moved - base))
    ok &= worst < 1e-12
    report("2 directional-reward", bool(ok), f"3 substitutions exact, invariance err {worst:.1e}")


def test_c3_safety_margin():
    cases = (
        safety_margin(WalkerState()) == pytest.approx(math.pi / 12, abs=1e-15)
        and safety_margin(WalkerState(pitch=math.pi / 12)) == pytest.approx(0.0, abs=1e-15)
        and safety_margin(WalkerState(pitch=0.0, roll=math.pi / 4))
        == pytest.approx(-math.pi / 12, abs=1e-15)
    )
    rng = np.random.default_rng(3)
    walker = PlanarWalker(E.Terrain("probe", 1.0, 0.05), seed=1)
    mismatches = 0
    for _ in range(10_000):
        walker.state.pitch = rng.uniform(-0.5, 0.5)
        walker.state.roll = rng.uniform(-0.9, 0.9)
        res = walker.step(rng.uniform(-1, 1, 4))
        if res.events.fall != (safety_margin(res.state) < 0.0):
            mismatches += 1
    report(
        "3 safety-margin",
        cases and mismatches == 0,
        f"tabulated cases exact, {mismatches} fall/margin mismatches in 10k states",
    )


def test_c4_dual_dynamics():
    ln = Learner(4, 4, SacConfig(hidden=(8,), lambda_lr=0.01), seed=0)
    rng = np.random.default_rng(10)
    sign_violations = 0
    negative = 0
    for _ in range(10_000):
        ln.lam = rng.uniform(0.0, 2.0)
        margin = rng.uniform(-0.3, 0.3)
        n = 4
        batch = Batch(
            obs=np.zeros((n, 4)), action=np.zeros((n, 4)),
            reward=np.zeros(n), next_obs=np.zeros((n, 4)),
            safety=np.full(n, margin),
            kind=np.full(n, int(TerminationKind.RUNNING)),
        )
        before = ln.lam
        after = ln.lambda_update(batch)
        if after < 0.0:
            negative += 1
        if after > 0.0 and margin != 0.0:
            if math.copysign(1, after - before) != -math.copysign(1, margin):
                sign_violations += 1
    report(
        "4 dual-dynamics",
        sign_violations == 0 and negative == 0,
        f"{sign_violations} sign violations, {negative} negative multipliers in 10k updates",
    )


def test_c5_termination_semantics():
    ln = Learner(6, 4, SacConfig(hidden=(8,)), seed=5)
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        n = 8
        obs = rng.normal(size=(n, 6))
        action = rng.uniform(-0.9, 0.9, (n, 4))
        next_obs = rng.normal(size=(n, 6))
        reward = rng.normal(size=n)
        safety = rng.uniform(-0.2, -0.01, n)
        mk = lambda kind: Batch(obs=obs, action=action, reward=reward.copy(),
                                next_obs=next_obs, safety=safety.copy(),
                                kind=np.full(n, int(kind)))
        snapshot = ln.noise_rng.bit_generator.state
        y_boot = ln.q_target(mk(TerminationKind.BOUNDARY_TIMEOUT))
        ln.noise_rng.bit_generator.state = snapshot
        y_term = ln.q_target(mk(TerminationKind.FALL_TERMINAL))
        ln.noise_rng.bit_generator.state = snapshot
        q1t, q2t, logp, st = ln._next_values(mk(TerminationKind.RUNNING))
        boot_term = ln.config.discount * (np.minimum(q1t, q2t) - ln.alpha * logp)
        worst = max(worst, float(np.max(np.abs((y_boot - y_term) - boot_term))))

        ln.noise_rng.bit_generator.state = snapshot
        s_boot = ln.s_critic_target(mk(TerminationKind.BOUNDARY_TIMEOUT))
        ln.noise_rng.bit_generator.state = snapshot
        s_term = ln.s_critic_target(mk(TerminationKind.FALL_TERMINAL))
        worst = max(worst, float(np.max(np.abs((s_boot - s_term) - ln.config.discount * st))))
    report("5 termination-semantics", worst < 1e-12, f"bootstrap-term mismatch {worst:.1e}")


@pytest.mark.slow
@pytest.mark.acceptance
def test_c6_oob_ablation():
    t0 = time.perf_counter()
    cfg = load_config(None, DESK + ["harness.steps_per_task=6000", "harness.seeds=0 1 2 3 4"])
    rows, cells = run_ablation_oob(cfg)
    passed = True
    details = []
    for workspace in E.WORKSPACE_PRESETS:
        multi = np.mean([c["oob"] for c in cells if c["workspace"] == workspace and c["mode"] == "two-task"])
        single = np.mean([c["oob"] for c in cells if c["workspace"] == workspace and c["mode"] == "single_task"])
        ok = multi <= 0.3 * single
        passed &= ok
        details.append(f"{workspace}: {multi:.1f} vs {single:.1f}")
    elapsed = (time.perf_counter() - t0) / 60
    report("6 oob-ablation", bool(passed), "; ".join(details) + f"; {elapsed:.1f} min")


@pytest.mark.slow
@pytest.mark.acceptance
def test_c7_safety_ablation():
    # 8k steps/task: long enough for the constrained learner's return to
    # recover after the multiplier relaxes, short enough that the early
    # fall shield still dominates the cumulative counts
    t0 = time.perf_counter()
    cfg = load_config(None, DESK + ["harness.steps_per_task=8000", "harness.seeds=0 1 2 3 4"])
    rows, cells = run_ablation_safety(cfg)
    by_mode = {}
    for c in cells:
        by_mode.setdefault(c["mode"], []).append(c)
    falls = {m: np.mean([c["falls"] for c in cs]) for m, cs in by_mode.items()}
    finals = {m: np.mean([c["final_return"] for c in cs]) for m, cs in by_mode.items()}
    fall_ok = falls["lagrangian"] <= 0.6 * falls["fixed_weight_0"]
    return_ok = finals["lagrangian"] >= 0.7 * finals["fixed_weight_0"]
    lowest_ok = finals["fixed_weight_100"] == min(finals.values())
    elapsed = (time.perf_counter() - t0) / 60
    report(
        "7 safety-ablation",
        bool(fall_ok and return_ok and lowest_ok),
        f"falls lag {falls['lagrangian']:.1f} vs fixed0 {falls['fixed_weight_0']:.1f}; "
        f"final lag {finals['lagrangian']:.1f} vs fixed0 {finals['fixed_weight_0']:.1f}; "
        f"fixed100 {finals['fixed_weight_100']:.1f}; {elapsed:.1f} min",
    )


@pytest.mark.slow
@pytest.mark.acceptance
def test_c8_learning_success():
    # reward-scale calibration: the scripted phase-synced gait must clear 25
    returns = []
    for seed in range(5):
        walker = PlanarWalker("flat", seed=seed)
        frame = EpisodeFrame.from_pose(walker.state.pose())
        fwd = TASK_PRESETS["two-task"][0]
        total = 0.0
        for _ in range(500):
            prev_prev = walker.state.prev_prev_action
            prev = walker.state.prev_action
            action = scripted_gait_action(walker.state.phase)
            res = walker.step(action)
            total += 15.0 * task_reward(
                frame, res.pose_before, res.pose_after, (prev_prev, prev, action), fwd
            )
            if res.events.fall:
                break
        returns.append(total)
    calibration = float(np.mean(returns))

    t0 = time.perf_counter()
    cfg = load_config(None, DESK + ["harness.steps_per_task=15000"])
    seeds_ok = 0
    details = []
    for seed in cfg.seeds:
        state, records = training_session(cfg.session_config(seed))
        best = {}
        for r in records:
            best[r.task] = max(best.get(r.task, -math.inf), r.episode_return)
        ok = all(best.get(t, -math.inf) >= 20.0 for t in ("forward", "backward"))
        seeds_ok += ok
        details.append(f"s{seed}:{best.get('forward', 0):.0f}/{best.get('backward', 0):.0f}")
    elapsed = time.perf_counter() - t0
    report(
        "8 learning-success",
        calibration >= 25.0 and seeds_ok >= 3 and elapsed < 3600.0,
        f"scripted gait {calibration:.1f}/episode; {seeds_ok}/5 seeds reach 20 "
        f"(fwd/bwd best: {' '.join(details)}); {elapsed / 60:.1f} min",
    )


@pytest.mark.acceptance
def test_c9_determinism_and_persistence(tmp_path):
    cfg = load_config(None, DESK + ["harness.steps_per_task=700", "sac.warmup=200",
                                    "tasks.horizon=150"])
    runs = [training_session(cfg.session_config(0)) for _ in range(2)]
    rows = [[(r.task, r.steps, r.episode_return, r.cum_falls, r.lam, r.alpha) for r in rec]
            for _, rec in runs]
    bit_reproducible = rows[0] == rows[1]

    ck = tmp_path / "ck.json"
    cp.save_checkpoint(ck, cfg, runs[0][0].learners)
    before = evaluate_policy(ck, episodes=4, seed=9)
    doc = cp.load_checkpoint(ck)
    cfg2, learners2 = cp.restore_learners(doc)
    ck2 = tmp_path / "ck2.json"
    cp.save_checkpoint(ck2, cfg2, learners2)
    after = evaluate_policy(ck2, episodes=4, seed=9)
    round_trip = before.returns == after.returns and (
        before.mean_forward_displacement == after.mean_forward_displacement
    )
    report(
        "9 determinism-persistence",
        bit_reproducible and round_trip,
        f"identical seeded runs: {bit_reproducible}; checkpoint round-trip exact: {round_trip}",
    )
