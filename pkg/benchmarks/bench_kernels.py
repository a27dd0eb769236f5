"""Benchmark the compiled kernel core against the numpy fallback.

Times each ABI function at training-realistic shapes, then an end-to-end
training slice per backend. Run:

    python benchmarks/bench_kernels.py [--batch 64] [--hidden 64]
"""

import argparse
import time

import numpy as np

from walklab.kernels import pykernels

try:
    from walklab.kernels import _core
except ImportError:
    _core = None


def best_of(f, repeats=5, iters=2000):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(iters):
            f()
        best = min(best, (time.perf_counter() - t0) / iters)
    return best * 1e6


def op_benchmarks(batch, hidden):
    rng = np.random.default_rng(0)
    sizes = [52, hidden, hidden, 1]
    ws = [np.ascontiguousarray(rng.standard_normal((sizes[i + 1], sizes[i]))) for i in range(3)]
    bs = [rng.standard_normal(sizes[i + 1]) for i in range(3)]
    x = rng.standard_normal((batch, 52))
    up = rng.standard_normal((batch, 1))
    _, acts = pykernels.mlp_forward_cached(ws, bs, x)
    p = ws[1].copy()
    g = rng.standard_normal(p.shape)
    m, v = np.zeros_like(p), np.zeros_like(p)
    tgt = ws[1].copy()
    head_out = rng.standard_normal((batch, 8))
    noise = rng.standard_normal((batch, 4))
    a, _, s = pykernels.head_sample(head_out, noise)
    da = rng.standard_normal((batch, 4))
    dlp = rng.standard_normal(batch)
    reward = rng.standard_normal(batch)
    boot = np.ones(batch)
    q1 = rng.standard_normal(batch)
    q2 = rng.standard_normal(batch)
    lp = rng.standard_normal(batch)
    pred = rng.standard_normal((batch, 1))
    target = rng.standard_normal(batch)

    return {
        "mlp_forward": lambda k: k.mlp_forward(ws, bs, x),
        "mlp_forward_cached": lambda k: k.mlp_forward_cached(ws, bs, x),
        "mlp_backward": lambda k: k.mlp_backward(ws, acts, up),
        "mlp_backward_input": lambda k: k.mlp_backward_input(ws, acts, up),
        "adam_step": lambda k: k.adam_step_inplace(p, g, m, v, 5, 3e-4, 0.9, 0.999, 1e-8),
        "polyak": lambda k: k.polyak_inplace(tgt, ws[1], 0.005),
        "head_sample": lambda k: k.head_sample(head_out, noise),
        "head_sample_grad": lambda k: k.head_sample_grad(head_out, a, s, noise, da, dlp),
        "soft_backup": lambda k: k.soft_backup(reward, boot, 0.99, 0.2, q1, q2, lp),
        "mse_upstream": lambda k: k.mse_upstream(pred, target),
    }


def session_benchmark(backend, steps=1200, hidden=64, batch=64):
    import os
    import subprocess
    import sys

    code = f"""
import time
from walklab.tasks import SessionConfig, training_session
from walklab.sac import SacConfig
cfg = SessionConfig(seed=0, steps_per_task={steps // 2}, horizon=400,
    sac=SacConfig(hidden=({hidden}, {hidden}), batch_size={batch}, warmup=300))
t0 = time.perf_counter()
state, _ = training_session(cfg)
print(state.steps / (time.perf_counter() - t0))
"""
    env = dict(os.environ, WALKLAB_KERNELS=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--session-steps", type=int, default=1200)
    args = ap.parse_args()

    ops = op_benchmarks(args.batch, args.hidden)
    print(f"kernel op timings, batch={args.batch}, hidden={args.hidden} (us/call, best of 5)")
    print(f"{'op':22s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, call in ops.items():
        t_py = best_of(lambda: call(pykernels))
        if _core is None:
            print(f"{name:22s} {t_py:10.2f} {'n/a':>10s}")
            continue
        t_cy = best_of(lambda: call(_core))
        print(f"{name:22s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.2f}x")

    print("\nend-to-end training slice (env steps/s, higher is better)")
    py_rate = session_benchmark("python", args.session_steps, args.hidden, args.batch)
    print(f"{'python':22s} {py_rate:10.0f}")
    if _core is not None:
        cy_rate = session_benchmark("compiled", args.session_steps, args.hidden, args.batch)
        print(f"{'compiled':22s} {cy_rate:10.0f} {cy_rate / py_rate:7.2f}x")


if __name__ == "__main__":
    main()
