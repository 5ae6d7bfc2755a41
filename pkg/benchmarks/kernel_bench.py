"""Timing comparison of the jitted kernels against their numpy fallbacks.

Both paths are importable from one process: ``kernels.decode_fold`` is
whatever the ``FJS_NO_NUMBA`` flag selected at import time, while the
``*_numpy`` names always point at the fallback.  Run normally to get a
numba-vs-numpy table; under ``FJS_NO_NUMBA=1`` both columns time the
same fallback code (the table says so instead of lying about a speedup).

Usage: python3 benchmarks/kernel_bench.py [--sizes 6x6,10x10,20x20]
"""

import argparse
import time

import numpy as np

from fjs import kernels
from fjs.fuzzy import DEFAULT_RANK
from fjs.instances import generate


def _random_seqs(rng, n: int, m: int, count: int) -> np.ndarray:
    base = np.repeat(np.arange(n, dtype=np.int64), m)
    return np.stack([rng.permutation(base) for _ in range(count)])


def _fresh_state(batch: int, n: int, m: int):
    next_pos = np.zeros((batch, n), dtype=np.int64)
    job_fc = np.zeros((batch, n, 3))
    machine_fc = np.zeros((batch, m, 3))
    makespan = np.zeros((batch, 3))
    return next_pos, job_fc, machine_fc, makespan


def _bench(fn, repeats: int, inner: int = 1) -> float:
    """Best-of-repeats wall time per call, in ms."""
    fn()  # warmup, also triggers jit compilation
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best * 1000.0


def run(sizes, batch: int, repeats: int, seed: int):
    beta, omega = DEFAULT_RANK.beta, DEFAULT_RANK.omega
    pairs = [
        ("decode_fold", kernels.decode_fold, kernels.decode_fold_numpy),
        ("batch_makespans", kernels.batch_makespans, kernels.batch_makespans_numpy),
        ("advance", kernels.advance, kernels.advance_numpy),
        ("step_contexts", kernels.step_contexts, kernels.step_contexts_numpy),
    ]
    left = "numba" if kernels.USING_NUMBA else "numpy (FJS_NO_NUMBA set)"
    print(f"dispatched path: {left}")
    print("kernel\tsize\tdispatched_ms\tnumpy_ms\tspeedup")

    rng = np.random.default_rng(seed)
    timings = {}
    for n, m in sizes:
        inst = generate(n, m, seed=seed)
        seq = _random_seqs(rng, n, m, 1)[0]
        seqs = _random_seqs(rng, n, m, batch)

        # mid-rollout state for the stepping kernels: replay half a sequence
        next_pos, job_fc, machine_fc, makespan = _fresh_state(batch, n, m)
        for k in range(n * m // 2):
            chosen = seqs[:, k].copy()
            kernels.advance_numpy(
                next_pos, job_fc, machine_fc, makespan, chosen,
                inst.machines, inst.times, beta, omega,
            )
        chosen = seqs[:, n * m // 2].copy()

        for name, hot, cold in pairs:
            if name == "decode_fold":
                args = lambda f: f(inst.machines, inst.times, seq, beta, omega)
                inner = 20
            elif name == "batch_makespans":
                args = lambda f: f(inst.machines, inst.times, seqs, beta, omega)
                inner = 1
            elif name == "advance":
                # mutates: run on scratch copies so every call sees the same state
                def args(f):
                    f(next_pos.copy(), job_fc.copy(), machine_fc.copy(),
                      makespan.copy(), chosen, inst.machines, inst.times, beta, omega)
                inner = 5
            else:
                args = lambda f: f(next_pos, job_fc, machine_fc,
                                   inst.machines, beta, omega)
                inner = 5
            t_hot = _bench(lambda: args(hot), repeats, inner)
            t_cold = _bench(lambda: args(cold), repeats, inner)
            timings[name, f"{n}x{m}"] = (t_hot, t_cold)
            print(f"{name}\t{n}x{m}\t{t_hot:.4f}\t{t_cold:.4f}\t{t_cold / t_hot:.2f}x")
    return timings


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="6x6,10x10,15x15,20x20")
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    sizes = []
    for tok in args.sizes.split(","):
        n, m = tok.lower().split("x")
        sizes.append((int(n), int(m)))
    run(sizes, args.batch, args.repeats, args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
