"""Time the numba kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python3 benchmarks/bench_kernels.py --train    # plus one BiGAN segment per backend

The ``--train`` run starts two subprocesses, one with GRIDRISK_DISABLE_JIT=1,
because the backend is chosen at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gridrisk import kernels
from gridrisk.kernels import ACTIVATION_CODES

LRELU = ACTIVATION_CODES["lrelu"]


def _best(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(fan_in, fan_out, rng):
    W = rng.standard_normal((fan_out, fan_in)) * 0.05
    b = np.zeros(fan_out)
    x = rng.random(fan_in)
    g = rng.standard_normal(fan_out)
    m, v = np.zeros(W.size), np.zeros(W.size)
    flat = W.copy().reshape(-1)
    gflat = rng.standard_normal(W.size)

    def cases(impl):
        a, h = impl.dense_forward(W, b, x, LRELU, 0.2)
        return {
            "dense_forward": lambda: impl.dense_forward(W, b, x, LRELU, 0.2),
            "dense_backward": lambda: impl.dense_backward(W, x, a, h, g, LRELU, 0.2),
            "adam_update": lambda: impl.adam_update(flat, gflat, m, v, 1e-4, 0.9, 0.999, 1e-8, 10.0),
        }

    return cases


def run_kernels(sizes, number):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'shape':>14}{'numba [us]':>14}{'numpy [us]':>14}{'speedup':>10}")
    for fan_in, fan_out in sizes:
        cases = kernel_cases(fan_in, fan_out, rng)
        fast, slow = cases(kernels.numba_impl), cases(kernels.numpy_impl)
        for name in fast:
            fast[name]()  # compile outside the timed region
            t_nb = _best(fast[name], number)
            t_np = _best(slow[name], number)
            print(f"{name:<16}{f'{fan_out}x{fan_in}':>14}{t_nb * 1e6:>14.1f}{t_np * 1e6:>14.1f}{t_np / t_nb:>10.2f}")
    args = (24.5, 0.5, 0.83)
    kernels.numba_impl.betainc(*args)
    t_nb = _best(lambda: kernels.numba_impl.betainc(*args), number)
    t_np = _best(lambda: kernels.numpy_impl.betainc(*args), number)
    print(f"{'betainc':<16}{'scalar':>14}{t_nb * 1e6:>14.1f}{t_np * 1e6:>14.1f}{t_np / t_nb:>10.2f}")


TRAIN_SNIPPET = """
import time, numpy as np
from gridrisk import JIT_ENABLED
from gridrisk.bigan import ModelShape, TrainConfig, train_segment
x = np.random.default_rng(0).random({width})
shape = ModelShape({hidden}, {hidden}, {hidden}[::-1], 64)
cfg = TrainConfig(n=10, lr=2e-5, epsilon=1e-12, max_iters=10)
train_segment(x, cfg, shape)
cfg = TrainConfig(n=10, lr=2e-5, epsilon=1e-12, max_iters={iters})
t0 = time.perf_counter()
train_segment(x, cfg, shape)
print(JIT_ENABLED, (time.perf_counter() - t0) / {iters})
"""


def run_training(width, hidden, iters):
    code = TRAIN_SNIPPET.format(width=width, hidden=tuple(hidden), iters=iters)
    print(f"\ntrain_segment, input {width}, hidden {tuple(hidden)}, {iters} iterations")
    for disable in ("0", "1"):
        env = dict(os.environ, GRIDRISK_DISABLE_JIT=disable)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        jit, per_iter = out.stdout.split()
        label = "numba" if jit == "True" else "numpy"
        print(f"  {label}: {float(per_iter) * 1e3:.2f} ms per iteration")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=200, help="calls per timing sample")
    ap.add_argument("--train", action="store_true", help="also time full training iterations")
    ap.add_argument("--iters", type=int, default=60)
    args = ap.parse_args(argv)
    run_kernels([(64, 32), (1180, 384), (1244, 768)], args.number)
    if args.train:
        run_training(1180, [384, 192, 96], args.iters)


if __name__ == "__main__":
    main()
