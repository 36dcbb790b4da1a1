"""Compare the compiled and numpy kernel backends on block encode/decode.

    python benchmarks/bench_kernels.py --blocks 200000 --block-size 16
"""

import argparse
import time

import numpy as np

from ascfmap import backend


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--blocks", type=int, default=200_000)
    p.add_argument("--block-size", type=int, default=16)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    shape = (args.blocks, args.block_size)
    inputs = {
        "int8": (rng.integers(-128, 128, shape), False),
        "fp16": ((rng.standard_normal(shape) * 10).astype(np.float16).astype(np.float64), True),
    }
    mods = backend.available()
    print(f"{args.blocks} blocks x {args.block_size} samples, best of {args.repeat}")
    print(f"{'backend':<8}{'input':<6}{'encode MS/s':>13}{'decode MS/s':>13}")
    results = {}
    for name, mod in sorted(mods.items()):
        for label, (vals, is_float) in inputs.items():
            enc = mod.encode_blocks(vals, False, 0, is_float)
            te = _best_of(lambda: mod.encode_blocks(vals, False, 0, is_float), args.repeat)
            td = _best_of(lambda: mod.decode_blocks(*enc, is_float), args.repeat)
            results[name, label] = (te, td)
            n = vals.size / 1e6
            print(f"{name:<8}{label:<6}{n / te:>13.1f}{n / td:>13.1f}")
    if "cython" in mods:
        for label in inputs:
            te_c, td_c = results["cython", label]
            te_p, td_p = results["python", label]
            print(f"speedup {label}: encode x{te_p / te_c:.1f}, decode x{td_p / td_c:.1f}")
    else:
        print("compiled backend not built; only the numpy fallback was measured")


if __name__ == "__main__":
    main()
