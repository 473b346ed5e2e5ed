"""Time ART1 training on the compiled kernel against the numpy fallback.

    python benchmarks/bench_art1.py --patterns 5000 --dim 64 --repeat 3

Both kernels must produce identical clusters; the script exits non-zero if
they do not.
"""

import argparse
import sys
import timeit

import numpy as np

from wlm.art1 import Art1Config, Art1Model, available


def make_patterns(m, n, density, seed):
    """Sparse binary rows built around a few shared "interest" groups."""
    rng = np.random.default_rng(seed)
    centres = rng.random((max(2, m // 200), n)) < density * 2
    rows = centres[rng.integers(0, len(centres), m)] & (rng.random((m, n)) < 0.7)
    rows |= rng.random((m, n)) < density / 4
    empty = ~rows.any(axis=1)
    rows[empty, rng.integers(0, n, int(empty.sum()))] = True
    return rows.astype(np.uint8)


def train_once(kernel, patterns, rho):
    model = Art1Model(patterns.shape[1], Art1Config(rho), backend=kernel)
    result = model.train(patterns)
    return model, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--patterns", type=int, default=5000)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--density", type=float, default=0.06)
    ap.add_argument("--vigilance", type=float, action="append")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    rhos = args.vigilance or [0.3, 0.4, 0.5]

    kernels = available()
    if "cython" not in kernels:
        print("compiled kernel not built; only the numpy fallback is timed", file=sys.stderr)
    patterns = make_patterns(args.patterns, args.dim, args.density, args.seed)
    print(f"{args.patterns} patterns x {args.dim} bits, "
          f"mean {patterns.sum(axis=1).mean():.1f} set bits, best of {args.repeat}")
    print(f"{'rho':>5} {'backend':>8} {'clusters':>9} {'epochs':>7} {'seconds':>9} {'speedup':>8}")

    status = 0
    for rho in rhos:
        runs = {}
        for name, kernel in sorted(kernels.items(), reverse=True):  # python first
            secs = min(timeit.repeat(lambda: train_once(kernel, patterns, rho),
                                     number=1, repeat=args.repeat))
            model, result = train_once(kernel, patterns, rho)
            runs[name] = (secs, model, result)
        base = runs["python"][0]
        for name, (secs, model, result) in runs.items():
            print(f"{rho:>5g} {name:>8} {model.n_committed:>9} {result.epochs_used:>7} "
                  f"{secs:>9.4f} {base / secs:>7.1f}x")
        if "cython" in runs:
            a, b = runs["python"], runs["cython"]
            same = (a[2].assignment.clusters == b[2].assignment.clusters
                    and np.array_equal(a[1].committed_prototypes(), b[1].committed_prototypes())
                    and np.array_equal(a[1].bottom_up[: a[1].n_committed],
                                       b[1].bottom_up[: b[1].n_committed]))
            if not same:
                print(f"rho={rho:g}: kernels disagree", file=sys.stderr)
                status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
