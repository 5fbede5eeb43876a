"""Time the numba kernels against their numpy twins on identical inputs.

    python3 benchmarks/bench_kernels.py [--batch 20000] [--repeat 5] [--p 1e-3]

Both paths are checked for identical outputs before timing. Set
RACETRACK_ECC_NUMBA=0 to confirm the fallback is what the simulator picks up.
"""

import argparse
import time

import numpy as np

from racetrack_ecc import _kernels as K
from racetrack_ecc.ecc import make_scheme
from racetrack_ecc.senseamp import draw_faults, make_rng


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--n", type=int, default=3)
    args = ap.parse_args()
    if K.issue_outcomes_nb is None:
        print("numba disabled; only the numpy path is available")
    rng = make_rng(0, 0)
    counts = K.random_counts(rng, (args.batch, 512), args.n)
    ops = rng.integers(0, 2, args.batch).astype(np.int8)
    print(f"batch={args.batch} p={args.p} n={args.n} (best of {args.repeat})")
    print(f"{'kernel':<14}{'numpy s':>10}{'numba s':>10}{'speedup':>10}")
    for t in (0, 1, 2, 3):
        width = 64 + (make_scheme(t).r if t else 0)
        faults = draw_faults(rng, args.batch, 8 * width, args.p)
        call_np = lambda: K.issue_outcomes_np(counts, ops, *faults, args.n, width, t)  # noqa: E731
        t_np = best_of(call_np, args.repeat)
        row = f"{'issue t=' + str(t):<14}{t_np:>10.4f}"
        if K.issue_outcomes_nb is not None:
            assert (call_np() == K.issue_outcomes_nb(counts, ops, *faults, args.n, width, t)).all()
            t_nb = best_of(lambda: K.issue_outcomes_nb(counts, ops, *faults, args.n, width, t),
                           args.repeat)
            row += f"{t_nb:>10.4f}{t_np / t_nb:>9.1f}x"
        print(row)
    for copies in (3, 5, 7):
        faults = [draw_faults(rng, args.batch, 512, args.p) for _ in range(copies)]
        t_np = best_of(lambda: K.mr_outcomes_np(counts, ops, faults, args.n, copies), args.repeat)
        row = f"{'mr x' + str(copies):<14}{t_np:>10.4f}"
        if K.mr_outcomes_nb is not None:
            assert (K.mr_outcomes_np(counts, ops, faults, args.n, copies)
                    == K.mr_outcomes_nb(counts, ops, faults, args.n, copies)).all()
            t_nb = best_of(lambda: K.mr_outcomes_nb(counts, ops, faults, args.n, copies), args.repeat)
            row += f"{t_nb:>10.4f}{t_np / t_nb:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
