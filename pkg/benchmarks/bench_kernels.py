"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 3 4] [--repeat 3]

Prints one row per (kernel, n) with the best wall-clock time of each
backend and the speed-up. Both backends are also checked to agree.
"""

import argparse
import sys
import time

from ttcsd import _kernels_py, kernels

try:
    from ttcsd import _kernels as compiled
except ImportError:
    compiled = None


def best_of(repeat, fn, *args):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def cases(n):
    perms, ranks = kernels.permutation_tables(n)
    table = kernels.ttc_table(n)
    return [
        ("ttc_table", lambda k: k.ttc_table(n, perms)),
        ("scan_sp", lambda k: k.scan_sp(table, ranks, n, False)),
        ("scan_sp top", lambda k: k.scan_sp(table, ranks, n, True)),
        ("scan_ir_eff", lambda k: k.scan_ir_eff(table, ranks, n)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[3, 4])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1

    print(f"{'kernel':<12} {'n':>2} {'compiled s':>11} {'python s':>10} {'speed-up':>9}")
    for n in args.n:
        for name, call in cases(n):
            tc, out_c = best_of(args.repeat, call, compiled)
            tp, out_p = best_of(args.repeat, call, _kernels_py)
            same = (out_c == out_p).all() if hasattr(out_c, "shape") else out_c == out_p
            if not same:
                print(f"backends disagree on {name} at n={n}", file=sys.stderr)
                return 1
            print(f"{name:<12} {n:>2} {tc:>11.4f} {tp:>10.4f} {tp / max(tc, 1e-9):>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
