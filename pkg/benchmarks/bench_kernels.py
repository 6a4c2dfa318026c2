"""Compare the compiled DP kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeats 3] [--scale 1]
"""

import argparse

from postedprice import kernels
from postedprice.bench import run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    rows = run_benchmark(args.repeats, args.scale)
    cols = ["kernel", "case", "python_s", "compiled_s", "speedup", "agree"]
    print("  ".join(f"{c:>16}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>16}" for c in cols))


if __name__ == "__main__":
    main()
