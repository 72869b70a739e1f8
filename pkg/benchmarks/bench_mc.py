#!/usr/bin/env python3
"""Compare the compiled sampling kernel against the NumPy fallback.

Times the uncentered second-moment accumulation that dominates Monte-Carlo
verification runs, at a few joint dimensions, and checks that the two
backends agree to accumulation rounding on identical variates.

    python benchmarks/bench_mc.py [--samples N] [--repeat K]
"""

import argparse
import time

import numpy as np

from scalable_ib import mc


def make_chol(d: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    return np.linalg.cholesky(a @ a.T + d * np.eye(d))


def time_backend(backend: str, chol: np.ndarray, n: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        mc.accumulate_chunk(0, 0, chol, n, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=1 << 18)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = mc.available_backends()
    print(f"backends: {', '.join(backends)} (active: {mc.BACKEND})")
    print(f"samples per call: {args.samples}, best of {args.repeat}")
    print()
    header = f"{'dim':>4} " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}{'max rel diff':>14}"
    print(header)

    for d in (2, 4, 8, 16, 32):
        chol = make_chol(d)
        times = [time_backend(b, chol, args.samples, args.repeat) for b in backends]
        row = f"{d:>4} " + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(backends) == 2:
            a = mc.accumulate_chunk(0, 0, chol, args.samples, backend=backends[0])
            b = mc.accumulate_chunk(0, 0, chol, args.samples, backend=backends[1])
            rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            row += f"{times[0] / times[1]:>9.2f}x{rel:>14.2e}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
