"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]

Prints one line per kernel with best-of-R wall time for each backend and
checks that both return identical counts.
"""
import argparse
import time

import numpy as np

from ksforge import _kernels
from ksforge.colouring import random_product_bases
from ksforge.ontmodel import EpistemicState, _Sampler, stream
from ksforge.rays import ket


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels.NUMBA is None:
        raise SystemExit("numba is not importable; nothing to compare")

    state = EpistemicState.pure(ket("0+i"))
    sampler = _Sampler(state)
    comp, u = sampler.draw(stream(1), args.samples)
    members = np.array([ket(x).amplitude_array() for x in ("000", "+10", "0+1", "10+", "111", "-10", "0-1", "10-")])
    bases = random_product_bases(4, 4000, np.random.default_rng(0), family="mixed")

    cases = {
        "sample_counts (3 qubits, 8 members)": lambda k: k.sample_counts(members, u, comp, sampler.rot),
        "all_north_counts (4000 bases, n=4)": lambda k: k.all_north_counts(bases),
    }
    for k in (_kernels.NUMBA,):  # compile outside the timed region
        for fn in cases.values():
            fn(k)
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        t_np, r_np = best_of(lambda: fn(_kernels.NUMPY), args.repeat)
        t_nb, r_nb = best_of(lambda: fn(_kernels.NUMBA), args.repeat)
        same = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(
            r_np if isinstance(r_np, tuple) else (r_np,), r_nb if isinstance(r_nb, tuple) else (r_nb,)))
        print(f"{name:40s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.1f}  {'same' if same else 'DIFFERENT'}")


if __name__ == "__main__":
    main()
