"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from hasym import _pykernels

try:
    from hasym import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    s = np.linspace(0, 1, 512)
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    f = 1 + np.exp(2j * np.pi * s1) + np.exp(2j * np.pi * s2)
    hx, hy, hz = (np.ascontiguousarray(a.ravel()) for a in (f.real, f.imag, np.zeros_like(s1)))
    field2 = 2 * np.abs(f)
    x = np.linspace(-2, 2, 64)
    field3 = np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)
    levels = np.sort(rng.standard_normal((100_000, 8)), axis=1)
    spectrum = np.sort(rng.standard_normal(100_000))
    return {
        "pauli_gaps 512x512": lambda k: k.pauli_gaps(hx, hy, hz),
        "local_minima 512x512": lambda k: k.local_minima(field2, 0.6),
        "local_minima 64^3": lambda k: k.local_minima(field3, 0.7),
        "min_adjacent_gaps 1e5x8": lambda k: k.min_adjacent_gaps(levels),
        "cluster_sorted 1e5": lambda k: k.cluster_sorted(spectrum, 1e-5),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name, _ in backends) + ("     speedup" if _kernels else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for _, k in backends]
        row = f"{label:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if _kernels:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
