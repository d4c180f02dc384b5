"""Compare the compiled and pure-Python eigensolver kernels.

    python3 benchmarks/bench_eigensolver.py [--repeats 5]

Times one full diagonalization of the emitter+lattice Hamiltonian for each
geometry at acceptance size, plus LAPACK for reference, and checks that both
kernels agree with each other.
"""

import argparse
import time

import numpy as np

from chiralqed import _backend
from chiralqed.dynamics import EmitterConfig, full_hamiltonian
from chiralqed.lattice import DisorderSpec, Geometry, Kind, apply_disorder, build_lattice

CASES = [
    ("double_comb N=20", Geometry(Kind.DOUBLE_COMB, 20)),
    ("diamond N=31", Geometry(Kind.DIAMOND, 31)),
    ("stub N=31", Geometry(Kind.STUB, 31, v=1.0)),
    ("diamond N=61", Geometry(Kind.DIAMOND, 61)),
]


def best_of(fn, h, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn(h)
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    kernels = _backend.kernels()
    names = sorted(kernels)
    print(f"{'case':<18}{'order':>6}" + "".join(f"{n + ' [ms]':>15}" for n in names)
          + f"{'lapack [ms]':>14}{'speedup':>9}{'max |dw|':>11}")
    for label, geometry in CASES:
        lat = apply_disorder(build_lattice(geometry), DisorderSpec(1.0, seed=1))
        h = full_hamiltonian(lat, EmitterConfig())
        timings, results = {}, {}
        for name in names:
            timings[name], results[name] = best_of(kernels[name], h, args.repeats)
        t_lapack, _ = best_of(np.linalg.eigh, h, args.repeats)
        w = [results[n][0] for n in names]
        spread = max(float(np.abs(a - w[0]).max()) for a in w)
        speedup = timings["python"] / timings["cython"] if "cython" in timings else float("nan")
        print(f"{label:<18}{h.shape[0]:>6}" + "".join(f"{1e3 * timings[n]:>15.2f}" for n in names)
              + f"{1e3 * t_lapack:>14.2f}{speedup:>9.1f}{spread:>11.1e}")
    if "cython" not in kernels:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
