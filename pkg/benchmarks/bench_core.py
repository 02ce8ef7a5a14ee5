"""Compare the compiled Floquet stepper with the scipy fallback.

    python3 benchmarks/bench_core.py [--n 200] [--tol 1e-10]

Both backends integrate the same monodromy problems; the script reports the
time per integration, the speed-up and the largest disagreement between the
two results.
"""

import argparse
import time

import numpy as np

from dclab import _backend
from dclab.core import OperatorSpec
from dclab.floquet import integrate_system
from dclab.oracle import example3_coefficient


def run(backend, spec, sigmas, tol):
    nodes = np.array([0.0, 2 * np.pi])
    t0 = time.perf_counter()
    out = [integrate_system(spec, s, nodes, tol, backend=backend).V[-1] for s in sigmas]
    return time.perf_counter() - t0, np.array(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _backend.BACKEND != "cython":
        raise SystemExit("compiled stepper not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(args.seed)
    sigmas = rng.uniform(-4, 4, args.n) + 1j * rng.uniform(-4, 4, args.n)
    cases = {
        "single mode k=1": OperatorSpec(1.0, 1.0, 0.0, 1.0, example3_coefficient(0.5, 1)),
        "single mode k=3": OperatorSpec(1.0, 1.0, 0.0, 1.0, example3_coefficient(2 + 1j, 3)),
    }
    print(f"{'case':<18}{'cython ms':>11}{'python ms':>11}{'speed-up':>10}{'max diff':>11}")
    for name, spec in cases.items():
        run("cython", spec, sigmas[:2], args.tol)        # warm-up
        tc, Vc = run("cython", spec, sigmas, args.tol)
        tp, Vp = run("python", spec, sigmas, args.tol)
        diff = float(np.max(np.abs(Vc - Vp) / np.maximum(1.0, np.abs(Vp))))
        print(f"{name:<18}{1e3 * tc / args.n:>11.3f}{1e3 * tp / args.n:>11.3f}{tp / tc:>10.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
