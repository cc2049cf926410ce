"""Time the RK4 propagator backends on the default run.

    python benchmarks/bench_integrate.py [--repeat 3] [--steps 200]

Reports the best wall time per backend and the largest elementwise
difference between the final states.
"""

import argparse
import time

import numpy as np

from lindkoop.lindblad import LindbladModel, SpinChainParams, initial_state, integrate
from lindkoop.propagator import AVAILABLE_BACKENDS


def bench(backend, model, rho0, params, repeat):
    best, traj = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        traj = integrate(model, rho0, params, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, traj.states[-1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args(argv)

    params = SpinChainParams(steps=args.steps)
    model = LindbladModel.from_params(params)
    rho0 = initial_state("d,u,u,u,u")
    results = {b: bench(b, model, rho0, params, args.repeat) for b in AVAILABLE_BACKENDS}

    print(f"N={params.N}, {params.steps} steps x {params.substeps} substeps, best of {args.repeat}")
    for name, (t, _) in results.items():
        print(f"  {name:9s} {t:8.3f} s")
    if len(results) == 2:
        (tc, xc), (tp, xp) = results["compiled"], results["python"]
        print(f"  speedup   {tp / tc:8.2f}x")
        print(f"  max |diff| {np.max(np.abs(xc - xp)):.2e}")


if __name__ == "__main__":
    main()
