"""Time the compiled hierarchy kernel against the pure-numpy fallback.

Both backends propagate the same noise realizations, so the outputs must
agree to rounding; the script checks that before it prints timings.

    python3 benchmarks/bench_backends.py --n-traj 64 --depth 4
"""

import argparse
import time

import numpy as np

from maglink._hier import available_backends, run_chunk
from maglink.hilbert import Frame, TimeGrid
from maglink.noise import ou_noise_path
from maglink.opensys import (
    BathConfig,
    _embedded_generator,
    _plan_grid,
    integration_step,
)
from maglink.params import SystemParams


def workload(n_traj: int, depth: int, t_end: float, seed: int):
    params = SystemParams(g_m=0.4, g_q=0.3, J=0.5, Gamma_c=0.4)
    bath = BathConfig(gamma=0.9, coupling_rate=0.4)
    dt, n_steps, stride = _plan_grid(t_end, integration_step(params, bath, depth), 61)
    M = _embedded_generator(params, Frame.ROTATING_AT_OMEGA_Q)
    v0 = np.zeros(7, dtype=complex)
    v0[3] = 1.0  # qubit 1 excited
    noise_grid = TimeGrid(t0=0.0, dt=0.5 * dt, n=2 * n_steps + 1)
    zs = np.empty((n_traj, 2, noise_grid.n), dtype=complex)
    for i in range(n_traj):
        zs[i] = ou_noise_path(bath.gamma, noise_grid, (seed, i)).samples
    return M, bath, v0, zs, dt, n_steps, stride


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-traj", type=int, default=64)
    ap.add_argument("--depth", type=int, default=4)
    ap.add_argument("--t-end", type=float, default=12.0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()

    backends = available_backends()
    if backends == ("numpy",):
        print("compiled kernel not built; timing the numpy fallback only")

    M, bath, v0, zs, dt, n_steps, stride = workload(
        args.n_traj, args.depth, args.t_end, args.seed)
    print(f"workload: {args.n_traj} trajectories, depth {args.depth}, "
          f"{n_steps} steps of dt={dt:.3e}")

    results = {}
    outputs = {}
    for backend in backends:
        best = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            y = run_chunk(M, bath.amp, bath.gamma, args.depth, v0, zs, dt,
                          n_steps, stride, backend=backend)
            best = min(best, time.perf_counter() - t0)
        results[backend] = best
        outputs[backend] = y
        print(f"  {backend:>6}: {best:8.3f} s   "
              f"({args.n_traj / best:7.1f} traj/s)")

    if len(backends) == 2:
        gap = float(np.abs(outputs["cython"] - outputs["numpy"]).max())
        print(f"  max |cython - numpy| = {gap:.3e}")
        print(f"  speedup: {results['numpy'] / results['cython']:.1f}x")
        if gap > 1e-12:
            print("  BACKENDS DISAGREE")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
