"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--cutoff 12] [--repeat 20]

Both paths share the same packed operator, so the printed max deviation
doubles as a consistency check.  With MOLCAT_NO_NUMBA=1 only the numpy
column is filled.
"""

import argparse
import time

import numpy as np

from molcat import _accel
from molcat.config import FIG9
from molcat.dynamics import Propagator, plus_vacuum_state
from molcat.hilbert import CompositeSpace
from molcat.model import ModelParams, derive_effective


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoff", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--steps", type=int, default=50, help="RK4 steps per timed call")
    args = ap.parse_args()

    params = ModelParams(**FIG9, kappa=0.1, gamma_v=0.001, gamma_e=0.001)
    eff = derive_effective(params, warn=False)
    space = CompositeSpace.from_cutoffs(args.cutoff, args.cutoff)
    prop = Propagator(params, eff, space)
    rng = np.random.default_rng(1)
    psi = plus_vacuum_state(space).data + 0.01 * (rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim))
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    h = prop.default_step()

    cases = {
        "schrodinger_rhs": lambda nb: _accel.schrodinger_rhs(0.3, psi, prop.op, nb),
        "lindblad_rhs": lambda nb: _accel.lindblad_rhs(0.3, rho, prop.op, prop.jumps, nb),
        f"rk4_vector x{args.steps}": lambda nb: _accel.rk4_vector(psi, 0.0, h, args.steps, prop.op, nb),
        f"rk4_matrix x{args.steps}": lambda nb: _accel.rk4_matrix(rho, 0.0, h, args.steps, prop.op, prop.jumps, nb),
    }
    print(f"dim = {space.dim}, backend available: {_accel.backend()}")
    print(f"{'kernel':22s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases.items():
        reps = max(1, args.repeat // (10 if "rk4_matrix" in name else 1))
        t_np, y_np = best_of(lambda: fn(False), reps)
        if _accel.HAVE_NUMBA:
            t_nb, y_nb = best_of(lambda: fn(True), reps)
            diff = float(np.max(np.abs(y_np - y_nb)))
            print(f"{name:22s} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} {t_np / t_nb:8.1f} {diff:11.2e}")
        else:
            print(f"{name:22s} {1e3 * t_np:12.3f} {'-':>12s} {'-':>8s} {'-':>11s}")


if __name__ == "__main__":
    main()
