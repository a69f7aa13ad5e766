"""Time every hot kernel on both backends and print a comparison table.

Usage:
    python3 benchmarks/bench_kernels.py [--cells-1d 8192] [--cells-2d 96]
                                        [--repeats 30]

Each kernel is called once per backend before timing so numba's JIT
compilation cost never lands in the measured loop. Timings are the best of
`--repeats` calls, which is the usual way to suppress scheduler noise.
"""

import argparse
import time

import numpy as np

from plapx import _kernels
from plapx.mesh import Mesh


def _problem(mesh, rng):
    nodal = np.zeros(mesh.n_nodes)
    nodal[mesh.interior_idx] = rng.standard_normal(len(mesh.interior_idx))
    pvals = mesh.values_at_qp(2.0 + rng.uniform(0.0, 1.0, mesh.n_nodes))
    cells = mesh.cells
    sv, sg = mesh.shape_vals, mesh.shape_grads
    vals = np.einsum("cl,ql->cq", nodal[cells], sv)
    grads = np.einsum("cl,qld->cqd", nodal[cells], sg)
    grads_v = np.einsum("cl,qld->cqd",
                        rng.standard_normal(mesh.n_nodes)[cells], sg)
    w = mesh.qp_weights
    return {
        "values_at_qp": (nodal, cells, sv),
        "grads_at_qp": (nodal, cells, sg),
        "modular_sum": (np.abs(vals), pvals, w),
        "energy_sum": (np.abs(vals), pvals, w),
        "grad_mag": (grads,),
        "pairing_sum": (grads, grads_v, pvals, w),
        "assemble_flux": (grads, pvals, w, cells, sg, mesh.n_nodes),
        "assemble_qpfield": (vals, w, cells, sv, mesh.n_nodes),
        "luxemburg_root": (np.abs(vals), pvals, w, 1e-12, 200),
    }


def _best_of(func, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells-1d", type=int, default=8192)
    ap.add_argument("--cells-2d", type=int, default=96,
                    help="cells per side of the square mesh")
    ap.add_argument("--repeats", type=int, default=30)
    opts = ap.parse_args()

    if "numba" not in _kernels.IMPLEMENTATIONS:
        raise SystemExit("numba backend unavailable; nothing to compare")

    rng = np.random.default_rng(0)
    cases = [
        # 64 cells is what the bundled configs solve on: call overhead rules
        ("1d/64", Mesh(1, ((0.0, 1.0),), (64,))),
        (f"1d/{opts.cells_1d}", Mesh(1, ((0.0, 1.0),), (opts.cells_1d,))),
        (f"2d/{opts.cells_2d}x{opts.cells_2d}",
         Mesh(2, ((0.0, 1.0), (0.0, 1.0)), (opts.cells_2d, opts.cells_2d))),
    ]

    header = (f"{'kernel':<18} {'size':<12} {'numpy':>10} {'numba':>10} "
              f"{'speedup':>8}")
    print(header)
    print("-" * len(header))
    geo_mean = []
    for label, mesh in cases:
        args_by_kernel = _problem(mesh, rng)
        for name, args in args_by_kernel.items():
            rows = {}
            for backend in ("numpy", "numba"):
                func = _kernels.IMPLEMENTATIONS[backend][name]
                func(*args)  # warm-up / JIT
                rows[backend] = _best_of(func, args, opts.repeats)
            ratio = rows["numpy"] / rows["numba"]
            geo_mean.append(np.log(ratio))
            print(f"{name:<18} {label:<12} {rows['numpy'] * 1e3:>9.3f}ms "
                  f"{rows['numba'] * 1e3:>9.3f}ms {ratio:>7.2f}x")
    print("-" * len(header))
    print(f"geometric-mean speedup {np.exp(np.mean(geo_mean)):.2f}x "
          f"over {len(geo_mean)} kernel/size pairs "
          f"(best of {opts.repeats} runs)")


if __name__ == "__main__":
    main()
