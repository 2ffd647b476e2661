"""Time the compiled kernels against the numpy fallback on representative inputs.

    python benchmarks/bench_kernels.py [--n 32] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from lcrm import kernels
from lcrm.grid import GridSpec
from lcrm.reconstruction import front_from_levelset, levelset_field, march_ranges, sphere_levelset


def cases(n):
    rng = np.random.default_rng(0)
    grid = GridSpec.cube(n, 1.0, boundary="periodic")
    mesh = front_from_levelset(grid, sphere_levelset((0.5, 0.5, 0.5), 0.3))
    phi = levelset_field(grid, sphere_levelset((0.5, 0.5, 0.5), 0.3))
    shape = grid.padded_shape
    field = np.asfortranarray(rng.standard_normal(shape))
    pts = rng.uniform(2.0, n, size=(len(mesh) * 3, 3))
    vals = rng.standard_normal(len(pts))
    d, _, _ = kernels.python_backend.distance_band(mesh.verts, mesh.normals(), grid.x0, grid.h, grid.n,
                                                   grid.periodic, 3)
    frozen = d <= 2 * grid.hmin
    m = n + 2
    p = np.asfortranarray(rng.standard_normal((m, m, m)))
    rhs = np.asfortranarray(rng.standard_normal((m, m, m)))
    b = [np.asfortranarray(rng.uniform(0.5, 1.5, (m, m, m))) for _ in range(3)]
    diag = np.asfortranarray(-(b[0] + b[1] + b[2]))
    return {
        "spread": lambda k: k.spread(np.zeros(shape, order="F"), pts, vals),
        "gather": lambda k: k.gather(field, pts),
        "trilinear": lambda k: k.trilinear(field, pts),
        "distance_band": lambda k: k.distance_band(mesh.verts, mesh.normals(), grid.x0, grid.h, grid.n,
                                                   grid.periodic, 3),
        "fast_sweep": lambda k: k.fast_sweep(np.where(frozen, d, np.inf), frozen, grid.hmin, grid.periodic),
        "tetra_march": lambda k: k.tetra_march(phi.values, grid.x0, grid.h, march_ranges(grid), 1e-12 * grid.hmin),
        "rbgs": lambda k: k.rbgs(p.copy(order="F"), rhs, *b, diag, 0),
    }, len(mesh)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32, help="cells per axis")
    ap.add_argument("--repeat", type=int, default=3, help="best of this many runs")
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        print("compiled kernels are not built; only the numpy fallback can be timed")
    table, ne = cases(args.n)
    print(f"grid {args.n}^3, sphere front with {ne} elements; best of {args.repeat}")
    print(f"{'kernel':14s} {'numpy [ms]':>11s} {'compiled [ms]':>14s} {'speed-up':>9s}")
    for name, fn in table.items():
        t_py = min(timeit.repeat(lambda: fn(kernels.python_backend), number=1, repeat=args.repeat))
        if kernels.compiled_backend is not None:
            t_c = min(timeit.repeat(lambda: fn(kernels.compiled_backend), number=1, repeat=args.repeat))
            print(f"{name:14s} {1e3 * t_py:11.2f} {1e3 * t_c:14.2f} {t_py / t_c:8.1f}x")
        else:
            print(f"{name:14s} {1e3 * t_py:11.2f} {'-':>14s} {'-':>9s}")


if __name__ == "__main__":
    main()
