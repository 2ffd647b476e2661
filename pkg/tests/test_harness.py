import csv
import json

import numpy as np
import pytest

from lcrm.errors import ConfigError, GeometryError
from lcrm.grid import GridSpec
from lcrm.harness.benchmarks import SCENARIOS, BenchReport, list_benchmarks, measure_drop_ellipsoid, run_benchmark
from lcrm.harness.oracles import (convergence_orders, exact_bulk_adsorption, l1_error, linf_error,
                                  oracle_bulk_adsorption, oracle_expanding_sphere, oracle_sphere_diffusion,
                                  oracle_ygb)
from lcrm.reconstruction import front_from_levelset, sphere_levelset


def test_expanding_sphere_oracle():
    assert oracle_expanding_sphere(25.0, 0.5, 0.01, 1.0) == pytest.approx(4.0 / 9.0)
    assert oracle_expanding_sphere(0.0, 0.5, 0.01, 0.7) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        oracle_expanding_sphere(100.0, 0.5, -0.01, 1.0)


def test_sphere_diffusion_oracle():
    assert oracle_sphere_diffusion(np.pi, 0.2, 1.0, 0.5) == pytest.approx(0.6010, abs=1e-4)
    assert oracle_sphere_diffusion(np.pi / 2, 0.1, 1.0, 0.5) == pytest.approx(0.5)
    assert oracle_sphere_diffusion(0.0, 0.0, 1.0, 0.5) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        oracle_sphere_diffusion(0.0, -1.0, 1.0, 0.5)


def test_ygb_oracle():
    assert oracle_ygb(0.125, 0.8, 0.5, 5.0, 0.1, 0.1) == pytest.approx(0.01333, abs=1e-5)
    with pytest.raises(ValueError):
        oracle_ygb(0.125, 0.8, 0.5, 0.0, 0.1, 0.1)


def test_bulk_adsorption_oracles():
    args = (0.1, 1.0, 0.1, 0.5, 1.0)
    assert oracle_bulk_adsorption(0.5, *args)[()] == pytest.approx(1.5668325044687184, rel=1e-12)
    assert oracle_bulk_adsorption(0.5, *args, sign=-1.0)[()] == pytest.approx(0.43316749553128164, rel=1e-12)
    assert exact_bulk_adsorption(0.5, *args)[()] == pytest.approx(0.4821145141076998, rel=1e-12)
    assert np.allclose(oracle_bulk_adsorption(np.array([0.5, 1.0]), 0.1, 0.0, 0.1, 0.5, 2.0), 2.0)
    with pytest.raises(ValueError):
        oracle_bulk_adsorption(0.4, *args)


def test_exact_profile_satisfies_robin_condition():
    k_a, D, R, t = 1.0, 0.1, 0.5, 0.05
    r = R + np.array([0.0, 1e-6])
    C = exact_bulk_adsorption(r, t, k_a, D, R, 1.0)
    assert D * (C[1] - C[0]) / 1e-6 == pytest.approx(k_a * C[0], rel=1e-3)
    assert exact_bulk_adsorption(5.0, t, k_a, D, R, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_error_norms():
    assert l1_error([1, 2, 3], [1, 2, 4]) == pytest.approx(1.0 / 3.0)
    assert linf_error([1, 2, 3], [1, 2.5, 4]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        l1_error([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        l1_error([], [])
    assert convergence_orders([32, 64], [1e-2, 2.5e-3]) == [pytest.approx(2.0)]
    assert convergence_orders([32], [1e-2]) == []


def _ellipsoid(axes, angle, n=48):
    grid = GridSpec.cube(n, 2.0, boundary="periodic")
    c, s = np.cos(angle), np.sin(angle)
    a, b, w = axes

    def fn(X, Y, Z):
        x, y, z = X - 1.0, Y - 1.0, Z - 1.0
        # rotate by ``angle`` in the x-z plane
        xr = c * x + s * z
        zr = -s * x + c * z
        return np.sqrt((xr / a) ** 2 + (zr / b) ** 2 + (y / w) ** 2) - 1.0

    return front_from_levelset(grid, fn)


def test_drop_shape_of_sphere_is_degenerate():
    grid = GridSpec.cube(32, 2.0, boundary="periodic")
    shape = measure_drop_ellipsoid(front_from_levelset(grid, sphere_levelset((1.0,) * 3, 0.5)), degenerate_tol=2e-2)
    assert shape.degenerate and shape.theta == 0.0
    assert shape.L == pytest.approx(1.0, rel=0.01)


def test_drop_shape_of_tilted_ellipsoid():
    shape = measure_drop_ellipsoid(_ellipsoid((0.6, 0.3, 0.3), np.pi / 6))
    assert not shape.degenerate
    assert shape.theta == pytest.approx(0.5236, abs=0.01)
    assert shape.L / shape.B == pytest.approx(2.0, rel=0.01)
    assert shape.L == pytest.approx(1.2, rel=0.01)


def test_drop_shape_needs_elements():
    from lcrm.front import FrontMesh
    with pytest.raises(GeometryError):
        measure_drop_ellipsoid(FrontMesh(np.zeros((0, 3, 3))))


def test_registry_and_unknown_name():
    names = [row[0] for row in list_benchmarks()]
    assert names == list(SCENARIOS)
    assert {"expanding_sphere", "sphere_diffusion", "bulk_adsorption", "marangoni", "shear_drop"} <= set(names)
    with pytest.raises(ConfigError):
        run_benchmark("no_such_case")


def test_report_write(tmp_path):
    rep = BenchReport("demo", {"a": 1}, "metric", "<= 1", [8, 16],
                      series={8: [(0.0, 1.0, 1.0), (0.5, 0.9, 1.0)]}, l1={8: 0.05}, value={8: 0.05}, passed=True)
    rep.write(tmp_path)
    d = json.loads((tmp_path / "bench_report.json").read_text())
    assert d["name"] == "demo" and d["passed"] is True and d["value"] == {"8": 0.05}
    rows = list(csv.reader(open(tmp_path / "bench_series.csv")))
    assert rows[0] == ["resolution", "coordinate", "measured", "oracle"]
    assert len(rows) == 3 and float(rows[2][2]) == 0.9
