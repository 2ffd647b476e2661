import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcrm.errors import DomainError
from lcrm.front import FrontMesh
from lcrm.grid import GridSpec, ScalarField, apply_boundary, sample_trilinear
from lcrm.transfer import delta, delta1, distribute, kernel_interpolate, kernel_stamp, normalized_surface_field

from conftest import sphere_mesh


def test_delta1_examples():
    assert delta1(0.0) == pytest.approx(0.5, abs=1e-15)
    assert delta1(0.5) == pytest.approx((2 + np.sqrt(2)) / 8, abs=1e-15)
    assert delta1(0.5) == pytest.approx(0.426777, abs=1e-6)
    assert delta1(1.0) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(DomainError):
        delta1(1.2)


def test_delta_examples():
    assert delta(1.5) == pytest.approx(0.5 - delta1(0.5), abs=1e-15)
    assert delta(1.5) == pytest.approx(0.073223, abs=1e-6)
    assert delta(2.3) == 0.0
    assert delta(-2.0) == 0.0
    assert sum(delta(r) for r in (-1.5, -0.5, 0.5, 1.5)) == pytest.approx(1.0, abs=1e-15)


def test_partition_of_unity_random_offsets():
    rng = np.random.default_rng(7)
    s = rng.random(10_000)
    tot = sum(delta(s - i) for i in range(-2, 3))
    assert np.abs(tot - 1.0).max() <= 1e-12


def test_delta_nonnegative_and_supported():
    r = np.linspace(-3, 3, 601)
    d = delta(r)
    assert d.min() >= 0.0
    assert np.all(d[np.abs(r) >= 2] == 0.0)


def test_kernel_stamp_sums_to_one():
    g = GridSpec.cube(10, 1.0)
    st_ = kernel_stamp(g, [0.33, 0.61, 0.07])
    assert st_.weights.shape == (4, 4, 4)
    assert st_.weights.sum() * g.cell_volume == pytest.approx(1.0, abs=1e-13)


def test_distribute_single_point_integrates_to_one():
    g = GridSpec.cube(10, 1.0)
    m = distribute(g, [[0.41, 0.52, 0.33]], [1.0], [1.0])
    assert m.interior.sum() * g.cell_volume == pytest.approx(1.0, abs=1e-14)


def test_distribute_at_cell_centre():
    g = GridSpec.cube(10, 1.0)
    centre = g.x0 + (np.array([4, 4, 4]) + 0.5) * g.h
    m = distribute(g, [centre], [2.0], [0.5])
    assert m.interior[4, 4, 4] == pytest.approx(2.0 * 0.5 * 0.5 ** 3 / g.cell_volume, rel=1e-14)


def test_distribute_empty():
    g = GridSpec.cube(8, 1.0)
    m = distribute(g, np.zeros((0, 3)), [], [])
    assert not m.values.any()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.sampled_from(["periodic", "zero_gradient", "no_slip_wall"]), st.integers(0, 10 ** 6))
def test_distribute_conserves_total(npts, bc, seed):
    rng = np.random.default_rng(seed)
    g = GridSpec.cube(8, 1.0, boundary=bc)
    pos = rng.random((npts, 3))
    pos[: npts // 2] = np.clip(pos[: npts // 2] * 0.1, 0, 1)  # crowd a wall corner
    vals = rng.random(npts)
    areas = rng.random(npts)
    m = distribute(g, pos, vals, areas)
    total = float(np.dot(vals, areas))
    assert m.interior.sum() * g.cell_volume == pytest.approx(total, rel=1e-12)


def test_uniform_gamma_normalizes_to_constant():
    grid, mesh = sphere_mesh(20, gamma=0.8)
    s = normalized_surface_field(mesh, grid)
    assert s.band.any()
    assert np.abs(s.gamma.values[s.band] - 0.8).max() <= 1e-10
    assert not s.gamma.values[~s.band].any()


def test_single_element_field():
    g = GridSpec.cube(10, 1.0)
    m = FrontMesh([[(0.4, 0.4, 0.5), (0.6, 0.4, 0.5), (0.5, 0.6, 0.5)]], [0.37])
    s = normalized_surface_field(m, g)
    assert np.allclose(s.gamma.values[s.band], 0.37, rtol=1e-13)


def test_sinusoidal_gamma_round_trip():
    grid, mesh = sphere_mesh(24, radius=0.3)
    c = mesh.centroids() - 0.5
    theta = np.arccos(c[:, 2] / np.linalg.norm(c, axis=1))
    mesh.gamma = 1 + 0.5 * np.cos(theta)
    s = normalized_surface_field(mesh, grid)
    back = sample_trilinear(s.gamma.values, grid, mesh.centroids())
    assert np.abs(back / mesh.gamma - 1).max() < 0.02


def test_kernel_interpolate_examples():
    g = GridSpec.cube(12, 1.0, boundary="zero_gradient")
    const = ScalarField(g, np.full(g.padded_shape, 2.5, order="F"))
    assert kernel_interpolate(const, [0.3, 0.4, 0.5]) == pytest.approx(2.5, abs=1e-13)
    assert kernel_interpolate(ScalarField(g), [0.3, 0.4, 0.5]) == 0.0
    lin = ScalarField.from_function(g, lambda X, Y, Z: 2 * X - Y + 0.5 * Z)
    # off the boundary the kernel's first moment vanishes
    for p in ([0.37, 0.52, 0.44], [0.5, 0.5, 0.5], [0.61, 0.29, 0.7]):
        assert kernel_interpolate(lin, p) == pytest.approx(2 * p[0] - p[1] + 0.5 * p[2], abs=1e-13)


def test_distribute_and_interpolate_are_adjoint():
    # exact on periodic axes; wall folding conserves mass but is not the adjoint of ghost copies
    rng = np.random.default_rng(11)
    g = GridSpec.cube(10, 1.0, boundary="periodic")
    f = ScalarField(g)
    f.interior[...] = rng.random(g.n)
    apply_boundary(f)
    p = rng.random((5, 3))
    w = rng.random(5)
    m = distribute(g, p, w, np.ones(5))
    lhs = float((m.interior * f.interior).sum() * g.cell_volume)
    rhs = float(np.dot(w, kernel_interpolate(f, p)))
    assert lhs == pytest.approx(rhs, rel=1e-12)
