import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from lcrm.errors import GeometryError
from lcrm.front import FrontMesh
from lcrm.grid import GridSpec, ScalarField, interpolate_trilinear
from lcrm.reconstruction import (build_distance, build_indicator, contour_mesh, enclosed_volume,
                                 front_from_levelset, levelset_field, reconstruct, rescale_mass,
                                 sphere_levelset, volume_axis)
from lcrm.transfer import normalized_surface_field

from conftest import sphere_mesh


def components(mesh, tol=1e-9):
    """Number of vertex-connected pieces of a soup."""
    pts = np.round(mesh.verts.reshape(-1, 3) / tol).astype(np.int64)
    _, ids = np.unique(pts, axis=0, return_inverse=True)
    ids = ids.reshape(-1, 3)
    rows = np.concatenate([ids[:, 0], ids[:, 1]])
    cols = np.concatenate([ids[:, 1], ids[:, 2]])
    n = ids.max() + 1
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(adj, directed=False)[0]


def test_sphere_distance_in_band():
    grid = GridSpec.cube(30, 2.5, boundary="zero_gradient")
    mesh = front_from_levelset(grid, sphere_levelset((1.25,) * 3, 0.5))
    dist = build_distance(mesh, grid)
    X, Y, Z = grid.cell_center_grid()
    exact = np.sqrt((X - 1.25) ** 2 + (Y - 1.25) ** 2 + (Z - 1.25) ** 2) - 0.5
    band = np.abs(exact) < 1.5 * grid.hx
    # chordal facets sit inside the sphere by less than h^2 / (2R)
    assert np.abs(dist.phi.interior - exact)[band].max() < grid.hx ** 2 / (2 * 0.5) + 1e-12
    # phase 1 (inside) is negative
    assert dist.phi.interior[15, 15, 15] < 0


def test_sphere_centre_value_first_order():
    # the centre lies 12 cells from the front, beyond the exact band: the
    # first-order eikonal extension is accurate to about one cell there
    grid = GridSpec.cube(25, 2.5, boundary="zero_gradient")
    mesh = front_from_levelset(grid, sphere_levelset((1.25,) * 3, 0.5))
    dist = build_distance(mesh, grid)
    centre = interpolate_trilinear(dist.phi, [1.25, 1.25, 1.25])
    assert centre == pytest.approx(-0.5, abs=grid.hx)


def test_cell_on_triangle_plane_is_zero():
    grid = GridSpec.cube(16, 1.0)
    z = grid.centers(2)[7]
    quad = [[(-0.1, -0.1, z), (1.1, -0.1, z), (1.1, 1.1, z)], [(-0.1, -0.1, z), (1.1, 1.1, z), (-0.1, 1.1, z)]]
    dist = build_distance(FrontMesh(quad), grid)
    assert np.abs(dist.phi.interior[4:12, 4:12, 7]).max() <= 1e-6 * grid.hx


def test_two_spheres_min_distance():
    grid = GridSpec.cube(32, 2.0, boundary="zero_gradient")
    a, b = (0.6, 1.0, 1.0), (1.4, 1.0, 1.0)
    fa, fb = sphere_levelset(a, 0.25), sphere_levelset(b, 0.25)
    mesh = front_from_levelset(grid, lambda X, Y, Z: np.minimum(fa(X, Y, Z), fb(X, Y, Z)))
    dist = build_distance(mesh, grid)
    X, Y, Z = grid.cell_center_grid()
    exact = np.minimum(fa(X, Y, Z), fb(X, Y, Z))
    assert np.array_equal(np.sign(dist.phi.interior), np.sign(exact))
    assert components(mesh) == 2


def test_empty_mesh_raises():
    with pytest.raises(GeometryError):
        build_distance(FrontMesh(), GridSpec.cube(8, 1.0))


def test_indicator_examples():
    grid = GridSpec.cube(8, 1.0)
    h = grid.hx
    for val, I in ((10 * h, 1.0), (-10 * h, 0.0), (0.0, 0.5)):
        phi = ScalarField(grid, np.full(grid.padded_shape, val, order="F"))
        ind = build_indicator(phi, rho1=1.0, rho2=3.0, mu1=0.1, mu2=0.5)
        assert np.allclose(ind.ind.values, I)
        assert np.allclose(ind.rho.values, 1.0 + 2.0 * I)
        assert np.allclose(ind.mu.values, 0.1 + 0.4 * I)


def test_indicator_monotone_across_front():
    grid = GridSpec.cube(16, 1.0)
    phi = levelset_field(grid, lambda X, Y, Z: X - 0.5)
    I = build_indicator(phi).ind.interior[:, 4, 4]
    assert np.all(np.diff(I) >= 0) and I[0] == 0.0 and I[-1] == 1.0


def test_reconstructed_sphere_area():
    grid = GridSpec.cube(30, 2.5)
    mesh = contour_mesh(levelset_field(grid, sphere_levelset((1.25,) * 3, 0.5)))
    assert mesh.total_area == pytest.approx(np.pi, rel=0.02)


def test_positive_phi_gives_empty_mesh():
    grid = GridSpec.cube(8, 1.0)
    phi = ScalarField(grid, np.ones(grid.padded_shape, order="F"))
    assert len(reconstruct(phi)) == 0


def test_constant_gamma_reseeding():
    grid, mesh = sphere_mesh(20, gamma=0.7)
    dist = build_distance(mesh, grid)
    surf = normalized_surface_field(mesh, grid)
    new = reconstruct(dist, surf.gamma, old_mass=0.7 * mesh.total_area)
    assert np.allclose(new.gamma, 0.7 * mesh.total_area / new.total_area, rtol=1e-12)
    assert np.allclose(new.gamma, 0.7, rtol=0.02)


def test_mass_bit_identical_after_reconstruct():
    grid = GridSpec.cube(20, 1.0)
    for r in (0.2, 0.27, 0.33):
        mesh = front_from_levelset(grid, sphere_levelset((0.5, 0.47, 0.52), r), lambda c: 1 + c[:, 2])
        M = mesh.total_surfactant_mass
        new = reconstruct(build_distance(mesh, grid), normalized_surface_field(mesh, grid).gamma, M)
        assert new.total_surfactant_mass == M
        assert np.allclose(new.prev_area, new.areas())


def test_rescale_mass_exact():
    rng = np.random.default_rng(3)
    m = FrontMesh(rng.random((50, 3, 3)), rng.random(50))
    rescale_mass(m, 3.7)
    assert float(np.dot(m.gamma, m.areas())) == 3.7


def test_vertices_on_linear_zero_contour():
    grid = GridSpec.cube(12, 1.0)
    n = np.array([0.3, -0.5, 0.81])
    n /= np.linalg.norm(n)
    phi = levelset_field(grid, lambda X, Y, Z: n[0] * X + n[1] * Y + n[2] * Z - 0.4)
    mesh = contour_mesh(phi)
    vals = interpolate_trilinear(phi, mesh.verts.reshape(-1, 3))
    assert np.abs(vals).max() <= 1e-6 * grid.hx


def test_contour_watertight_sphere():
    grid, mesh = sphere_mesh(16)
    # every edge of a closed soup is shared by exactly two elements
    pts = np.round(mesh.verts.reshape(-1, 3) * 1e9).astype(np.int64)
    _, ids = np.unique(pts, axis=0, return_inverse=True)
    ids = ids.reshape(-1, 3)
    e = np.sort(np.concatenate([ids[:, [0, 1]], ids[:, [1, 2]], ids[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert np.all(counts == 2)
    assert components(mesh) == 1


def test_separated_spheres_stay_apart_and_overlapping_merge():
    grid = GridSpec.cube(32, 2.0, boundary="zero_gradient")
    h = grid.hx
    for gap, expect in ((5 * h, 2), (-0.1, 1)):
        r = 0.3
        a = (1.0 - r - gap / 2, 1.0, 1.0)
        b = (1.0 + r + gap / 2, 1.0, 1.0)
        fa, fb = sphere_levelset(a, r), sphere_levelset(b, r)
        mesh = front_from_levelset(grid, lambda X, Y, Z: np.minimum(fa(X, Y, Z), fb(X, Y, Z)))
        again = reconstruct(build_distance(mesh, grid))
        assert components(again) == expect


def test_volume_preserving_rebuild_keeps_volume():
    grid, mesh = sphere_mesh(20, radius=0.3)
    ax = volume_axis(mesh, grid)
    V0 = enclosed_volume(mesh, grid, ax)
    new = reconstruct(build_distance(mesh, grid), target_volume=V0, axis=ax)
    assert enclosed_volume(new, grid, ax) == pytest.approx(V0, rel=1e-4)
    plain = reconstruct(build_distance(mesh, grid))
    assert enclosed_volume(plain, grid, ax) < V0


@pytest.mark.xfail(reason="linear contouring of a faceted front adds grid-locked roughness that "
                          "compounds over rebuilds; about +1.2% area after 50 at R/h=12", strict=True)
def test_fifty_static_rebuilds_area():
    grid, mesh = sphere_mesh(30, length=2.5, radius=0.5, center=(1.25,) * 3)
    A0 = mesh.total_area
    ax = volume_axis(mesh, grid)
    V0 = enclosed_volume(mesh, grid, ax)
    for _ in range(50):
        mesh = reconstruct(build_distance(mesh, grid), target_volume=V0, axis=ax)
    assert abs(mesh.total_area / A0 - 1) < 0.005
