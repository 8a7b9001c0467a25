import functools

import numpy as np
import pytest

from hpsscatter import builtin, solve_scene
from hpsscatter.fields import (REGION_INSIDE, REGION_NEAR, REGION_OUTSIDE, eval_exterior,
                               eval_interior, eval_total, eval_total_grid, flux_defect,
                               interior_grid_values)
from hpsscatter.radial_oracle import reference_field, scattering_phases

from conftest import scene


@functools.lru_cache(maxsize=None)
def solved(name, kappa, M, d=(1.0, 0.0)):
    return solve_scene(scene(name, kappa, M), list(d))


def test_exterior_rejects_inside_points():
    b = solved("zero", 20.0, 3)
    with pytest.raises(ValueError):
        eval_exterior(b.scene.mesh, b.us, b.usn, [[0.1, 0.1]], 20.0)


def test_interior_rejects_outside_points():
    with pytest.raises(ValueError):
        eval_interior(solved("zero", 20.0, 3), [[0.7, 0.0]])


def test_zero_potential_fields():
    b = solved("zero", 20.0, 4, (0.6, 0.8))
    d = np.array([0.6, 0.8])
    inside = np.random.default_rng(1).uniform(-0.5, 0.5, (40, 2))
    assert np.max(np.abs(eval_interior(b, inside)[:, 0] - np.exp(20j * inside @ d))) <= 1e-8
    outside = np.array([[1.0, 0.5], [-3.0, 2.0], [0.0, -0.9]])
    us = eval_exterior(b.scene.mesh, b.us[:, 0], b.usn[:, 0], outside, 20.0)
    assert np.max(np.abs(us)) <= 1e-10


def test_interior_matches_oracle_bump1():
    b = solved("bump1", 40.0, 4)
    ph = scattering_phases(builtin("bump1").radial, 40.0)
    pts = np.array([[0.25, 0.0], [0.0, 0.1], [-0.2, 0.3]])
    assert np.max(np.abs(eval_interior(b, pts)[:, 0] - reference_field(ph, pts))) <= 1e-7


def test_interpolation_exact_at_chebyshev_nodes():
    b = solved("bump1", 20.0, 3)
    vals = interior_grid_values(b)
    sol = b.scene.solver
    tau = sol.tree.leaves[5]
    pts = sol.leaf_points(tau)
    inner = np.array([i * 16 + j for i in range(1, 15) for j in range(1, 15)])
    got = eval_interior(b, pts[inner], grid_values=vals)[:, 0]
    ref = vals[sol.leaf_slot[tau]].reshape(256, -1)[inner, 0]
    assert np.max(np.abs(got - ref)) <= 1e-13


def test_boundary_matching():
    b = solved("bump1", 20.0, 4)
    g = b.scene.tree.boundary_coords()[::7]
    inside = eval_interior(b, g)[:, 0]
    X = b.scene.mesh.points
    on_bdry = b.scene.system.interpolate_boundary(b.us[:, 0] + b.incident.value(X)[:, 0], g)
    assert np.max(np.abs(inside - on_bdry)) <= 1e-8


def test_grid_outside_with_zero_potential():
    b = solved("zero", 20.0, 3)
    fg = eval_total_grid(b, (0.8, 1.5, -1.0, 1.0), 12, 9)
    assert np.all(fg.region != REGION_INSIDE)
    assert np.max(np.abs(fg.us)) <= 1e-9


def test_grid_mirror_symmetry_and_mask():
    b = solved("bump1", 20.0, 3)
    fg = eval_total_grid(b, (-1.0, 1.0, -1.0, 1.0), 41, 41)
    assert np.max(np.abs(fg.u - fg.u[::-1])) <= 1e-8
    assert np.all(np.isfinite(fg.u))
    assert fg.region[20, 20] == REGION_INSIDE
    assert fg.region[0, 0] == REGION_OUTSIDE
    x = fg.x[np.nonzero(fg.region[20] == REGION_NEAR)[0]]
    assert np.all((np.abs(x) > 0.5) & (np.abs(x) <= 0.5 + b.scene.tree.leaf_size))


def test_smoke_200_grid():
    b = solved("bump1", 20.0, 3)
    fg = eval_total_grid(b, (-1.0, 1.0, -1.0, 1.0), 200, 200)
    assert fg.u.shape == (200, 200) and np.any(fg.region == REGION_NEAR)


def test_sommerfeld_decay():
    b = solved("bump1", 40.0, 4)
    d = np.array([0.6, -0.8])
    for r in (5.0, 10.0):
        near, far = eval_exterior(b.scene.mesh, b.us[:, 0], b.usn[:, 0], [r * d, 4 * r * d], 40.0)
        assert abs(abs(far) / abs(near) - 0.5) <= 0.1


def test_energy_conservation():
    for name in ("bump1", "bump2"):
        assert abs(flux_defect(solved(name, 40.0, 4))) <= 1e-8


def test_total_dispatch():
    b = solved("bump1", 20.0, 3)
    pts = np.array([[0.1, 0.1], [1.0, 0.5]])
    u = eval_total(b, pts)[:, 0]
    assert u[0] == eval_interior(b, pts[:1])[0, 0]
    ext = b.incident.value(pts[1:])[0, 0] + eval_exterior(
        b.scene.mesh, b.us[:, 0], b.usn[:, 0], pts[1:], 20.0)[0]
    assert u[1] == pytest.approx(ext, abs=1e-15)
