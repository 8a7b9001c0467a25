"""Field reconstruction: Green's representation outside the square, the
downward sweep plus leaf interpolation inside, and a small driver object
tying the interior hierarchy to the boundary solve.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.special as sps

from .bie import (PlaneWave, assemble_and_factor, build_boundary_mesh, helmholtz_kernels,
                  layer_matrices, solve_boundary)
from .hps import apply_downward, build_sweep
from .numkit import cheb_bary_weights, cheb_nodes, lagrange_interp_matrix
from .quadtree import build_tree

__all__ = [
    "Scene",
    "BoundarySolution",
    "FieldGrid",
    "build_scene",
    "solve_scene",
    "eval_exterior",
    "eval_exterior_gradient",
    "eval_interior",
    "eval_total",
    "eval_total_grid",
    "flux_defect",
]

REGION_INSIDE = 0
REGION_OUTSIDE = 1
REGION_NEAR = 2  # outside, within one leaf size of the boundary


@dataclass
class Scene:
    """Everything that depends on (potential, kappa, M) but not on the incident wave."""

    tree: object
    solver: object
    mesh: object
    layer: object
    system: object
    potential: object
    timings: dict = field(default_factory=dict)

    @property
    def kappa(self):
        return self.solver.kappa

    @property
    def domain(self):
        return self.tree.domain


@dataclass
class BoundarySolution:
    scene: Scene
    incident: PlaneWave
    us: np.ndarray  # (n, k) scattered field at Nystrom nodes
    usn: np.ndarray  # (n, k) its outward normal derivative
    seconds: float = 0.0

    @property
    def n_incident(self):
        return self.us.shape[1]


def build_scene(potential, kappa, M, Ng=14, Nc=16, eta=None, cond_threshold=1e8,
                domain=(-0.5, 0.5, -0.5, 0.5)):
    """Precomputation: hierarchy, DtN, layer matrices and the factorized system."""
    t0 = time.perf_counter()
    tree = build_tree(M, Ng, domain)
    solver = build_sweep(tree, potential, kappa, eta=eta, Nc=Nc, cond_threshold=cond_threshold)
    t1 = time.perf_counter()
    mesh = build_boundary_mesh(tree)
    layer = layer_matrices(mesh, kappa)
    system = assemble_and_factor(mesh, layer, solver.T_int, tree)
    t2 = time.perf_counter()
    timings = {"hps_build": t1 - t0, "bie_build": t2 - t1, "build": t2 - t0}
    return Scene(tree, solver, mesh, layer, system, potential, timings)


def solve_scene(scene, directions):
    """Boundary solve for one or more incident directions (each applies the stored LU)."""
    inc = PlaneWave(scene.kappa, directions)
    t0 = time.perf_counter()
    us, usn = solve_boundary(scene.system, inc)
    return BoundarySolution(scene, inc, us, usn, time.perf_counter() - t0)


def _inside(domain, pts, pad=0.0):
    x0, x1, y0, y1 = domain
    return ((pts[:, 0] >= x0 - pad) & (pts[:, 0] <= x1 + pad)
            & (pts[:, 1] >= y0 - pad) & (pts[:, 1] <= y1 + pad))


def _points(points):
    return np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, 2)


def eval_exterior(mesh, us, usn, points, kappa, domain=(-0.5, 0.5, -0.5, 0.5), block=2048):
    """u^s = D[u^s] - S[u^s_n] by the Nystrom rule, at points outside the square."""
    pts = _points(points)
    if np.any(_inside(domain, pts)):
        raise ValueError("eval_exterior: some points lie inside or on the domain")
    us = np.asarray(us)
    vec = us.ndim == 1
    us2 = us[:, None] if vec else us
    usn2 = np.asarray(usn).reshape(us2.shape)
    out = np.empty((len(pts), us2.shape[1]), dtype=complex)
    wy = mesh.weights
    for s in range(0, len(pts), block):
        P = pts[s:s + block]
        G, dG = helmholtz_kernels(kappa, P[:, None, :], mesh.points[None], mesh.normals[None])
        out[s:s + block] = (dG * wy) @ us2 - (G * wy) @ usn2
    return out[:, 0] if vec else out


def eval_exterior_gradient(mesh, us, usn, points, kappa, block=1024):
    """Gradient of the Green representation, shape (n_points, 2)."""
    pts = _points(points)
    out = np.zeros((len(pts), 2), dtype=complex)
    Y, N, w = mesh.points, mesh.normals, mesh.weights
    for s in range(0, len(pts), block):
        P = pts[s:s + block]
        d = P[:, None, :] - Y[None]
        r = np.hypot(d[..., 0], d[..., 1])
        kr = kappa * r
        h0 = sps.hankel1(0, kr)
        h1 = sps.hankel1(1, kr)
        dh1 = h0 - h1 / kr
        dn = (d * N[None]).sum(-1) / r
        for c in range(2):
            e = d[..., c] / r
            gG = -0.25j * kappa * h1 * e
            gdG = 0.25j * kappa * (kappa * dh1 * e * dn + h1 * (N[None, :, c] - e * dn) / r)
            out[s:s + block, c] = (gdG * w) @ us - (gG * w) @ usn
    return out


def _interp_leaf(values, bounds, pts, Nc):
    x = cheb_nodes(Nc)
    bw = cheb_bary_weights(Nc)
    x0, x1, y0, y1 = bounds
    cx, cy, h = 0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (x1 - x0)
    Lx = lagrange_interp_matrix(x, (pts[:, 0] - cx) / h, bw)
    Ly = lagrange_interp_matrix(x, (pts[:, 1] - cy) / h, bw)
    if values.ndim == 2:
        return np.einsum("pi,ij,pj->p", Lx, values, Ly)
    return np.einsum("pi,ijk,pj->pk", Lx, values, Ly)


def interior_grid_values(bsol):
    """Total field on every leaf's Chebyshev grid, shape (n_leaves, Nc, Nc, k)."""
    sc = bsol.scene
    tree, solver = sc.tree, sc.solver
    gpts = tree.boundary_coords()
    u = bsol.incident.value(gpts) + sc.system.n2g @ bsol.us
    f = solver.T_int @ u + 1j * solver.eta * u
    return apply_downward(solver, f)


def eval_interior(bsol, points, grid_values=None):
    """Total field at points inside (or on) the square, one column per direction."""
    sc = bsol.scene
    pts = _points(points)
    if not np.all(_inside(sc.domain, pts)):
        raise ValueError("eval_interior: some points lie outside the domain")
    vals = interior_grid_values(bsol) if grid_values is None else grid_values
    tree, solver = sc.tree, sc.solver
    leaf = tree.leaf_containing(pts)
    out = np.empty((len(pts), vals.shape[-1]), dtype=complex)
    for tau in np.unique(leaf):
        sel = leaf == tau
        out[sel] = _interp_leaf(vals[solver.leaf_slot[tau]], tree.nodes[tau].bounds, pts[sel], solver.Nc)
    return out


def eval_total(bsol, points):
    """Total field anywhere; exterior points add the incident wave to the representation."""
    sc = bsol.scene
    pts = _points(points)
    inside = _inside(sc.domain, pts)
    out = np.empty((len(pts), bsol.n_incident), dtype=complex)
    if np.any(inside):
        out[inside] = eval_interior(bsol, pts[inside])
    if np.any(~inside):
        P = pts[~inside]
        out[~inside] = bsol.incident.value(P) + eval_exterior(
            sc.mesh, bsol.us, bsol.usn, P, sc.kappa, sc.domain)
    return out


@dataclass
class FieldGrid:
    bounds: tuple
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    us: np.ndarray  # (ny, nx) scattered field (total minus incident)
    u: np.ndarray  # (ny, nx) total field
    region: np.ndarray  # (ny, nx) REGION_* codes


def eval_total_grid(bsol, bounds=(-1.0, 1.0, -1.0, 1.0), nx=200, ny=200, column=0):
    """Total and scattered fields on a tensor grid for one incident direction."""
    sc = bsol.scene
    x = np.linspace(bounds[0], bounds[1], nx)
    y = np.linspace(bounds[2], bounds[3], ny)
    X, Y = np.meshgrid(x, y)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = _inside(sc.domain, pts)
    near = ~inside & _inside(sc.domain, pts, pad=sc.tree.leaf_size)
    region = np.where(inside, REGION_INSIDE, np.where(near, REGION_NEAR, REGION_OUTSIDE))
    ui = bsol.incident.value(pts)[:, column]
    u = np.empty(len(pts), dtype=complex)
    if np.any(inside):
        u[inside] = eval_interior(bsol, pts[inside])[:, column]
    if np.any(~inside):
        P = pts[~inside]
        u[~inside] = ui[~inside] + eval_exterior(
            sc.mesh, bsol.us[:, column], bsol.usn[:, column], P, sc.kappa, sc.domain)
    shape = (ny, nx)
    return FieldGrid(tuple(bounds), nx, ny, x, y, (u - ui).reshape(shape), u.reshape(shape),
                     region.reshape(shape))


def flux_defect(bsol, radius=1.0, n=None, column=0):
    """Net energy flux Im(int conj(u) du/dr) of the total field through a circle.

    Zero for a real (lossless) potential; returned relative to the incident
    flux scale kappa * 2 pi radius.
    """
    sc = bsol.scene
    k = sc.kappa
    if n is None:
        n = int(max(256, 4 * k * radius * 2 * np.pi))
    th = 2 * np.pi * np.arange(n) / n
    nr = np.column_stack([np.cos(th), np.sin(th)])
    P = radius * nr
    us = bsol.us[:, column]
    usn = bsol.usn[:, column]
    u_s = eval_exterior(sc.mesh, us, usn, P, k, sc.domain)
    g = eval_exterior_gradient(sc.mesh, us, usn, P, k)
    d = bsol.incident.directions[column]
    ui = np.exp(1j * k * P @ d)
    u = ui + u_s
    ur = (g * nr).sum(1) + 1j * k * (nr @ d) * ui
    flux = np.imag(np.sum(np.conj(u) * ur)) * (2 * np.pi * radius / n)
    return float(flux / (k * 2 * np.pi * radius))
