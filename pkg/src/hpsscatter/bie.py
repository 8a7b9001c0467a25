"""Exterior problem on the square boundary: corner-refined Nystrom panels,
Helmholtz single/double-layer matrices and the second-kind system

    A = 1/2 I - D + S T_int,     A u^s = S (u^i_n - T_int u^i).
"""

from dataclasses import dataclass

import numpy as np
import scipy.special as sps

from .errors import FactorizationError
from .numkit import LUSolver, bary_weights, gauss_legendre, lagrange_interp_matrix

__all__ = [
    "Panel",
    "BoundaryMesh",
    "LayerOperators",
    "ScatterSystem",
    "PlaneWave",
    "build_boundary_mesh",
    "layer_matrices",
    "assemble_and_factor",
    "solve_boundary",
    "helmholtz_kernels",
]

PANEL_ORDER = 10
CORNER_LEVELS = 6
# targets closer than NEAR_FACTOR * panel length get special quadrature
NEAR_FACTOR = 1.5
_GRADE = 0.3
_SUB_ORDER = 16


@dataclass(frozen=True)
class Panel:
    a: np.ndarray
    b: np.ndarray
    normal: np.ndarray
    side: int
    leaf_edge: int  # position of the containing leaf edge along the boundary
    # parameter range of the panel inside its leaf edge, in [-1, 1]
    t0: float
    t1: float

    @property
    def length(self):
        return float(np.hypot(*(self.b - self.a)))


@dataclass
class BoundaryMesh:
    panels: list
    points: np.ndarray  # (n, 2)
    normals: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,) arclength weights
    order: int
    n_leaf_edges: int
    leaf_size: float

    @property
    def n(self):
        return len(self.points)

    def panel_slice(self, k):
        return slice(k * self.order, (k + 1) * self.order)

    def leaf_edge_param(self):
        """Parameter of every node inside its leaf edge (in [-1, 1])."""
        ref = gauss_legendre(self.order).nodes
        out = np.empty(self.n)
        for k, p in enumerate(self.panels):
            out[self.panel_slice(k)] = 0.5 * (p.t0 + p.t1) + 0.5 * (p.t1 - p.t0) * ref
        return out


_SIDES = (
    # start corner, direction, outward normal  (for the unit-free square)
    ((0, 0), (1, 0), (0, -1)),
    ((1, 0), (0, 1), (1, 0)),
    ((1, 1), (-1, 0), (0, 1)),
    ((0, 1), (0, -1), (-1, 0)),
)


def _edge_pieces(first, last, levels):
    """Sub-intervals of [0, 1] with dyadic refinement toward the flagged ends."""
    cuts = {0.0, 1.0}
    if first:
        cuts.update(0.5 ** k for k in range(1, levels + 1))
    if last:
        cuts.update(1.0 - 0.5 ** k for k in range(1, levels + 1))
    c = sorted(cuts)
    return list(zip(c[:-1], c[1:]))


def build_boundary_mesh(tree, order=PANEL_ORDER, corner_levels=CORNER_LEVELS):
    """Panels along the domain boundary, one per leaf edge except at corners."""
    if tree.n_side < 2:
        raise ValueError("need at least two leaf edges per side (M >= 1)")
    x0, x1, y0, y1 = tree.domain
    L = x1 - x0
    h = tree.leaf_size
    ref = gauss_legendre(order)
    panels, pts, nrm, wts = [], [], [], []
    edge = 0
    for side, (start, direc, normal) in enumerate(_SIDES):
        p0 = np.array([x0 + start[0] * L, y0 + start[1] * L])
        d = np.array(direc, float)
        for k in range(tree.n_side):
            first, last = k == 0, k == tree.n_side - 1
            for s0, s1 in _edge_pieces(first, last, corner_levels):
                a = p0 + (k + s0) * h * d
                b = p0 + (k + s1) * h * d
                pan = Panel(a, b, np.array(normal, float), side, edge, 2 * s0 - 1, 2 * s1 - 1)
                panels.append(pan)
                mid, half = 0.5 * (a + b), 0.5 * (b - a)
                pts.append(mid + ref.nodes[:, None] * half)
                nrm.append(np.tile(pan.normal, (order, 1)))
                wts.append(ref.weights * 0.5 * pan.length)
            edge += 1
    return BoundaryMesh(panels, np.vstack(pts), np.vstack(nrm), np.concatenate(wts),
                        order, edge, h)


def helmholtz_kernels(kappa, x, y, ny):
    """Single- and double-layer kernels (i/4) H0(k r) and d/dn_y of it.

    ``x``, ``y`` broadcast to (..., 2); ``ny`` is the source normal.
    """
    dx = x[..., 0] - y[..., 0]
    dy = x[..., 1] - y[..., 1]
    r = np.hypot(dx, dy)
    kr = kappa * r
    h0 = sps.j0(kr) + 1j * sps.y0(kr)
    h1 = sps.j1(kr) + 1j * sps.y1(kr)
    G = 0.25j * h0
    dn = (dx * ny[..., 0] + dy * ny[..., 1]) / r
    dG = 0.25j * kappa * h1 * dn
    return G, dG


@dataclass
class LayerOperators:
    S: np.ndarray
    D: np.ndarray
    kappa: float


def _graded_rule(tc, eps):
    """Composite Gauss rule on [-1, 1] graded geometrically toward ``tc``."""
    ref = gauss_legendre(_SUB_ORDER)
    nodes, weights = [], []
    for end in (-1.0, 1.0):
        length = abs(end - tc)
        if length <= 0:
            continue
        sgn = 1.0 if end > tc else -1.0
        cuts = [length]
        while cuts[-1] > eps:
            cuts.append(cuts[-1] * _GRADE)
        cuts.append(0.0)
        for lo, hi in zip(cuts[1:], cuts[:-1]):
            a, b = tc + sgn * lo, tc + sgn * hi
            mid, half = 0.5 * (a + b), 0.5 * abs(b - a)
            nodes.append(mid + half * ref.nodes)
            weights.append(half * ref.weights)
    return np.concatenate(nodes), np.concatenate(weights)


def _near_entries(kappa, panel, targets):
    """Accurate S and D rows for ``targets`` against the Lagrange basis of ``panel``.

    Returns arrays of shape (len(targets), order) for S and D.
    """
    ref = gauss_legendre(PANEL_ORDER).nodes
    wb = bary_weights(ref)
    mid = 0.5 * (panel.a + panel.b)
    half = 0.5 * (panel.b - panel.a)
    hl = np.hypot(*half)
    tang = half / hl
    S = np.empty((len(targets), PANEL_ORDER), dtype=complex)
    D = np.empty_like(S)
    for k, x in enumerate(targets):
        rel = x - mid
        t0 = rel @ tang / hl
        off = rel @ panel.normal  # (x - y) . n_y, the same for every y on the panel
        dperp = abs(off) / hl
        tc = min(max(t0, -1.0), 1.0)
        delta = np.hypot(t0 - tc, dperp)
        t, w = _graded_rule(tc, max(0.5 * delta, 1e-11))
        # distances from parameter offsets so nodes never collapse onto the target
        r = hl * np.hypot(t - t0, dperp)
        kr = kappa * r
        G = 0.25j * (sps.j0(kr) + 1j * sps.y0(kr))
        dG = 0.25j * kappa * (sps.j1(kr) + 1j * sps.y1(kr)) * (off / r)
        Lm = lagrange_interp_matrix(ref, t, wb)
        wj = w * hl
        S[k] = (wj * G) @ Lm
        D[k] = (wj * dG) @ Lm
    return S, D


def layer_matrices(mesh, kappa):
    """Nystrom matrices for the single- and double-layer operators on the mesh."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    X = mesh.points
    n = mesh.n
    S = np.empty((n, n), dtype=complex)
    D = np.empty((n, n), dtype=complex)
    block = 256
    for s in range(0, n, block):
        rows = slice(s, min(n, s + block))
        with np.errstate(divide="ignore", invalid="ignore"):
            G, dG = helmholtz_kernels(kappa, X[rows, None, :], X[None, :, :], mesh.normals[None, :, :])
        S[rows] = G * mesh.weights
        D[rows] = dG * mesh.weights
    for k, pan in enumerate(mesh.panels):
        cols = mesh.panel_slice(k)
        near = _near_targets(mesh, pan)
        Sn, Dn = _near_entries(kappa, pan, X[near])
        S[np.ix_(near, np.arange(cols.start, cols.stop))] = Sn
        D[np.ix_(near, np.arange(cols.start, cols.stop))] = Dn
    return LayerOperators(S, D, float(kappa))


def _segment_distance(points, a, b):
    ab = b - a
    t = np.clip(((points - a) @ ab) / (ab @ ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(*(points - proj).T)


def _near_targets(mesh, pan):
    d = _segment_distance(mesh.points, pan.a, pan.b)
    return np.nonzero(d < NEAR_FACTOR * pan.length)[0]


def boundary_transfer(mesh, tree):
    """Interpolation matrices between leaf-edge Gauss nodes and Nystrom nodes.

    Returns ``(g2n, n2g)`` of shapes (n, nb) and (nb, n); both act edge-locally.
    """
    Ng = tree.Ng
    gref = gauss_legendre(Ng).nodes
    pref = gauss_legendre(mesh.order).nodes
    nb = tree.n_boundary
    g2n = np.zeros((mesh.n, nb))
    n2g = np.zeros((nb, mesh.n))
    tn = mesh.leaf_edge_param()
    by_edge = {}
    for k, p in enumerate(mesh.panels):
        by_edge.setdefault(p.leaf_edge, []).append(k)
    for e, plist in by_edge.items():
        gcols = slice(e * Ng, (e + 1) * Ng)
        for k in plist:
            sl = mesh.panel_slice(k)
            g2n[sl, gcols] = lagrange_interp_matrix(gref, tn[sl])
        for q, tg in enumerate(gref):
            k = next(k for k in plist if mesh.panels[k].t0 <= tg <= mesh.panels[k].t1)
            p = mesh.panels[k]
            local = (2 * tg - (p.t0 + p.t1)) / (p.t1 - p.t0)
            sl = mesh.panel_slice(k)
            n2g[e * Ng + q, sl] = lagrange_interp_matrix(pref, [local])[0]
    return g2n, n2g


@dataclass
class PlaneWave:
    """u^i(x) = exp(i kappa w . x) for one or several unit directions ``w``."""

    kappa: float
    directions: np.ndarray  # (k, 2)

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if not np.allclose(np.hypot(d[:, 0], d[:, 1]), 1.0, atol=1e-12):
            raise ValueError("incident directions must be unit vectors")
        self.directions = d

    def value(self, points):
        return np.exp(1j * self.kappa * (np.asarray(points) @ self.directions.T))

    def normal_derivative(self, points, normals):
        u = self.value(points)
        return 1j * self.kappa * (np.asarray(normals) @ self.directions.T) * u


@dataclass
class ScatterSystem:
    mesh: BoundaryMesh
    layer: LayerOperators
    T_nodes: np.ndarray  # DtN transferred to the Nystrom nodes
    g2n: np.ndarray
    n2g: np.ndarray
    lu: LUSolver

    @property
    def kappa(self):
        return self.layer.kappa

    def matrix(self):
        n = self.mesh.n
        return 0.5 * np.eye(n) - self.layer.D + self.layer.S @ self.T_nodes

    def cond_estimate(self):
        return self.lu.cond_estimate()

    def interpolate_boundary(self, values, points, tol=1e-12):
        """Evaluate nodal boundary data at points lying on the boundary."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ref = gauss_legendre(self.mesh.order).nodes
        rows = []
        for x in pts:
            for k, p in enumerate(self.mesh.panels):
                if _segment_distance(x[None], p.a, p.b)[0] <= tol:
                    ab = p.b - p.a
                    t = 2 * ((x - p.a) @ ab) / (ab @ ab) - 1.0
                    row = np.zeros(self.mesh.n)
                    row[self.mesh.panel_slice(k)] = lagrange_interp_matrix(ref, [t])[0]
                    rows.append(row)
                    break
            else:
                raise ValueError(f"point {x} is not on the boundary")
        return np.array(rows) @ values


def assemble_and_factor(mesh, layer, T_int, tree):
    """Transfer T_int to the Nystrom nodes, form A and LU-factorize it."""
    g2n, n2g = boundary_transfer(mesh, tree)
    Tn = g2n @ T_int @ n2g
    n = mesh.n
    A = 0.5 * np.eye(n) - layer.D + layer.S @ Tn
    if not np.all(np.isfinite(A)):
        raise FactorizationError("system matrix has non-finite entries")
    lu = LUSolver(A)
    if not np.isfinite(lu.cond_estimate()):
        raise FactorizationError("system matrix is singular")
    return ScatterSystem(mesh, layer, Tn, g2n, n2g, lu)


def solve_boundary(system, incident):
    """Scattered field and its normal derivative at the Nystrom nodes.

    ``incident`` is a :class:`PlaneWave`; outputs have one column per direction.
    """
    X, nrm = system.mesh.points, system.mesh.normals
    ui = incident.value(X)
    uin = incident.normal_derivative(X, nrm)
    rhs = system.layer.S @ (uin - system.T_nodes @ ui)
    us = system.lu.solve(rhs)
    usn = system.T_nodes @ (ui + us) - uin
    return us, usn


def unregularized_operator(system):
    """T_int - T_ext with T_ext = S^{-1}(D - I/2); diagnostics only."""
    n = system.mesh.n
    T_ext = np.linalg.solve(system.layer.S, system.layer.D - 0.5 * np.eye(n))
    return system.T_nodes - T_ext
