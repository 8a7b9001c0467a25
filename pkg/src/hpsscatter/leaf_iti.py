"""Spectral collocation on a leaf box: the impedance-to-impedance matrix R on
edge Gauss nodes and the solution matrix Y (incoming data -> Chebyshev values).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, FactorizationError
from .numkit import cheb_diff_matrix, cheb_nodes, gauss_legendre, lagrange_interp_matrix

__all__ = ["LeafGrid", "LeafOperators", "leaf_grid", "leaf_points", "build_leaf_operators", "build_leaves"]


@dataclass(frozen=True)
class LeafGrid:
    """Index sets for the Nc x Nc tensor Chebyshev grid of a leaf.

    Grid values are stored flat with ``k = i * Nc + j`` where the point is
    ``(cx + h x_i, cy + h x_j)`` and ``x_i = cos(pi i / (Nc - 1))``.
    """

    Nc: int
    x: np.ndarray
    Jb: np.ndarray
    Ji: np.ndarray
    edges: tuple  # (Js, Je, Jn, Jw), each of length Nc - 1
    edges_full: tuple  # (Js', Je', Jn', Jw'), each of length Nc

    @property
    def Jb_full(self):
        return np.concatenate(self.edges_full)


@lru_cache(maxsize=None)
def leaf_grid(Nc):
    n = Nc
    flat = lambda i, j: i * n + j  # noqa: E731
    Js = np.array([flat(i, n - 1) for i in range(n - 1, 0, -1)])
    Je = np.array([flat(0, j) for j in range(n - 1, 0, -1)])
    Jn = np.array([flat(i, 0) for i in range(0, n - 1)])
    Jw = np.array([flat(n - 1, j) for j in range(0, n - 1)])
    Jb = np.concatenate([Js, Je, Jn, Jw])
    Ji = np.array([flat(i, j) for i in range(1, n - 1) for j in range(1, n - 1)], dtype=int)
    full = (np.append(Js, Je[0]), np.append(Je, Jn[0]), np.append(Jn, Jw[0]), np.append(Jw, Js[0]))
    return LeafGrid(Nc, cheb_nodes(Nc), Jb, Ji, (Js, Je, Jn, Jw), full)


@dataclass
class LeafOperators:
    R: np.ndarray  # (4 Ng, 4 Ng)
    Y: np.ndarray  # (Nc^2, 4 Ng), rows in flat grid order


def _blockdiag4(M):
    return sla.block_diag(M, M, M, M)


@lru_cache(maxsize=None)
def _reference_blocks(Nc, Ng, h, eta):
    """Potential-independent pieces of the leaf system for half-width h."""
    g = leaf_grid(Nc)
    D = cheb_diff_matrix(Nc, h)
    I = np.eye(Nc)
    Dx = np.kron(D, I)
    Dy = np.kron(I, D)
    lap = Dx @ Dx + Dy @ Dy
    Js, Je, Jn, Jw = g.edges
    Nmat = np.vstack([-Dy[Js], Dx[Je], Dy[Jn], -Dx[Jw]])
    eye = np.eye(Nc * Nc)
    F = Nmat + 1j * eta * eye[g.Jb]
    Ks, Ke, Kn, Kw = g.edges_full
    G = np.vstack([-Dy[Ks], Dx[Ke], Dy[Kn], -Dx[Kw]]) - 1j * eta * eye[g.Jb_full]

    cheb_ccw = g.x[::-1]
    gauss = gauss_legendre(Ng).nodes
    P = lagrange_interp_matrix(gauss, cheb_ccw)
    Q = lagrange_interp_matrix(cheb_ccw, gauss)
    rhs = np.zeros((Nc * Nc, 4 * Ng))
    rhs[: 4 * (Nc - 1)] = _blockdiag4(P[:-1])
    QG = _blockdiag4(Q) @ G
    B0 = np.vstack([F, lap[g.Ji]]).astype(complex)
    return B0, rhs, QG


def _check(Nc, Ng, eta):
    if Nc <= Ng + 1:
        raise ConfigError(f"need Nc > Ng + 1 (got Nc={Nc}, Ng={Ng})")
    if eta == 0 or not np.isreal(eta):
        raise ConfigError("impedance parameter eta must be real and nonzero")


def build_leaf_operators(bounds, pot, kappa, eta, Nc=16, Ng=14):
    """R and Y for a single square leaf with ``bounds = (x0, x1, y0, y1)``."""
    R, Y = build_leaves([bounds], pot, kappa, eta, Nc, Ng)
    return LeafOperators(R[0], Y[0])


def leaf_points(bounds, Nc):
    """Chebyshev grid coordinates of a leaf, shape (Nc^2, 2), flat grid order."""
    x0, x1, y0, y1 = bounds
    cx, cy, h = 0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (x1 - x0)
    x = cheb_nodes(Nc)
    X = np.repeat(cx + h * x, Nc)
    Yc = np.tile(cy + h * x, Nc)
    return np.column_stack([X, Yc])


def build_leaves(bounds_list, pot, kappa, eta, Nc=16, Ng=14, chunk=64):
    """Batched leaf construction for equal-size square leaves.

    Returns arrays ``R`` of shape (L, 4Ng, 4Ng) and ``Y`` of shape (L, Nc^2, 4Ng).
    """
    _check(Nc, Ng, eta)
    bounds_list = [tuple(map(float, b)) for b in bounds_list]
    h = 0.5 * (bounds_list[0][1] - bounds_list[0][0])
    for b in bounds_list:
        if not (np.isclose(b[1] - b[0], 2 * h) and np.isclose(b[3] - b[2], 2 * h)):
            raise ConfigError("leaves must be equal-size squares")
    g = leaf_grid(Nc)
    B0, rhs, QG = _reference_blocks(Nc, Ng, h, float(eta))
    nb = len(g.Jb)
    L = len(bounds_list)
    R = np.empty((L, 4 * Ng, 4 * Ng), dtype=complex)
    Y = np.empty((L, Nc * Nc, 4 * Ng), dtype=complex)
    rows = nb + np.arange(len(g.Ji))
    for s in range(0, L, chunk):
        part = bounds_list[s:s + chunk]
        B = np.broadcast_to(B0, (len(part),) + B0.shape).copy()
        for k, bnd in enumerate(part):
            pts = leaf_points(bnd, Nc)[g.Ji]
            B[k, rows, g.Ji] += kappa ** 2 * (1.0 - pot(pts[:, 0], pts[:, 1]))
        try:
            Yp = np.linalg.solve(B, np.broadcast_to(rhs, (len(part),) + rhs.shape))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(f"leaf system is singular: {exc}") from exc
        Y[s:s + len(part)] = Yp
        R[s:s + len(part)] = QG @ Yp
    return R, Y
