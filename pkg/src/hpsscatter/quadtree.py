"""Uniform quadtree partition of the square domain with a binary merge tree.

Every leaf edge carries ``Ng`` Gauss-Legendre nodes.  Each node in the tree
stores the global ids of the Gauss nodes on its boundary, ordered
counter-clockwise starting from the south-west corner; shared edges are
identified by id, never by position.
"""

from dataclasses import dataclass, field

import numpy as np

from .numkit import gauss_legendre

__all__ = ["BoxNode", "BoxTree", "MergeIndex", "build_tree", "merge_index_sets"]

DEFAULT_DOMAIN = (-0.5, 0.5, -0.5, 0.5)


@dataclass
class BoxNode:
    index: int
    level: int
    bounds: tuple  # (x0, x1, y0, y1)
    span: tuple  # leaf index ranges (i0, i1, j0, j1)
    parent: int = -1
    children: tuple = ()
    # "h": children side by side (alpha west); "v": stacked (alpha south)
    orientation: str = ""
    boundary: np.ndarray = field(default=None, repr=False)

    @property
    def is_leaf(self):
        return not self.children

    @property
    def shape(self):
        i0, i1, j0, j1 = self.span
        return i1 - i0, j1 - j0


@dataclass(frozen=True)
class MergeIndex:
    """Index sets of one merge.

    ``a1``/``a3`` are positions in alpha's boundary vector, ``b2``/``b3`` in
    beta's; ``a3[k]`` and ``b3[k]`` are the same physical node.  ``to_parent``
    reorders the stacked exterior vector ``[x[a1]; y[b2]]`` into the parent's
    counter-clockwise boundary order, and ``from_parent`` undoes it.
    """

    a1: np.ndarray
    a3: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    to_parent: np.ndarray
    from_parent: np.ndarray


class BoxTree:
    def __init__(self, M, Ng, domain):
        self.M = M
        self.Ng = Ng
        self.domain = domain
        self.n_side = 2 ** M
        x0, x1, y0, y1 = domain
        self.leaf_size = (x1 - x0) / self.n_side
        self.nodes = []
        self._build_gauss_nodes()
        self._build_nodes()
        self.leaves = [nd.index for nd in self.nodes if nd.is_leaf]
        self._merge_cache = {}

    # -- Gauss node bookkeeping ---------------------------------------
    def _build_gauss_nodes(self):
        n, Ng = self.n_side, self.Ng
        x0, _, y0, _ = self.domain
        h = self.leaf_size
        s = 0.5 * (gauss_legendre(Ng).nodes + 1.0)
        coords = np.empty((2 * n * (n + 1) * Ng, 2))
        for j in range(n + 1):
            for i in range(n):
                e = self.hedge(i, j)
                coords[e * Ng:(e + 1) * Ng, 0] = x0 + (i + s) * h
                coords[e * Ng:(e + 1) * Ng, 1] = y0 + j * h
        for i in range(n + 1):
            for j in range(n):
                e = self.vedge(i, j)
                coords[e * Ng:(e + 1) * Ng, 0] = x0 + i * h
                coords[e * Ng:(e + 1) * Ng, 1] = y0 + (j + s) * h
        self.gauss_coords = coords

    def hedge(self, i, j):
        return j * self.n_side + i

    def vedge(self, i, j):
        n = self.n_side
        return n * (n + 1) + i * n + j

    def _edge_ids(self, e, reverse=False):
        ids = np.arange(e * self.Ng, (e + 1) * self.Ng)
        return ids[::-1] if reverse else ids

    def box_boundary(self, span):
        i0, i1, j0, j1 = span
        parts = [self._edge_ids(self.hedge(i, j0)) for i in range(i0, i1)]
        parts += [self._edge_ids(self.vedge(i1, j)) for j in range(j0, j1)]
        parts += [self._edge_ids(self.hedge(i, j1), True) for i in range(i1 - 1, i0 - 1, -1)]
        parts += [self._edge_ids(self.vedge(i0, j), True) for j in range(j1 - 1, j0 - 1, -1)]
        return np.concatenate(parts)

    # -- tree --------------------------------------------------------------
    def _bounds(self, span):
        x0, _, y0, _ = self.domain
        h = self.leaf_size
        i0, i1, j0, j1 = span
        return (x0 + i0 * h, x0 + i1 * h, y0 + j0 * h, y0 + j1 * h)

    def _build_nodes(self):
        n = self.n_side
        root = BoxNode(0, 0, self._bounds((0, n, 0, n)), (0, n, 0, n))
        queue = [root]
        self.nodes.append(root)
        head = 0
        while head < len(queue):
            nd = queue[head]
            head += 1
            nd.boundary = self.box_boundary(nd.span)
            nx, ny = nd.shape
            if nx == 1 and ny == 1:
                continue
            i0, i1, j0, j1 = nd.span
            if nx == ny:
                # square: split into south/north halves
                jm = (j0 + j1) // 2
                spans = ((i0, i1, j0, jm), (i0, i1, jm, j1))
                nd.orientation = "v"
            else:
                im = (i0 + i1) // 2
                spans = ((i0, im, j0, j1), (im, i1, j0, j1))
                nd.orientation = "h"
            kids = []
            for sp in spans:
                child = BoxNode(len(self.nodes), nd.level + 1, self._bounds(sp), sp, parent=nd.index)
                self.nodes.append(child)
                queue.append(child)
                kids.append(child.index)
            nd.children = tuple(kids)

    # -- derived quantities ----------------------------------------------
    @property
    def root(self):
        return self.nodes[0]

    @property
    def boundary_ids(self):
        """Gauss node ids on the boundary of the domain (counter-clockwise)."""
        return self.root.boundary

    @property
    def n_boundary(self):
        return 4 * self.Ng * self.n_side

    def boundary_coords(self):
        return self.gauss_coords[self.boundary_ids]

    def boundary_weights(self, ids):
        """Gauss quadrature weights (arclength) of the given node ids."""
        w = gauss_legendre(self.Ng).weights * 0.5 * self.leaf_size
        return w[np.asarray(ids) % self.Ng]

    def n_points(self, Nc):
        """Number of distinct Chebyshev collocation points over all leaves."""
        return 4 ** self.M * (Nc - 1) ** 2 + 2 ** (self.M + 1) * (Nc - 1) + 1

    def levels(self):
        """Node indices grouped by depth (root first)."""
        out = {}
        for nd in self.nodes:
            out.setdefault(nd.level, []).append(nd.index)
        return [out[k] for k in sorted(out)]

    def leaf_containing(self, points):
        """Leaf node index containing each point (points on shared edges go to either side)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x0, _, y0, _ = self.domain
        i = np.clip(np.floor((pts[:, 0] - x0) / self.leaf_size).astype(int), 0, self.n_side - 1)
        j = np.clip(np.floor((pts[:, 1] - y0) / self.leaf_size).astype(int), 0, self.n_side - 1)
        lookup = self._leaf_lookup()
        return lookup[i, j]

    def _leaf_lookup(self):
        if not hasattr(self, "_lookup"):
            lk = np.empty((self.n_side, self.n_side), dtype=int)
            for idx in self.leaves:
                i0, _, j0, _ = self.nodes[idx].span
                lk[i0, j0] = idx
            self._lookup = lk
        return self._lookup

    def merge_index(self, tau):
        if tau not in self._merge_cache:
            self._merge_cache[tau] = merge_index_sets(self, self.nodes[tau])
        return self._merge_cache[tau]

    def check_ordering(self):
        return all(c > nd.index for nd in self.nodes for c in nd.children)


def build_tree(M, Ng=14, domain=DEFAULT_DOMAIN):
    """Build the merge tree over ``4**M`` square leaves of ``domain``.

    ``domain`` is ``(x0, x1, y0, y1)`` and must be a square.
    """
    if M < 0:
        raise ValueError("M must be non-negative")
    if Ng < 2:
        raise ValueError("Ng must be at least 2")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("domain bounds must be increasing")
    if not np.isclose(x1 - x0, y1 - y0, rtol=1e-14, atol=0):
        raise ValueError(f"domain must be square, got {x1 - x0} x {y1 - y0}")
    return BoxTree(int(M), int(Ng), (x0, x1, y0, y1))


def merge_index_sets(tree, parent):
    """Split the children's boundary nodes of ``parent`` into J1, J2, J3."""
    if parent.is_leaf:
        raise ValueError(f"node {parent.index} is a leaf; nothing to merge")
    alpha, beta = (tree.nodes[c] for c in parent.children)
    ida, idb = alpha.boundary, beta.boundary
    shared = np.intersect1d(ida, idb)
    in_a = np.isin(ida, shared)
    a1 = np.nonzero(~in_a)[0]
    a3 = np.nonzero(in_a)[0]
    posb = {g: k for k, g in enumerate(idb)}
    b3 = np.array([posb[g] for g in ida[a3]], dtype=int)
    b2 = np.nonzero(~np.isin(idb, shared))[0]
    ca = tree.gauss_coords[ida[a3]]
    cb = tree.gauss_coords[idb[b3]]
    assert np.array_equal(ca, cb), "shared edge nodes disagree between children"
    ext = np.concatenate([ida[a1], idb[b2]])
    pos_ext = {g: k for k, g in enumerate(ext)}
    to_parent = np.array([pos_ext[g] for g in parent.boundary], dtype=int)
    if len(to_parent) != len(ext):
        raise AssertionError("parent boundary is not the union of exterior child nodes")
    from_parent = np.empty_like(to_parent)
    from_parent[to_parent] = np.arange(len(to_parent))
    return MergeIndex(a1, a3, b2, b3, to_parent, from_parent)
