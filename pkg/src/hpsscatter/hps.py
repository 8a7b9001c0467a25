"""Hierarchical merge of impedance-to-impedance maps, the downward solve
sweep, and recovery of the interior Dirichlet-to-Neumann matrix.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainResonanceError, MergeResonanceError
from .leaf_iti import build_leaves, leaf_grid, leaf_points
from .numkit import LUSolver

__all__ = [
    "MergeOperators",
    "HierarchySolver",
    "merge_iti",
    "build_sweep",
    "iti_to_dtn",
    "apply_downward",
]

logger = logging.getLogger(__name__)

DEFAULT_COND_THRESHOLD = 1e8


@dataclass
class MergeOperators:
    """Maps parent incoming data to the interior-edge incoming data of each child.

    Columns follow the parent's boundary order; rows follow alpha's J3 order.
    """

    Sa: np.ndarray
    Sb: np.ndarray


def merge_iti(Ra, Rb, idx, node=None, cond_threshold=DEFAULT_COND_THRESHOLD):
    """Merge two sibling ItI matrices.

    ``idx`` is a :class:`~hpsscatter.quadtree.MergeIndex`.  Returns
    ``(R_parent, MergeOperators, cond)`` with ``R_parent`` in the parent's
    counter-clockwise boundary order.
    """
    a1, a3, b2, b3 = idx.a1, idx.a3, idx.b2, idx.b3
    Ra13 = Ra[np.ix_(a1, a3)]
    Ra31 = Ra[np.ix_(a3, a1)]
    Ra33 = Ra[np.ix_(a3, a3)]
    Rb23 = Rb[np.ix_(b2, b3)]
    Rb32 = Rb[np.ix_(b3, b2)]
    Rb33 = Rb[np.ix_(b3, b3)]

    n3 = len(a3)
    lu = LUSolver(np.eye(n3) - Rb33 @ Ra33)
    cond = lu.cond_estimate()
    if not np.isfinite(cond) or cond > cond_threshold:
        raise MergeResonanceError(node, cond)
    # W R33b R31a and W R32b, formed once
    Z1 = lu.solve(Rb33 @ Ra31)
    Z2 = lu.solve(Rb32)

    Sa = np.hstack([Z1, -Z2])
    # outgoing data of alpha on the shared edge; beta's incoming data there is its negative
    Sb = -np.hstack([Ra31 + Ra33 @ Z1, -(Ra33 @ Z2)])

    n1, n2 = len(a1), len(b2)
    Rext = np.empty((n1 + n2, n1 + n2), dtype=complex)
    Rext[:n1] = Ra13 @ Sa
    Rext[:n1, :n1] += Ra[np.ix_(a1, a1)]
    Rext[n1:] = Rb23 @ Sb
    Rext[n1:, n1:] += Rb[np.ix_(b2, b2)]

    p = idx.to_parent
    R = Rext[np.ix_(p, p)]
    return R, MergeOperators(Sa[:, p], Sb[:, p]), cond


def iti_to_dtn(R, eta, cond_threshold=DEFAULT_COND_THRESHOLD):
    """DtN matrix ``-i eta (R - I)^{-1} (R + I)`` with a resonance guard.

    Returns ``(T, cond)`` where ``cond`` estimates the 1-norm condition
    number of ``R - I``.
    """
    n = R.shape[0]
    if R.shape != (n, n):
        raise ValueError("R must be square")
    eye = np.eye(n)
    lu = LUSolver(R - eye)
    cond = lu.cond_estimate()
    if not np.isfinite(cond) or cond > cond_threshold:
        raise DomainResonanceError(cond, cond_threshold)
    T = -1j * eta * lu.solve(R + eye)
    return T, cond


@dataclass
class HierarchySolver:
    tree: object
    kappa: float
    eta: float
    Nc: int
    Y: np.ndarray  # (n_leaves, Nc^2, 4 Ng), leaves in tree.leaves order
    S: dict  # parent index -> MergeOperators
    R1: np.ndarray
    T_int: np.ndarray
    cond_R1: float
    node_R: dict = field(default_factory=dict)  # only when requested
    merge_cond: dict = field(default_factory=dict)

    @property
    def n_boundary(self):
        return self.R1.shape[0]

    @property
    def leaf_slot(self):
        if not hasattr(self, "_slot"):
            self._slot = {tau: k for k, tau in enumerate(self.tree.leaves)}
        return self._slot

    def leaf_points(self, tau):
        return leaf_points(self.tree.nodes[tau].bounds, self.Nc)

    def operator_bytes(self):
        return self.Y.nbytes + sum(m.Sa.nbytes + m.Sb.nbytes for m in self.S.values())


def build_sweep(tree, pot, kappa, eta=None, Nc=16, cond_threshold=DEFAULT_COND_THRESHOLD,
                keep_node_operators=False, dtn_threshold=None):
    """Bottom-up construction of all solve operators and the top-level ItI/DtN."""
    eta = float(kappa if eta is None else eta)
    Ng = tree.Ng
    leaves = tree.leaves
    R_leaf, Y = build_leaves([tree.nodes[t].bounds for t in leaves], pot, kappa, eta, Nc, Ng)
    R = {tau: R_leaf[k] for k, tau in enumerate(leaves)}
    del R_leaf
    kept = {}
    S = {}
    conds = {}
    for tau in range(len(tree.nodes) - 1, -1, -1):
        nd = tree.nodes[tau]
        if nd.is_leaf:
            continue
        a, b = nd.children
        Rt, ops, cond = merge_iti(R[a], R[b], tree.merge_index(tau), node=tau,
                                  cond_threshold=cond_threshold)
        S[tau] = ops
        conds[tau] = cond
        if keep_node_operators:
            kept[a], kept[b] = R[a], R[b]
        del R[a], R[b]
        R[tau] = Rt
    R1 = R.pop(0)
    if keep_node_operators:
        kept[0] = R1
    T, cond = iti_to_dtn(R1, eta, cond_threshold if dtn_threshold is None else dtn_threshold)
    logger.debug("built hierarchy: %d nodes, cond(R-I) ~ %.2e", len(tree.nodes), cond)
    return HierarchySolver(tree, float(kappa), eta, Nc, Y, S, R1, T, cond, kept, conds)


def apply_downward(solver, f):
    """Top-down sweep: incoming impedance data on the domain boundary to
    Chebyshev-grid values on every leaf.

    ``f`` has shape (n_boundary,) or (n_boundary, k).  Returns an array of
    shape (n_leaves, Nc, Nc[, k]) in ``tree.leaves`` order.
    """
    f = np.asarray(f)
    if f.shape[0] != solver.n_boundary:
        raise ValueError(f"expected {solver.n_boundary} boundary values, got {f.shape[0]}")
    tree = solver.tree
    vec = f.ndim == 1
    if vec:
        f = f[:, None]
    incoming = {0: f.astype(complex)}
    out = np.empty((len(tree.leaves), solver.Nc ** 2, f.shape[1]), dtype=complex)
    for tau, nd in enumerate(tree.nodes):
        s = incoming.pop(tau)
        if nd.is_leaf:
            out[solver.leaf_slot[tau]] = solver.Y[solver.leaf_slot[tau]] @ s
            continue
        idx = tree.merge_index(tau)
        ops = solver.S[tau]
        a, b = nd.children
        ext = s[idx.from_parent]
        n1 = len(idx.a1)
        sa = np.empty((len(tree.nodes[a].boundary), s.shape[1]), dtype=complex)
        sb = np.empty((len(tree.nodes[b].boundary), s.shape[1]), dtype=complex)
        sa[idx.a1] = ext[:n1]
        sa[idx.a3] = ops.Sa @ s
        sb[idx.b2] = ext[n1:]
        sb[idx.b3] = ops.Sb @ s
        incoming[a] = sa
        incoming[b] = sb
    Nc = solver.Nc
    out = out.reshape(len(tree.leaves), Nc, Nc, f.shape[1])
    return out[..., 0] if vec else out


def gather_unique(solver, leaf_values):
    """Collapse per-leaf grid values to the distinct collocation points.

    Duplicated points on shared edges are averaged.  Returns ``(points, values)``.
    """
    tree = solver.tree
    Nc = solver.Nc
    m = Nc - 1
    width = tree.n_side * m + 1
    loc = m - np.arange(Nc)  # grid index i -> position along the axis (x_i decreases)
    keys, pts = [], []
    for t in tree.leaves:
        i0, _, j0, _ = tree.nodes[t].span
        gx = np.repeat(i0 * m + loc, Nc)
        gy = np.tile(j0 * m + loc, Nc)
        keys.append(gx * width + gy)
        pts.append(solver.leaf_points(t))
    keys = np.concatenate(keys)
    pts = np.concatenate(pts)
    vals = np.asarray(leaf_values).reshape(len(keys), -1)
    uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    acc = np.zeros((len(uniq), vals.shape[1]), dtype=complex)
    np.add.at(acc, inv, vals)
    upts = np.zeros((len(uniq), 2))
    np.add.at(upts, inv, pts)
    out = acc / counts[:, None]
    return upts / counts[:, None], (out[:, 0] if out.shape[1] == 1 else out)


__all__ += ["gather_unique", "leaf_grid"]
