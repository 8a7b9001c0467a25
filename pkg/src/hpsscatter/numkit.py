"""Shared numerical kernels: quadrature, spectral differentiation,
polynomial interpolation, Bessel/Hankel evaluation and dense solves."""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.special as sps
from scipy.linalg import lapack

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "cheb_nodes",
    "cheb_bary_weights",
    "cheb_diff_matrix",
    "bary_weights",
    "lagrange_interp_matrix",
    "bessel_h1",
    "bessel_h1p",
    "erf",
    "LUSolver",
]


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def scaled(self, a, b):
        """Map the rule from [-1, 1] onto [a, b]."""
        half = 0.5 * (b - a)
        return QuadratureRule(0.5 * (a + b) + half * self.nodes, half * self.weights)


def _legendre_and_derivative(q, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, q + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    if q == 0:
        return p0, np.zeros_like(x)
    # p1 = P_q, p0 = P_{q-1}
    dp = q * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss_legendre_cached(q):
    if q == 1:
        return np.array([0.0]), np.array([2.0])
    i = np.arange(1, q + 1)
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(q, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_and_derivative(q, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(q):
    """Gauss-Legendre rule with ``q`` nodes on [-1, 1], nodes increasing.

    Nodes come from Newton iteration on the three-term Legendre recurrence.
    """
    q = int(q)
    if q < 1:
        raise ValueError(f"gauss_legendre needs q >= 1, got {q}")
    x, w = _gauss_legendre_cached(q)
    return QuadratureRule(x, w)


def cheb_nodes(p):
    """Chebyshev extreme points x_j = cos(pi (j-1)/(p-1)), j = 1..p (decreasing)."""
    if p < 2:
        raise ValueError("need at least two Chebyshev nodes")
    return np.cos(np.pi * np.arange(p) / (p - 1))


def cheb_bary_weights(p):
    w = (-1.0) ** np.arange(p)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def cheb_diff_matrix(p, h=1.0):
    """First-derivative matrix on ``p`` Chebyshev points of a half-width ``h`` interval.

    Off-diagonal entries are w_j / (w_i (x_i - x_j)); the diagonal is the negative
    row sum so constants are differentiated exactly.
    """
    if h <= 0:
        raise ValueError("half-width must be positive")
    x = cheb_nodes(p)
    w = cheb_bary_weights(p)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D / h


def bary_weights(nodes):
    """Barycentric weights for arbitrary distinct nodes (scaled to max |w| = 1)."""
    x = np.asarray(nodes, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise ValueError("interpolation nodes must be distinct")
    # scale by interval length / 4 to keep the products in range for large n
    scale = 4.0 / (x.max() - x.min()) if x.size > 1 else 1.0
    w = 1.0 / np.prod(diff * scale, axis=1)
    return w / np.max(np.abs(w))


def lagrange_interp_matrix(src, dst, weights=None):
    """Matrix evaluating the interpolant through ``src`` at ``dst``.

    Rows are barycentric (second form) so each row sums to one.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    w = bary_weights(src) if weights is None else np.asarray(weights)
    diff = dst[:, None] - src[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    M = w[None, :] / diff
    M /= M.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    if rows.size:
        M[rows] = exact[rows].astype(float)
    return M


def _check_arg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Hankel functions need a positive real argument")
    return x


def bessel_h1(l, x):
    """Outgoing Hankel function H^(1)_l(x) for integer order l >= 0 and real x > 0."""
    x = _check_arg(x)
    return sps.hankel1(l, x)


def bessel_h1p(l, x):
    """Derivative d/dx H^(1)_l(x)."""
    x = _check_arg(x)
    return sps.h1vp(l, x)


erf = sps.erf


class LUSolver:
    """Dense LU factorization with a LAPACK 1-norm condition estimate."""

    def __init__(self, A, check_finite=True):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("LUSolver needs a square matrix")
        self.n = A.shape[0]
        self.dtype = np.result_type(A.dtype, np.complex128)
        A = A.astype(self.dtype, copy=True)
        self.anorm = np.max(np.sum(np.abs(A), axis=0)) if self.n else 0.0
        with warnings.catch_warnings():
            # exact singularity is reported through cond_estimate() instead
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu, self.piv = sla.lu_factor(A, overwrite_a=True, check_finite=check_finite)

    def solve(self, b):
        return sla.lu_solve((self.lu, self.piv), b, check_finite=False)

    def cond_estimate(self):
        """Estimate of the 1-norm condition number (inf if singular)."""
        if self.n == 0:
            return 1.0
        if np.any(np.diag(self.lu) == 0):
            return np.inf
        rcond, info = lapack.zgecon(self.lu, self.anorm, norm="1")
        if info != 0 or rcond == 0:
            return np.inf
        return 1.0 / rcond
