"""Partial-wave reference solution for plane-wave scattering by a radially
symmetric potential b(r).

For each angular order l the regular solution of

    u'' + u'/r + (-l^2/r^2 + (1 - b(r)) kappa^2) u = 0

is integrated out to the matching radius, and its logarithmic derivative
fixes the outgoing coefficient ``a_l`` of the exterior expansion

    u = exp(i kappa r cos t) + sum_l eps_l i^l (a_l - 1) H1_l(kappa r) cos(l t),

with ``eps_0 = 1/2`` and ``eps_l = 1`` otherwise.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.special as sps
from scipy.integrate import solve_ivp

from .errors import AccuracyError

__all__ = ["RadialPhases", "scattering_phases", "reference_field", "tail_estimate"]

ODE_TOL = 1e-13


@dataclass
class RadialPhases:
    kappa: float
    L: int
    R_match: float
    a: np.ndarray  # a_0 .. a_L
    # a_l - 1 computed without cancellation (the scattered-wave coefficients)
    da: np.ndarray
    beta: np.ndarray  # u_l'(R) / u_l(R)
    b_radial: object = field(default=None, repr=False)
    r0: float = 0.0

    @property
    def unitarity_defect(self):
        return float(np.max(np.abs(np.abs(self.a) - 1.0)))


def _radial_rhs(l, kappa, b_radial):
    k2 = kappa * kappa
    l2 = float(l * l)

    def rhs(r, y):
        u, du = y
        return [du, -du / r + (l2 / (r * r) - (1.0 - b_radial(r)) * k2) * u]

    return rhs


def _local_regular(l, kappa, b_radial, r0, r):
    """Regular solution for b frozen at b(r0), and its derivative, at radii r."""
    s = 1.0 - float(b_radial(r0))
    q = kappa * np.sqrt(abs(s))
    r = np.asarray(r, dtype=float)
    if q == 0:
        return r ** l, l * r ** (l - 1) if l else np.zeros_like(r)
    if s > 0:
        return sps.jv(l, q * r), q * sps.jvp(l, q * r)
    return sps.iv(l, q * r), q * sps.ivp(l, q * r)


def _integrate(l, kappa, b_radial, R, r0, t_eval=None):
    # Regular solution ~ r^l.  Near the origin b is flat, so J_l(k0 r) (or
    # I_l when 1 - b < 0) with the local wavenumber gives the start slope
    # without the O((kappa r0)^2) error of the bare power law, which the
    # l = 0 mode never outgrows.
    f0, df0 = _local_regular(l, kappa, b_radial, r0, np.array([r0]))
    ratio = df0[0] / f0[0]
    y0 = np.array([1.0, ratio])
    y0 = y0 / np.hypot(*y0)
    sol = solve_ivp(_radial_rhs(l, kappa, b_radial), (r0, R), y0, method="DOP853",
                    rtol=ODE_TOL, atol=ODE_TOL * 1e-3, t_eval=t_eval)
    if not sol.success:
        raise AccuracyError(f"radial ODE for l={l} failed: {sol.message}")
    uR, duR = sol.y[:, -1]
    if not (np.isfinite(uR) and np.isfinite(duR)) or uR == 0.0:
        raise AccuracyError(f"radial ODE for l={l} produced an unusable end value")
    return duR / uR, sol.y[0] / uR


def scattering_phases(b_radial, kappa, R_match=0.5, L=30, r0=None):
    """Phases a_0..a_L for b(r) supported (numerically) in r < R_match."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if L < 0:
        raise ValueError("L must be non-negative")
    r0 = 1e-4 * R_match if r0 is None else r0
    z = kappa * R_match
    a = np.empty(L + 1, dtype=complex)
    da = np.empty(L + 1, dtype=complex)
    beta = np.empty(L + 1)
    for l in range(L + 1):
        beta[l], _ = _integrate(l, kappa, b_radial, R_match, r0)
        h = sps.hankel1(l, z)
        dh = sps.h1vp(l, z)
        alpha = kappa * dh - h * beta[l]
        a[l] = -np.conj(alpha) / alpha
        # a - 1 = -2 Re(alpha) / alpha, and Re(alpha) only involves J_l
        da[l] = -2.0 * (kappa * sps.jvp(l, z) - sps.jv(l, z) * beta[l]) / alpha
    return RadialPhases(float(kappa), int(L), float(R_match), a, da, beta, b_radial, float(r0))


def _profiles(ph, l, radii):
    """u_l / u_l(R_match) at the given radii (r0 <= r <= R_match), by re-integration."""
    grid, inv = np.unique(np.append(radii, ph.R_match), return_inverse=True)
    _, vals = _integrate(l, ph.kappa, ph.b_radial, ph.R_match, ph.r0, t_eval=grid)
    return vals[inv[:-1]]


def _eps(l):
    return 0.5 if l == 0 else 1.0


def reference_field(ph, points, direction=(1.0, 0.0)):
    """Total field at ``points`` (n, 2) for incidence along the unit ``direction``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(direction, dtype=float)
    w = w / np.hypot(*w)
    r = np.hypot(pts[:, 0], pts[:, 1])
    cos_t = np.where(r > 0, (pts @ w) / np.where(r > 0, r, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    k, R = ph.kappa, ph.R_match
    out = np.empty(len(pts), dtype=complex)

    ext = r >= R
    if np.any(ext):
        re, te = r[ext], theta[ext]
        u = np.exp(1j * k * re * np.cos(te))
        for l in range(ph.L + 1):
            u += _eps(l) * 1j ** l * ph.da[l] * sps.hankel1(l, k * re) * np.cos(l * te)
        out[ext] = u

    inn = ~ext
    if np.any(inn):
        ri, ti = r[inn], theta[inn]
        z = k * R
        # incident wave kept exact; each retained mode swaps its incident part
        # 2 J_l for the interior solution
        u = np.exp(1j * k * ri * np.cos(ti))
        for l in range(ph.L + 1):
            c = _eps(l) * 1j ** l * (2 * sps.jv(l, z) + ph.da[l] * sps.hankel1(l, z))
            prof = np.empty(len(ri))
            far = ri >= ph.r0
            prof[far] = _profiles(ph, l, ri[far])
            if np.any(~far):
                at_r0 = _profiles(ph, l, np.array([ph.r0]))[0]
                f, _ = _local_regular(l, k, ph.b_radial, ph.r0, np.append(ri[~far], ph.r0))
                prof[~far] = at_r0 * f[:-1] / f[-1]
            u += (c * prof - 2 * _eps(l) * 1j ** l * sps.jv(l, k * ri)) * np.cos(l * ti)
        out[inn] = u
    return out


def tail_estimate(b_radial, kappa, R_match, L, r, extra=5):
    """Size of the neglected terms l = L+1 .. L+extra of the scattered sum at radius r."""
    more = scattering_phases(b_radial, kappa, R_match, L + extra)
    ls = np.arange(L + 1, L + extra + 1)
    return float(np.sum(np.abs(more.da[ls]) * np.abs(sps.hankel1(ls, kappa * r))))
