"""Scattering potentials b(x) = 1 - (v_free / v(x))^2 and the built-in test media.

Every built-in is a closed-form smooth expression supported (numerically)
inside the square ``(-0.5, 0.5)^2``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numkit import erf

__all__ = [
    "ScatteringPotential",
    "eval_b",
    "builtin",
    "BUILTIN_NAMES",
    "refractive_index_max",
]

DOMAIN_HALF_WIDTH = 0.5


@dataclass(frozen=True)
class ScatteringPotential:
    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    half_width: float = DOMAIN_HALF_WIDTH
    params: dict = field(default_factory=dict)
    # b as a function of r for radially symmetric media (used by the radial oracle)
    radial: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x1, x2):
        return self.evaluator(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


def eval_b(pot, points):
    """Evaluate ``pot`` at an (n, 2) array of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.asarray(pot(pts[:, 0], pts[:, 1]), dtype=float)


def _zero(x1, x2):
    return np.zeros(np.broadcast(x1, x2).shape)


def _radial_gaussian(amp, width):
    def radial(r):
        return amp * np.exp(-width * np.asarray(r) ** 2)

    def ev(x1, x2):
        return radial(np.hypot(x1, x2))

    return ev, radial


def _box_rolloff(x1, x2, edge, slope):
    # smooth in t; ~1 for |t| < edge, ~0 past it
    def r1(t):
        return 0.25 * (1.0 - erf(slope * (t - edge))) * (1.0 + erf(slope * (t + edge)))

    return r1(x1) * r1(x2)


def _gaussian_sum(centers, amps, widths, x1, x2, chunk=64):
    out = np.zeros(np.broadcast(x1, x2).shape)
    x1 = np.broadcast_to(x1, out.shape)
    x2 = np.broadcast_to(x2, out.shape)
    for s in range(0, len(amps), chunk):
        c = centers[s:s + chunk]
        d2 = (x1[..., None] - c[:, 0]) ** 2 + (x2[..., None] - c[:, 1]) ** 2
        out += np.sum(amps[s:s + chunk] * np.exp(-widths[s:s + chunk] * d2), axis=-1)
    return out


def _lens():
    def ev(x1, x2):
        return 4.0 * (x2 - 0.2) * (1.0 - erf(25.0 * (np.hypot(x1, x2) - 0.3)))

    return ev


def _custom_gaussian_sum(centers, amplitudes, widths, rolloff=None):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    amps = np.broadcast_to(np.asarray(amplitudes, dtype=float), (len(centers),)).copy()
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (len(centers),)).copy()

    def ev(x1, x2):
        b = _gaussian_sum(centers, amps, widths, x1, x2)
        if rolloff is not None:
            b = b * _box_rolloff(x1, x2, rolloff[0], rolloff[1])
        return b

    radial = None
    if rolloff is None and np.all(centers == 0.0):
        def radial(r):
            r = np.asarray(r, dtype=float)
            return np.sum(amps * np.exp(-widths * r[..., None] ** 2), axis=-1)

    return ev, radial


def _random_bumps(seed, count=200, width=100.0, index_max=4.3,
                  rolloff_edge=0.40, rolloff_slope=60.0, calib_grid=401):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.4, 0.4, size=(count, 2))
    shape = rng.uniform(0.0, 1.0, size=count)
    widths = np.full(count, float(width))

    def raw(x1, x2):
        return -_gaussian_sum(centers, shape, widths, x1, x2) * _box_rolloff(
            x1, x2, rolloff_edge, rolloff_slope)

    g = np.linspace(-0.5, 0.5, calib_grid)
    G1, G2 = np.meshgrid(g, g, indexing="ij")
    deepest = -raw(G1, G2).min()
    scale = (index_max ** 2 - 1.0) / deepest

    def ev(x1, x2):
        return scale * raw(x1, x2)

    return ev, {"amplitude_scale": scale}


def crystal_centers(cells=20, extent=0.45, channel=True):
    """Lattice sites of the photonic crystal, with the waveguide cells removed.

    The channel runs along the middle row from the west edge to the middle
    column, then turns down that column to the south edge.
    """
    pitch = 2 * extent / cells
    c = -extent + pitch * (np.arange(cells) + 0.5)
    mid = cells // 2
    keep = []
    for i in range(cells):
        for j in range(cells):
            if channel and ((j == mid and i <= mid) or (i == mid and j <= mid)):
                continue
            keep.append((c[i], c[j]))
    return np.array(keep), pitch


def _crystal(cells=20, width=None, index_peak=6.7, channel=True,
             rolloff_edge=None, rolloff_slope=None):
    centers, pitch = crystal_centers(cells, channel=channel)
    if width is None:
        # bump size scales with the lattice pitch
        width = 4000.0 * (cells / 20) ** 2
    if rolloff_edge is None:
        rolloff_edge = 0.5 * (0.45 - 0.5 * pitch + 0.5)
    if rolloff_slope is None:
        rolloff_slope = 5.5 / (0.5 - rolloff_edge)
    widths = np.full(len(centers), float(width))
    ones = np.ones(len(centers))

    def raw(x1, x2):
        return -_gaussian_sum(centers, ones, widths, x1, x2) * _box_rolloff(
            x1, x2, rolloff_edge, rolloff_slope)

    # peak over the sites (the deepest point sits on a site for well-separated bumps)
    deepest = -raw(centers[:, 0], centers[:, 1]).min()
    scale = (index_peak ** 2 - 1.0) / deepest

    def ev(x1, x2):
        return scale * raw(x1, x2)

    return ev, {"amplitude_scale": scale, "pitch": pitch, "width": width,
                "rolloff": (rolloff_edge, rolloff_slope)}


BUILTIN_NAMES = ("zero", "bump1", "bump2", "lens", "random_bumps", "crystal",
                 "custom_gaussian_sum")


def builtin(name, **params):
    """Construct a named built-in potential.

    ``random_bumps`` requires ``seed``; ``crystal`` accepts ``cells`` (20 by
    default), ``width`` and ``channel``; ``custom_gaussian_sum`` takes
    ``centers``, ``amplitudes``, ``widths`` and an optional ``rolloff``
    ``(edge, slope)`` pair.
    """
    if name == "zero":
        return ScatteringPotential("zero", _zero, params={}, radial=lambda r: np.zeros_like(np.asarray(r, float)))
    if name in ("bump1", "bump2"):
        amp = -1.5 if name == "bump1" else 1.5
        ev, radial = _radial_gaussian(amp, 160.0)
        return ScatteringPotential(name, ev, params={"amplitude": amp, "width": 160.0}, radial=radial)
    if name == "lens":
        return ScatteringPotential("lens", _lens(), params={})
    if name == "random_bumps":
        if "seed" not in params:
            raise ValueError("random_bumps needs an explicit seed")
        kw = dict(params)
        ev, extra = _random_bumps(**kw)
        return ScatteringPotential("random_bumps", ev, params={**kw, **extra})
    if name == "crystal":
        ev, extra = _crystal(**params)
        return ScatteringPotential("crystal", ev, params={**params, **extra})
    if name == "custom_gaussian_sum":
        ev, radial = _custom_gaussian_sum(
            params["centers"], params["amplitudes"], params["widths"], params.get("rolloff"))
        return ScatteringPotential("custom_gaussian_sum", ev, params=dict(params), radial=radial)
    raise ValueError(f"unknown potential {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def refractive_index_max(pot, n=2000):
    """Max of sqrt(1 - b) over an n x n grid on the support box (real part only)."""
    g = np.linspace(-pot.half_width, pot.half_width, n)
    best = -np.inf
    for row in np.array_split(g, max(1, n // 200)):
        X1, X2 = np.meshgrid(row, g, indexing="ij")
        best = max(best, float(np.max(1.0 - pot(X1, X2))))
    return np.sqrt(best)
