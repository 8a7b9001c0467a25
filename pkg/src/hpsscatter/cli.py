"""Command-line driver: solve, convergence, spectrum, reference, timing.

Thread count for the BLAS/LAPACK pools can be pinned with the
``HPSSCATTER_THREADS`` environment variable (recommended for bit-identical
reruns).
"""

import argparse
import csv
import json
import logging
import os
import struct
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .bie import unregularized_operator
from .config import check_scale, load_config
from .errors import ConfigError, SolverError
from .fields import build_scene, eval_total, eval_total_grid, solve_scene
from .radial_oracle import reference_field, scattering_phases

logger = logging.getLogger("hpsscatter")

THREADS_ENV = "HPSSCATTER_THREADS"
RASTER_MAGIC = b"HPSFIELD"
RASTER_HEADER = struct.Struct("<8sIIIIddddd")  # magic, version, dtype, nx, ny, bounds, kappa
assert RASTER_HEADER.size == 64


def _fmt(x):
    return "%.17g" % x


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_raster(path, grid, kappa):
    """Binary field grid: 64-byte header, complex128 total field (ny, nx), uint8 region."""
    x0, x1, y0, y1 = grid.bounds
    with open(path, "wb") as fh:
        fh.write(RASTER_HEADER.pack(RASTER_MAGIC, 1, 1, grid.nx, grid.ny, x0, x1, y0, y1, kappa))
        fh.write(np.ascontiguousarray(grid.u, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(grid.region, dtype=np.uint8).tobytes())


def read_raster(path):
    raw = Path(path).read_bytes()
    magic, version, dtype, nx, ny, x0, x1, y0, y1, kappa = RASTER_HEADER.unpack_from(raw)
    if magic != RASTER_MAGIC:
        raise ValueError("not a field raster")
    off = RASTER_HEADER.size
    u = np.frombuffer(raw, dtype="<c16", count=nx * ny, offset=off).reshape(ny, nx)
    region = np.frombuffer(raw, dtype=np.uint8, count=nx * ny, offset=off + 16 * nx * ny).reshape(ny, nx)
    return {"bounds": (x0, x1, y0, y1), "kappa": kappa, "u": u, "region": region}


def _thread_limit():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=int(n))


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out, name, cfg, extra):
    meta = {"command": name, "version": __version__, "config": cfg.to_dict(),
            "threads": os.environ.get(THREADS_ENV), **extra}
    (out / f"{name}_meta.json").write_text(json.dumps(meta, indent=2, default=float))


def _oracle(cfg, pot):
    if pot.radial is None:
        return None
    return scattering_phases(pot.radial, cfg.kappa, cfg.R_match, cfg.L)


def _scene(cfg, pot, M):
    return build_scene(pot, cfg.kappa, M, Ng=cfg.Ng, Nc=cfg.Nc, eta=cfg.eta,
                       cond_threshold=cfg.cond_threshold)


def cmd_solve(cfg, args):
    check_scale([cfg.levels], args.large)
    out = _outdir(cfg)
    pot = cfg.make_potential()
    scene = _scene(cfg, pot, cfg.levels)
    dirs = np.atleast_2d(np.asarray(cfg.directions, dtype=float))
    probes = np.atleast_2d(np.asarray(cfg.probes, dtype=float))
    ph = _oracle(cfg, pot)
    rows, applies = [], []
    for d_idx, d in enumerate(dirs):
        bsol = solve_scene(scene, d)
        applies.append(bsol.seconds)
        if len(probes):
            u = eval_total(bsol, probes)[:, 0]
            ref = reference_field(ph, probes, d) if ph is not None else np.full(len(probes), np.nan)
            for p, val, r in zip(probes, u, ref):
                rows.append([d_idx, d[0], d[1], p[0], p[1], val.real, val.imag, r.real, r.imag, abs(val - r)])
        X = scene.mesh.points
        write_csv(out / f"boundary_{d_idx}.csv", ["x", "y", "re_us", "im_us", "re_usn", "im_usn"],
                  [[x[0], x[1], a.real, a.imag, b.real, b.imag]
                   for x, a, b in zip(X, bsol.us[:, 0], bsol.usn[:, 0])])
        if cfg.grid is not None:
            g = cfg.grid
            fg = eval_total_grid(bsol, tuple(g["bounds"]), int(g.get("nx", 200)), int(g.get("ny", 200)))
            gx, gy = np.meshgrid(fg.x, fg.y)
            write_csv(out / f"grid_{d_idx}.csv", ["x", "y", "re_u", "im_u", "region"],
                      [[a, b, v.real, v.imag, int(r)] for a, b, v, r in
                       zip(gx.ravel(), gy.ravel(), fg.u.ravel(), fg.region.ravel())])
            write_raster(out / f"grid_{d_idx}.bin", fg, cfg.kappa)
        us_norm = float(np.max(np.abs(bsol.us)))
        logger.info("direction %d: max |u^s| on boundary %.3e, apply %.3fs", d_idx, us_norm, bsol.seconds)
    write_csv(out / "probes.csv",
              ["direction", "wx", "wy", "x", "y", "re_u", "im_u", "re_ref", "im_ref", "abs_err"], rows)
    stats = {
        "N": scene.tree.n_points(cfg.Nc), "n": scene.mesh.n,
        "T_build": scene.timings["build"], "T_hps_build": scene.timings["hps_build"],
        "T_bie_build": scene.timings["bie_build"], "T_apply": applies,
        "operator_bytes": int(scene.solver.operator_bytes()),
        "cond_R_minus_I": scene.solver.cond_R1, "cond_A_estimate": scene.system.cond_estimate(),
    }
    _write_meta(out, "solve", cfg, stats)
    for r in rows:
        print(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r))
    return 0


def cmd_convergence(cfg, args):
    check_scale(cfg.levels_list, args.large)
    out = _outdir(cfg)
    pot = cfg.make_potential()
    probes = np.atleast_2d(np.asarray(cfg.probes, dtype=float))
    d = np.asarray(cfg.directions, dtype=float).reshape(-1, 2)[0]
    ph = _oracle(cfg, pot)
    ref = reference_field(ph, probes, d) if ph is not None else None
    rows, prev = [], None
    for M in cfg.levels_list:
        scene = _scene(cfg, pot, M)
        u = eval_total(solve_scene(scene, d), probes)[:, 0]
        for k, p in enumerate(probes):
            err = abs(u[k] - ref[k]) if ref is not None else np.nan
            diff = abs(u[k] - prev[k]) if prev is not None else np.nan
            rows.append([M, scene.tree.n_points(cfg.Nc), scene.mesh.n, p[0], p[1],
                         u[k].real, u[k].imag, err, diff])
        prev = u
        logger.info("M=%d done (%.1fs)", M, scene.timings["build"])
    write_csv(out / "convergence.csv",
              ["M", "N", "n", "x", "y", "re_u", "im_u", "err_vs_reference", "diff_vs_previous"], rows)
    _write_meta(out, "convergence", cfg, {})
    for r in rows:
        print(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r))
    return 0


def cmd_spectrum(cfg, args):
    check_scale([cfg.levels], args.large)
    out = _outdir(cfg)
    scene = _scene(cfg, cfg.make_potential(), cfg.levels)
    if scene.mesh.n > 4000 and not args.large:
        raise ConfigError("spectrum is meant for small meshes (n <= ~2000); pass --large to force")
    A = scene.system.matrix()
    lam = np.linalg.eigvals(A)
    mu = np.linalg.eigvals(unregularized_operator(scene.system))
    write_csv(out / "spectrum_A.csv", ["re", "im"], [[z.real, z.imag] for z in lam])
    write_csv(out / "spectrum_unregularized.csv", ["re", "im"], [[z.real, z.imag] for z in mu])
    summary = {"n": scene.mesh.n, "max_abs_A": float(np.max(np.abs(lam))),
               "cluster_radius_A": float(np.median(np.abs(lam - 1.0))),
               "cond_A": float(np.linalg.cond(A)),
               "max_abs_unregularized": float(np.max(np.abs(mu)))}
    _write_meta(out, "spectrum", cfg, summary)
    print(json.dumps(summary))
    return 0


def cmd_reference(cfg, args):
    out = _outdir(cfg)
    pot = cfg.make_potential()
    if pot.radial is None:
        raise ConfigError(f"potential {cfg.potential!r} is not radially symmetric")
    ph = scattering_phases(pot.radial, cfg.kappa, cfg.R_match, cfg.L)
    write_csv(out / "phases.csv", ["l", "re_a", "im_a", "beta"],
              [[l, a.real, a.imag, b] for l, (a, b) in enumerate(zip(ph.a, ph.beta))])
    probes = np.atleast_2d(np.asarray(cfg.probes, dtype=float))
    rows = []
    for d_idx, d in enumerate(np.atleast_2d(np.asarray(cfg.directions, dtype=float))):
        u = reference_field(ph, probes, d)
        rows += [[d_idx, p[0], p[1], v.real, v.imag] for p, v in zip(probes, u)]
    write_csv(out / "reference.csv", ["direction", "x", "y", "re_u", "im_u"], rows)
    _write_meta(out, "reference", cfg, {"unitarity_defect": ph.unitarity_defect})
    for r in rows:
        print(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r))
    return 0


def cmd_timing(cfg, args):
    check_scale(cfg.levels_list, args.large)
    out = _outdir(cfg)
    pot = cfg.make_potential()
    dirs = np.atleast_2d(np.asarray(cfg.directions, dtype=float))
    if len(dirs) < 2:
        dirs = np.vstack([dirs, [[0.0, 1.0]]])
    rows = []
    for M in cfg.levels_list:
        scene = _scene(cfg, pot, M)
        applies = []
        for d in dirs:
            bsol = solve_scene(scene, d)
            t0 = time.perf_counter()
            eval_total(bsol, np.array([[0.25, 0.0]]))
            applies.append(bsol.seconds + time.perf_counter() - t0)
        rows.append([M, scene.tree.n_points(cfg.Nc), scene.mesh.n, scene.timings["build"],
                     applies[0], applies[1], scene.solver.operator_bytes()])
        logger.info("M=%d build %.2fs", M, scene.timings["build"])
    write_csv(out / "timing.csv", ["M", "N", "n", "T_build", "T_apply_first", "T_apply_second",
                                   "operator_bytes"], rows)
    N = np.array([r[1] for r in rows], float)
    fits = {}
    if len(rows) >= 2:
        for key, col in (("build_exponent", 3), ("apply_exponent", 4)):
            fits[key] = float(np.polyfit(np.log(N), np.log([r[col] for r in rows]), 1)[0])
        fits["build_ratios"] = [rows[k + 1][3] / rows[k][3] for k in range(len(rows) - 1)]
    _write_meta(out, "timing", cfg, fits)
    print(json.dumps(fits))
    return 0


COMMANDS = {"solve": cmd_solve, "convergence": cmd_convergence, "spectrum": cmd_spectrum,
            "reference": cmd_reference, "timing": cmd_timing}


def build_parser():
    p = argparse.ArgumentParser(prog="hpsscatter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON or YAML run configuration")
        s.add_argument("--kappa", type=float)
        s.add_argument("--levels", type=int, help="quadtree depth M (list for convergence/timing)",
                       nargs="+")
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--potential")
        s.add_argument("--large", action="store_true",
                       help="allow configurations beyond desktop scale")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {"kappa": args.kappa, "seed": args.seed, "out": args.out, "potential": args.potential}
    if args.levels:
        if args.command in ("convergence", "timing"):
            overrides["levels_list"] = args.levels
        else:
            overrides["levels"] = args.levels[0]
    try:
        cfg = load_config(args.config, overrides)
        with _thread_limit():
            return COMMANDS[args.command](cfg, args)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
