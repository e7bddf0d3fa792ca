"""Command-line frontend.

Subcommands: voxelize, shapes, modal, check-equivalence, ffat, render,
pipeline, bench.  Heavy imports happen inside command functions so that
--threads can pin BLAS/OpenMP thread counts before numpy comes up.

Exit codes: 0 success, 2 input error, 3 numerical failure.

Air constants may be overridden by environment variables
MODALSOUND_SOUND_SPEED (m/s) and MODALSOUND_AIR_DENSITY (kg/m^3).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import InputError, NumericalError

_THREAD_ENV_VARS = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")

_SHAPE_KINDS = ("cube", "plate", "bar", "hollow-box", "L", "blob")


def _air_overrides():
    out = {}
    spec = (("MODALSOUND_SOUND_SPEED", "c"), ("MODALSOUND_AIR_DENSITY", "rho_air"))
    for env, key in spec:
        raw = os.environ.get(env)
        if raw is None:
            continue
        try:
            val = float(raw)
        except ValueError:
            raise InputError(f"{env} must be a number, got {raw!r}")
        if val <= 0:
            raise InputError(f"{env} must be positive, got {val}")
        out[key] = val
    return out


def _parse_listener(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"listener must be 'x,y,z', got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InputError(f"listener must be 'x,y,z' numbers, got {text!r}")


def _parse_warmstart(text, k):
    """'random', 'krylov:COUNT,DEPTH', or 'file:PATH'."""
    from .eigensolve import FileStart, KrylovStart, RandomStart

    if text is None:
        return KrylovStart(count=max(k, 20), depth=1)
    if text == "random":
        return RandomStart()
    if text.startswith("krylov:"):
        body = text[len("krylov:"):]
        try:
            count, depth = (int(p) for p in body.split(","))
        except ValueError:
            raise InputError(f"expected krylov:COUNT,DEPTH, got {text!r}")
        return KrylovStart(count=count, depth=depth)
    if text.startswith("file:"):
        return FileStart(path=text[len("file:"):])
    raise InputError(f"unknown warm start {text!r}")


def _add_global_flags(parser, suppress=False):
    # subparsers get SUPPRESS defaults: otherwise their defaults overwrite
    # values already parsed from before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d(0), help="seed for all randomness")
    g.add_argument("--threads", type=int, default=d(None),
                   help="pin BLAS/OpenMP thread count (set before numpy loads)")
    g.add_argument("--material", default=d("ceramic"),
                   help="material table name or JSON file")
    g.add_argument("--tol", type=float, default=d(1e-6),
                   help="eigensolver residual tolerance")
    g.add_argument("--modes", type=int, default=d(20), metavar="K",
                   help="number of audible modes to solve")
    g.add_argument("--ffat-range", choices=("far", "near"), default=d("far"),
                   help="transfer-map sampling shells")


# ---------------------------------------------------------------- commands

def _cmd_voxelize(args):
    from .mesh import load_mesh
    from .voxgrid import save_vgrid, voxelize

    mesh = load_mesh(args.mesh)
    grid = voxelize(mesh, args.res)
    save_vgrid(grid, args.out)
    print(f"voxelize: {grid.occupied.shape[0]} voxels, h={grid.h:.6g}, "
          f"dims={tuple(int(d) for d in grid.dims)} -> {args.out}")
    return 0


def _cmd_shapes(args):
    from .shapes import gen_shape
    from .voxgrid import save_vgrid

    grid = gen_shape(args.kind, args.res, size=args.size, seed=args.seed)
    save_vgrid(grid, args.out)
    print(f"shapes: {args.kind}({args.res}) -> {grid.occupied.shape[0]} voxels, "
          f"h={grid.h:.6g} -> {args.out}")
    return 0


def _cmd_modal(args):
    from .eigensolve import mixed_solve, save_modes
    from .hexfem import assemble, element_matrices, load_material
    from .voxgrid import load_vgrid

    grid = load_vgrid(args.grid)
    material = load_material(args.material)
    warm = _parse_warmstart(args.warmstart, args.modes)
    system = assemble(grid, element_matrices(material, grid.h))
    modes, report = mixed_solve(system.K, system.M, args.modes, warmstart=warm,
                                tol=args.tol, seed=args.seed, grid=grid,
                                material=material, max_iter=args.max_iter)
    save_modes(modes, args.out, h=grid.h, seed=args.seed,
               solver=report.warm_start, tol=args.tol)
    print(f"modal: {modes.k} modes in {report.iterations} iterations "
          f"({report.warm_start}) -> {args.out}")
    print("  idx      freq_hz          xi      residual")
    for i in range(modes.k):
        print(f"  {i:3d} {modes.freqs_hz[i]:12.2f} {modes.xi[i]:11.4g} "
              f"{modes.residuals[i]:13.3e}")
    return 0


def _cmd_check_equivalence(args):
    import numpy as np

    from .convequiv import equivalence_error, kernel_from_element
    from .hexfem import assemble, element_matrices, load_material
    from .voxgrid import load_vgrid

    grid = load_vgrid(args.grid)
    material = load_material(args.material)
    em = element_matrices(material, grid.h)
    system = assemble(grid, em)
    rng = np.random.default_rng(args.seed)
    n = 3 * grid.vertex_lattice.shape[0]
    worst = {"stiffness": 0.0, "mass": 0.0}
    for which in worst:
        kern = kernel_from_element(em, which)
        A = system.K if which == "stiffness" else system.M
        for _ in range(args.trials):
            err = equivalence_error(grid, em, rng.standard_normal(n),
                                    which=which, kernel=kern, matrix=A)
            worst[which] = max(worst[which], err)
    ok = all(v < args.threshold for v in worst.values())
    for which, v in worst.items():
        print(f"check-equivalence: {which:9s} max rel error {v:.3e} over "
              f"{args.trials} trials")
    print(f"check-equivalence: {'PASS' if ok else 'FAIL'} "
          f"(threshold {args.threshold:g})")
    if not ok:
        raise NumericalError("convolution/assembly equivalence check failed")
    return 0


def _cmd_ffat(args):
    from .eigensolve import load_modes
    from .ffat import ffat_to_png, save_ffat
    from .pipeline import radiate_mode
    from .radiation import build_surface
    from .voxgrid import load_vgrid

    grid = load_vgrid(args.grid)
    modes = load_modes(args.modes_file)
    air = _air_overrides()
    surface = build_surface(grid)
    c = air.get("c", 343.0)
    indices = [args.mode_index] if args.mode_index is not None else range(modes.k)
    written = 0
    for i in indices:
        if i < 0 or i >= modes.k:
            raise InputError(f"mode index {i} out of range 0..{modes.k - 1}")
        omega = float(modes.omega[i])
        kappa_h = omega / c * grid.h
        if kappa_h >= 1.0:
            print(f"ffat: mode {i} kappa*h={kappa_h:.2f} >= 1, skipped")
            continue
        fmap, _, _ = radiate_mode(grid, surface, modes.vectors[:, i], omega,
                                  ffat_range=args.ffat_range, **air)
        path = Path(f"{args.out_prefix}_mode{i:02d}.ffat")
        save_ffat(fmap, path)
        line = f"ffat: mode {i} ({modes.freqs_hz[i]:.1f} Hz) -> {path}"
        if args.png:
            png = path.with_suffix(".png")
            ffat_to_png(fmap, png)
            line += f", {png}"
        print(line)
        written += 1
    if written == 0:
        raise NumericalError("no mode satisfied the kappa*h < 1 panel bound")
    return 0


def _cmd_render(args):
    import numpy as np

    from .eigensolve import load_modes
    from .ffat import load_ffat
    from .pipeline import _subset_modes
    from .synth import ListenerConfig, load_events, render, wav_export

    modes = load_modes(args.modes_file)
    events = load_events(args.events)
    kept, maps = [], []
    for i in range(modes.k):
        path = Path(f"{args.ffat_prefix}_mode{i:02d}.ffat")
        if path.exists():
            kept.append(i)
            maps.append(load_ffat(path))
        else:
            print(f"render: no map for mode {i}, excluded")
    if not kept:
        raise InputError(f"no transfer maps found at {args.ffat_prefix}_modeNN.ffat")
    if args.listener is not None:
        pos = np.asarray(_parse_listener(args.listener), dtype=np.float64)
    else:
        pos = np.array([0.0, 0.0, 4.0 * max(m.a for m in maps)])
    buf = render(_subset_modes(modes, kept), maps, events, ListenerConfig(position=pos),
                 duration=args.duration, sample_rate=args.rate)
    wav_export(buf, args.out)
    print(f"render: {len(kept)} modes, {len(events)} events, "
          f"{args.duration:g} s at {args.rate} Hz -> {args.out}")
    return 0


def _cmd_pipeline(args):
    import numpy as np

    from .mesh import load_mesh
    from .pipeline import run_pipeline
    from .shapes import gen_shape
    from .synth import ListenerConfig, load_events
    from .voxgrid import save_vgrid, voxelize

    if args.mesh is not None:
        grid = voxelize(load_mesh(args.mesh), args.res)
        name = Path(args.mesh).stem
    else:
        grid = gen_shape(args.shape, args.res, size=args.size, seed=args.seed)
        name = args.shape
    events = load_events(args.events) if args.events else None
    listener = None
    if args.listener is not None:
        listener = ListenerConfig(
            position=np.asarray(_parse_listener(args.listener), dtype=np.float64))
    air = _air_overrides()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_vgrid(grid, out_dir / f"{name}.vgrid")
    result = run_pipeline(grid, args.material, args.modes, out_dir, events=events,
                          listener=listener, duration=args.duration,
                          sample_rate=args.rate, tol=args.tol, seed=args.seed,
                          ffat_range=args.ffat_range, name=name, **air)
    for line in result.log:
        print(f"pipeline: {line}")
    print(f"pipeline: wrote {result.modes_path}")
    for p in result.ffat_paths:
        print(f"pipeline: wrote {p}")
    print(f"pipeline: wrote {result.wav_path}")
    return 0


def _cmd_bench(args):
    from .bench import DEFAULT_CONFIGS, DEFAULT_TOLS, bench_vibration

    shapes = args.shapes or list(_SHAPE_KINDS)
    tols = tuple(args.tols) if args.tols else DEFAULT_TOLS
    report = bench_vibration(shapes=shapes, configs=DEFAULT_CONFIGS, tols=tols,
                             seeds=args.seeds, k=args.modes,
                             resolution=args.res, material=args.material,
                             base_seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "bench.csv"
    md_path = out_dir / "bench.md"
    csv_path.write_text(report.to_csv())
    md_path.write_text(report.to_markdown())
    print(report.to_markdown(), end="")
    print(f"bench: wrote {csv_path} and {md_path}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="modalsound",
        description="Voxel modal sound: vibration, radiation, and synthesis.")
    _add_global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("voxelize", help="rasterize a watertight mesh onto a voxel grid")
    p.add_argument("mesh", help="input .stl or .obj")
    p.add_argument("out", help="output .vgrid")
    p.add_argument("--res", type=int, default=16,
                   help="voxels along the longest bounding-box side")
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_voxelize)

    p = sub.add_parser("shapes", help="generate a procedural benchmark shape")
    p.add_argument("kind", choices=_SHAPE_KINDS)
    p.add_argument("out", help="output .vgrid")
    p.add_argument("--res", type=int, default=8)
    p.add_argument("--size", type=float, default=0.1,
                   help="longest side in meters")
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_shapes)

    p = sub.add_parser("modal", help="solve audible vibration modes of a grid")
    p.add_argument("grid", help="input .vgrid")
    p.add_argument("out", help="output .modes")
    p.add_argument("--warmstart", default=None,
                   help="random | krylov:COUNT,DEPTH | file:PATH")
    p.add_argument("--max-iter", type=int, default=300)
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_modal)

    p = sub.add_parser("check-equivalence",
                       help="verify stencil application matches assembled matrices")
    p.add_argument("grid", help="input .vgrid")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--threshold", type=float, default=1e-10)
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_check_equivalence)

    p = sub.add_parser("ffat", help="fit acoustic transfer maps for solved modes")
    p.add_argument("grid", help="input .vgrid")
    p.add_argument("modes_file", help="input .modes")
    p.add_argument("out_prefix", help="maps written as PREFIX_modeNN.ffat")
    p.add_argument("--mode-index", type=int, default=None,
                   help="fit a single mode instead of all")
    p.add_argument("--png", action="store_true", help="also write preview images")
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_ffat)

    p = sub.add_parser("render", help="synthesize impact audio from modes and maps")
    p.add_argument("modes_file", help="input .modes")
    p.add_argument("ffat_prefix", help="maps read from PREFIX_modeNN.ffat")
    p.add_argument("events", help="impact events JSON")
    p.add_argument("out", help="output .wav")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--rate", type=int, default=44100)
    p.add_argument("--listener", default=None, help="x,y,z relative to object center")
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("pipeline",
                       help="shape/mesh -> modes -> maps -> audio, all artifacts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--shape", choices=_SHAPE_KINDS)
    src.add_argument("--mesh", help="input .stl or .obj")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--res", type=int, default=8)
    p.add_argument("--size", type=float, default=0.1)
    p.add_argument("--events", default=None, help="impact events JSON")
    p.add_argument("--listener", default=None, help="x,y,z relative to object center")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--rate", type=int, default=44100)
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("bench", help="warm-start comparison harness")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--shapes", nargs="*", choices=_SHAPE_KINDS, default=None)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--res", type=int, default=6)
    p.add_argument("--tols", nargs="*", type=float, default=None)
    _add_global_flags(p, suppress=True)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
