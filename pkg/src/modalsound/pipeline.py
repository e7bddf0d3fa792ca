"""End-to-end path: shape -> modes -> per-mode radiation -> maps -> audio.

Each stage writes its artifact next to the others in the output directory,
so a run is fully reproducible from its files.  Modes whose frequency the
panel quadrature cannot resolve (kappa*h >= 1) or that are overdamped are
excluded from radiation, with a note in the returned log.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalError
from .eigensolve import KrylovStart, mixed_solve, save_modes
from .ffat import fit_ffat, sample_pattern, save_ffat, scale_ffat, ffat_to_png
from .hexfem import assemble, element_matrices, load_material
from .radiation import (HelmholtzContext, assemble_cbie, build_surface,
                        evaluate_potential, neumann_from_mode,
                        solve_surface_pressure)
from .synth import ForceEvent, ListenerConfig, render, wav_export
from .voxgrid import VoxelGrid

__all__ = ["PipelineResult", "run_pipeline", "default_tap_event", "radiate_mode"]


@dataclass
class PipelineResult:
    out_dir: Path
    modes_path: Path
    ffat_paths: list
    png_paths: list
    wav_path: Path
    radiated_mode_indices: list
    log: list = field(default_factory=list)


def default_tap_event(grid: VoxelGrid) -> ForceEvent:
    """Unit downward tap on the topmost (then lexicographically first) vertex."""
    pos = grid.vertex_positions()
    order = np.lexsort((pos[:, 0], pos[:, 1], -pos[:, 2]))
    return ForceEvent(time=0.0, vertex=int(order[0]),
                      direction=np.array([0.0, 0.0, -1.0]), amplitude=1.0)


def radiate_mode(grid, surface, mode_vec, omega, ffat_range="far",
                 c=None, rho_air=None):
    """Solve one mode's exterior field and fit its transfer map.

    Radiation runs on the body rescaled to unit longest side (gamma = a,
    frequency times gamma, mode mass-renormalized): kappa*h is invariant,
    the shell radii clear the body, and the fitted map converts back
    through the gamma scaling law.  The law's absolute-scale convention is
    a single per-object constant, so relative mode gains are exact and the
    constant cancels in peak-normalized audio.  Returned surface data
    (p, q) are in the normalized frame.
    """
    kwargs = {}
    if c is not None:
        kwargs["c"] = c
    if rho_air is not None:
        kwargs["rho_air"] = rho_air
    lo, hi = grid.occupied_bounds_world()
    center = (lo + hi) / 2.0
    gamma = float((hi - lo).max())
    surf_n = replace(surface,
                     centers=center + (surface.centers - center) / gamma,
                     h=surface.h / gamma)
    ctx = HelmholtzContext(omega=float(omega) * gamma, **kwargs)
    system = assemble_cbie(surf_n, ctx)
    q = neumann_from_mode(surf_n, gamma ** 1.5 * np.asarray(mode_vec), ctx)
    p_surf = solve_surface_pressure(system, q)
    pattern = sample_pattern(center, 1.0, mode=ffat_range)
    pts = pattern.points()
    pressures = evaluate_potential(surf_n, p_surf, q, pts.reshape(-1, 3), ctx)
    pressures = pressures.reshape(pts.shape[:3])
    return scale_ffat(fit_ffat(pressures, pattern), gamma), p_surf, q


def run_pipeline(grid: VoxelGrid, material, k: int, out_dir, events=None,
                 listener=None, duration: float = 1.0, sample_rate: int = 44100,
                 tol: float = 1e-6, seed: int = 0, ffat_range: str = "far",
                 max_iter: int = 300, c=None, rho_air=None,
                 name: str = "object") -> PipelineResult:
    """Run modal analysis, radiation, and synthesis; write all artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = []
    material = load_material(material)

    try:
        sys_ = assemble(grid, element_matrices(material, grid.h))
        modes, report = mixed_solve(sys_.K, sys_.M, k, warmstart=KrylovStart(max(k, 20), 1),
                                    tol=tol, max_iter=max_iter, seed=seed, grid=grid,
                                    material=material)
    except (InputError, NumericalError) as exc:
        raise type(exc)(f"modal stage: {exc}") from exc
    log.append(f"modal: {modes.k} audible modes in {report.iterations} iterations "
               f"({report.warm_start})")
    modes_path = out_dir / f"{name}.modes"
    save_modes(modes, modes_path, h=grid.h, seed=seed, solver="mixed-krylov", tol=tol)

    surface = build_surface(grid)
    maps, ffat_paths, png_paths, radiated = {}, [], [], []
    nyquist_omega = np.pi * sample_rate
    for i in range(modes.k):
        omega = float(modes.omega[i])
        if modes.xi[i] >= 1.0:
            log.append(f"mode {i}: overdamped (xi={modes.xi[i]:.3g}), skipped")
            continue
        if omega >= nyquist_omega:
            log.append(f"mode {i}: {modes.freqs_hz[i]:.0f} Hz above Nyquist, skipped")
            continue
        kappa_h = omega / (c or 343.0) * grid.h
        if kappa_h >= 1.0:
            log.append(f"mode {i}: kappa*h={kappa_h:.2f} >= 1, radiation skipped")
            continue
        try:
            fmap, _, _ = radiate_mode(grid, surface, modes.vectors[:, i], omega,
                                      ffat_range=ffat_range, c=c, rho_air=rho_air)
        except (InputError, NumericalError) as exc:
            raise type(exc)(f"radiation stage (mode {i}): {exc}") from exc
        maps[i] = fmap
        fp = out_dir / f"{name}_mode{i:02d}.ffat"
        pp = out_dir / f"{name}_mode{i:02d}.png"
        save_ffat(fmap, fp)
        ffat_to_png(fmap, pp)
        ffat_paths.append(fp)
        png_paths.append(pp)
        radiated.append(i)
    if not radiated:
        raise NumericalError(
            "radiation stage: no mode is radiatable (all overdamped, above "
            "Nyquist, or beyond the kappa*h panel bound)")

    if events is None:
        events = [default_tap_event(grid)]
    if listener is None:
        lo, hi = grid.occupied_bounds_world()
        listener = ListenerConfig(position=np.array([0.0, 0.0, 4.0 * float((hi - lo).max())]))

    # restrict synthesis to the radiated subset, keeping mode order
    sub = _subset_modes(modes, radiated)
    try:
        buf = render(sub, [maps[i] for i in radiated], events, listener,
                     duration=duration, sample_rate=sample_rate)
    except (InputError, NumericalError) as exc:
        raise type(exc)(f"synthesis stage: {exc}") from exc
    wav_path = out_dir / f"{name}.wav"
    wav_export(buf, wav_path)
    log.append(f"synth: {len(radiated)} modes, {len(events)} events, "
               f"{duration:.3g} s at {sample_rate} Hz")
    return PipelineResult(out_dir=out_dir, modes_path=modes_path, ffat_paths=ffat_paths,
                          png_paths=png_paths, wav_path=wav_path,
                          radiated_mode_indices=radiated, log=log)


def _subset_modes(modes, indices):
    from .eigensolve import ModeSet

    idx = list(indices)
    return ModeSet(lambdas=modes.lambdas[idx], vectors=modes.vectors[:, idx],
                   residuals=modes.residuals[idx], material=modes.material,
                   meta=dict(modes.meta))
