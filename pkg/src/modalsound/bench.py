"""Vibration-solver benchmark: warm starts vs the random baseline.

Each (shape, solver-config) cell runs `seeds` independent solves and records
the median iteration count needed to reach every tolerance of interest plus
accuracy against a reference spectrum (dense when small enough, otherwise a
tight-tolerance iterative solve).  The emitted CSV/Markdown contain only
deterministic columns so that reruns with the same seed are byte-identical;
wall-clock medians stay in the in-memory rows.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .eigensolve import (ConvergenceError, KrylovStart, RandomStart, dense_oracle,
                         freq_error, mean_residual_error, mixed_solve, pencil_norms,
                         residual_errors)
from .errors import InputError
from .hexfem import assemble, element_matrices, load_material
from .shapes import gen_shape

__all__ = ["BenchConfig", "BenchRow", "BenchReport", "bench_vibration"]

DEFAULT_TOLS = (1e-2, 5e-3, 1e-3)


@dataclass(frozen=True)
class BenchConfig:
    """One solver column: a warm-start strategy under a fixed label."""

    label: str
    warmstart: object
    guard: int = None             # None = solver default, 0 = plain block


@dataclass
class BenchRow:
    shape: str
    ndof: int
    config: str
    median_iters: dict            # tol -> median iterations (int) or None
    mean_residual: float
    mel_mse: float
    mean_lambda: float
    median_wall_time_s: float
    failures: int = 0


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    tols: tuple = DEFAULT_TOLS
    seeds: int = 0
    k: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        tol_cols = [f"iters_tol_{t:g}" for t in self.tols]
        writer.writerow(["shape", "ndof", "config"] + tol_cols
                        + ["mean_residual", "mel_mse", "mean_lambda", "failures"])
        for r in self.rows:
            cells = [r.shape, str(r.ndof), r.config]
            cells += [("" if r.median_iters[t] is None else f"{r.median_iters[t]:g}")
                      for t in self.tols]
            cells += [f"{r.mean_residual:.6e}", f"{r.mel_mse:.6e}",
                      f"{r.mean_lambda:.6e}", str(r.failures)]
            writer.writerow(cells)
        return buf.getvalue()

    def to_markdown(self) -> str:
        tol_cols = [f"iters@{t:g}" for t in self.tols]
        head = ["shape", "ndof", "config"] + tol_cols + ["mean residual", "Mel MSE", "mean lambda"]
        lines = ["| " + " | ".join(head) + " |",
                 "|" + "|".join("---" for _ in head) + "|"]
        for r in self.rows:
            cells = [r.shape, str(r.ndof), r.config]
            cells += [("-" if r.median_iters[t] is None else f"{r.median_iters[t]:g}")
                      for t in self.tols]
            cells += [f"{r.mean_residual:.3e}", f"{r.mel_mse:.3e}", f"{r.mean_lambda:.3e}"]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


# The random row is the plain-LOBPCG baseline: no block oversampling, no
# warm start, exactly k columns plus the rigid buffer.
DEFAULT_CONFIGS = (
    BenchConfig("lobpcg-random", RandomStart(), guard=0),
    BenchConfig("mixed-krylov(20,1)", KrylovStart(count=20, depth=1)),
    BenchConfig("mixed-krylov(1,20)", KrylovStart(count=1, depth=20)),
    BenchConfig("mixed-krylov(20,20)", KrylovStart(count=20, depth=20)),
)


def bench_vibration(shapes=("cube", "plate", "bar", "hollow-box", "L", "blob"),
                    configs=DEFAULT_CONFIGS, tols=DEFAULT_TOLS, seeds: int = 20,
                    k: int = 20, resolution: int = 6, size: float = 0.1,
                    material="ceramic", max_iter: int = 250,
                    oracle_max_dof: int = 600, base_seed: int = 0) -> BenchReport:
    """Run the benchmark matrix and aggregate per-cell medians.

    The solve tolerance is min(tols); iteration counts per tolerance are read
    off each run's residual history.  Reference frequencies come from the
    dense solver when the body is small enough, otherwise from a 1e-8
    mixed solve.
    """
    if seeds < 1:
        raise InputError("seeds must be >= 1")
    mat = load_material(material)
    tols = tuple(sorted(tols, reverse=True))
    report = BenchReport(rows=[], tols=tols, seeds=seeds, k=k)
    for shape in shapes:
        g = gen_shape(shape, resolution, size=size, seed=1234)
        sys_ = assemble(g, element_matrices(mat, g.h))
        K, M, n = sys_.K, sys_.M, sys_.K.shape[0]
        norms = pencil_norms(K, M)
        if n <= oracle_max_dof:
            w, _ = dense_oracle(K, M, max_dof=oracle_max_dof)
            ref_lams = w[6: 6 + k]
        else:
            ref_modes, _ = mixed_solve(K, M, k, warmstart=KrylovStart(20, 1), tol=1e-8,
                                       max_iter=500, seed=base_seed, grid=g, material=mat)
            ref_lams = ref_modes.lambdas
        ref_freqs = np.sqrt(np.clip(ref_lams, 0.0, None)) / (2.0 * np.pi)
        for cfg in configs:
            ws = cfg.warmstart
            if isinstance(ws, KrylovStart) and ws.count * ws.depth > n:
                # Krylov block cannot exceed the system size; mark the cell
                # infeasible instead of aborting the whole run.
                report.rows.append(BenchRow(
                    shape=shape, ndof=n, config=cfg.label,
                    median_iters={t: None for t in tols},
                    mean_residual=float("nan"), mel_mse=float("nan"),
                    mean_lambda=float("nan"), median_wall_time_s=float("nan"),
                    failures=seeds))
                continue
            iters = {t: [] for t in tols}
            walls, residuals, mels, lam_means = [], [], [], []
            failures = 0
            for seed in range(seeds):
                try:
                    modes, rep = mixed_solve(K, M, k, warmstart=cfg.warmstart,
                                             tol=min(tols), max_iter=max_iter,
                                             seed=base_seed + seed, grid=g, material=mat,
                                             guard=cfg.guard)
                except ConvergenceError as exc:
                    rep = exc.report
                    modes = None
                    failures += 1
                for t in tols:
                    iters[t].append(rep.iterations_to(t))
                walls.append(rep.wall_time_s)
                if modes is not None:
                    residuals.append(mean_residual_error(K, M, modes, norms=norms))
                    mels.append(freq_error(modes.freqs_hz, ref_freqs))
                    lam_means.append(float(np.mean(modes.lambdas)))
            med = {}
            for t in tols:
                vals = iters[t]
                med[t] = None if any(v is None for v in vals) else float(np.median(vals))
            report.rows.append(BenchRow(
                shape=shape, ndof=n, config=cfg.label, median_iters=med,
                mean_residual=float(np.mean(residuals)) if residuals else float("nan"),
                mel_mse=float(np.mean(mels)) if mels else float("nan"),
                mean_lambda=float(np.mean(lam_means)) if lam_means else float("nan"),
                median_wall_time_s=float(np.median(walls)) if walls else float("nan"),
                failures=failures))
    return report
