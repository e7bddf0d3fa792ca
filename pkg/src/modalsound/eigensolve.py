"""Warm-started block eigenextraction for the generalized pencil (K, M).

The solver stack: SVQB basis cleaning, Rayleigh-Ritz projection, a shifted
Krylov warm start, and a block LOBPCG loop whose search basis [X, R, P] is
re-orthonormalized with SVQB every iteration.  Convergence is judged with a
normalized residual that weighs ||K v - lambda M v|| against the pencil's
estimated 2-norms, so tolerances transfer across materials and grid sizes.

Free bodies carry six rigid modes at lambda ~ 0.  The block always keeps a
six-column buffer for them (analytic rigid vectors when the grid is known,
random columns otherwise); convergence is gated on the audible modes only
and the rigid modes are dropped from the returned set.
"""

from __future__ import annotations

import json
import time
import weakref
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import splu

from .errors import InputError, NumericalError

__all__ = [
    "SubspaceBasis", "svqb", "rayleigh_ritz",
    "matrix_norm_estimate", "pencil_norms", "residual_error", "residual_errors",
    "rigid_modes", "krylov_warmstart", "dense_oracle",
    "ModeSet", "SolveReport", "ConvergenceError",
    "lobpcg", "mixed_solve",
    "RandomStart", "KrylovStart", "FileStart",
    "mel", "freq_error", "mean_residual_error",
    "save_modes", "load_modes",
]

_POWER_ITERATIONS = 30
_RIGID_REL_TOL = 1e-6
_SVQB_DROP_TOL = 1e-12


class ConvergenceError(NumericalError):
    """Iteration budget exhausted; carries the partial SolveReport."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SubspaceBasis:
    """Column block with a flag recording whether it is M-orthonormal."""

    vectors: np.ndarray
    m_orthonormal: bool = False

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise InputError("basis must be a 2-D column block")
        self.vectors = v

    @property
    def shape(self):
        return self.vectors.shape


def _as_block(basis) -> np.ndarray:
    if isinstance(basis, SubspaceBasis):
        return basis.vectors
    out = np.asarray(basis, dtype=np.float64)
    if out.ndim != 2:
        raise InputError("basis must be a 2-D column block")
    return out


# ---------------------------------------------------------------------------
# SVQB orthonormalization


def svqb(basis, M, drop_tol: float = _SVQB_DROP_TOL) -> SubspaceBasis:
    """M-orthonormalize a block with the SVQB transform, revealing rank.

    Scales the Gram matrix to unit diagonal, eigendecomposes it, and drops
    directions whose scaled-Gram eigenvalue falls below drop_tol times the
    largest.  One pass reaches Gram-identity error near machine precision
    for reasonably conditioned input; severely ill-conditioned blocks may
    need a second pass.
    """
    S = _as_block(basis)
    if S.shape[1] == 0:
        raise InputError("empty basis")
    if not np.isfinite(S).all():
        raise NumericalError("non-finite entries in basis")
    G = S.T @ (M @ S)
    G = (G + G.T) / 2.0
    d = np.diag(G).copy()
    if not (d > 0).any():
        raise InputError("basis is entirely zero in the M inner product")
    keep0 = d > 0
    S = S[:, keep0]
    G = G[np.ix_(keep0, keep0)]
    dinv = 1.0 / np.sqrt(np.diag(G))
    Gs = G * dinv[:, None] * dinv[None, :]
    theta, Z = scipy.linalg.eigh(Gs)
    keep = theta > drop_tol * theta[-1]
    if not keep.any():
        raise NumericalError("SVQB dropped every direction")
    T = (dinv[:, None] * Z[:, keep]) / np.sqrt(theta[keep])[None, :]
    return SubspaceBasis(S @ T, m_orthonormal=True)


def _orthonormalize(S: np.ndarray, M, passes: int = 2) -> np.ndarray:
    """svqb with an extra pass when the Gram identity is not yet tight."""
    out = svqb(S, M).vectors
    for _ in range(passes - 1):
        G = out.T @ (M @ out)
        if np.abs(G - np.eye(G.shape[0])).max() < 1e-10:
            break
        out = svqb(out, M).vectors
    return out


# ---------------------------------------------------------------------------
# Rayleigh-Ritz


def rayleigh_ritz(basis, K, M):
    """Project the pencil onto span(basis) and solve the small eigenproblem.

    Returns (values ascending, full-space Ritz vectors).  The basis is
    SVQB-cleaned first unless flagged M-orthonormal, which reduces the
    projected problem to a standard symmetric eigensolve.
    """
    if isinstance(basis, SubspaceBasis) and basis.m_orthonormal:
        S = basis.vectors
    else:
        S = _orthonormalize(_as_block(basis), M)
    A = S.T @ (K @ S)
    if not np.isfinite(A).all():
        raise NumericalError("projected matrix has non-finite entries")
    asym = np.abs(A - A.T).max()
    scale = max(np.abs(A).max(), 1.0)
    if asym > 1e-8 * scale:
        raise NumericalError(f"projected matrix asymmetry {asym:.3e} exceeds tolerance")
    A = (A + A.T) / 2.0
    try:
        w, C = scipy.linalg.eigh(A)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalError(f"projected eigensolve failed: {exc}") from exc
    if w[0] < -1e-8 * max(abs(w[-1]), 1.0):
        raise NumericalError(f"projected pencil indefinite beyond tolerance: min ritz {w[0]:.3e}")
    return w, S @ C


# ---------------------------------------------------------------------------
# pencil norms and the normalized residual metric

_NORM_CACHE: dict = {}


def matrix_norm_estimate(A, iterations: int = _POWER_ITERATIONS) -> float:
    """Spectral-norm estimate by fixed-count power iteration (deterministic)."""
    rng = np.random.default_rng(0x5EEDF00D)
    v = rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = A @ v
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est


def _cached_norm(A) -> float:
    key = id(A)
    if key in _NORM_CACHE:
        return _NORM_CACHE[key]
    val = matrix_norm_estimate(A)
    try:
        weakref.finalize(A, _NORM_CACHE.pop, key, None)
    except TypeError:
        return val  # not weak-referenceable; skip caching rather than risk stale ids
    _NORM_CACHE[key] = val
    return val


def pencil_norms(K, M):
    """Cached (||K||_2, ||M||_2) estimates for the residual denominator."""
    return _cached_norm(K), _cached_norm(M)


def residual_errors(K, M, vectors: np.ndarray, lambdas: np.ndarray, norms=None) -> np.ndarray:
    """Normalized residuals ||Kv - lam Mv|| / ((||K|| + |lam| ||M||) ||v||) per column."""
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    lam = np.atleast_1d(np.asarray(lambdas, dtype=np.float64))
    if V.shape[1] != lam.size:
        raise InputError("vector block and eigenvalue count mismatch")
    nk, nm = norms if norms is not None else pencil_norms(K, M)
    R = K @ V - (M @ V) * lam[None, :]
    num = np.linalg.norm(R, axis=0)
    den = (nk + np.abs(lam) * nm) * np.linalg.norm(V, axis=0)
    den = np.where(den > 0, den, 1.0)
    return num / den


def residual_error(K, M, v: np.ndarray, lam: float, norms=None) -> float:
    """Scalar form of `residual_errors` for a single candidate pair."""
    return float(residual_errors(K, M, np.asarray(v, dtype=np.float64).reshape(-1, 1),
                                 np.asarray([lam]), norms=norms)[0])


# ---------------------------------------------------------------------------
# warm starts


def rigid_modes(grid) -> np.ndarray:
    """Analytic rigid-body null vectors (3 translations + 3 rotations), (3M, 6)."""
    pos = grid.vertex_positions()
    c = pos.mean(axis=0)
    rel = pos - c
    m = pos.shape[0]
    out = np.zeros((3 * m, 6))
    for a in range(3):
        out[a::3, a] = 1.0
    axes = np.eye(3)
    for a in range(3):
        rot = np.cross(np.broadcast_to(axes[a], rel.shape), rel)
        out[:, 3 + a] = rot.reshape(-1)
    return out


def krylov_warmstart(K, M, k: int, J: int, seed: int = 0, x0=None,
                     sigma_scale: float = 1e-4) -> SubspaceBasis:
    """Shift-inverted Krylov block {(K_sigma^-1 M)^j x_i, j=1..J, i=1..k}.

    The shift sigma = sigma_scale * ||K|| / ||M|| keeps the factorization
    nonsingular in the presence of rigid modes while still amplifying the
    low end of the spectrum.  The block is SVQB-cleaned before return.
    """
    n = K.shape[0]
    if k < 1 or J < 1:
        raise InputError("k and J must be positive")
    if k * J > n:
        raise InputError(f"Krylov block k*J={k * J} exceeds system size {n}")
    nk, nm = pencil_norms(K, M)
    if nm == 0:
        raise NumericalError("mass norm estimate is zero")
    sigma = sigma_scale * nk / nm
    lu = None
    for attempt in range(2):
        shifted = (K + sigma * M).tocsc()
        try:
            lu = splu(shifted)
            break
        except RuntimeError:
            sigma *= 100.0
    if lu is None:
        raise NumericalError("shifted stiffness factorization failed twice")
    if x0 is not None:
        X = np.asarray(x0, dtype=np.float64).reshape(n, -1)
        if X.shape[1] != k:
            raise InputError(f"x0 must provide {k} columns")
    else:
        X = np.random.default_rng(seed).standard_normal((n, k))
    cols = []
    Y = X
    for _ in range(J):
        Y = lu.solve(M @ Y)
        cols.append(Y)
    return svqb(np.hstack(cols), M)


def dense_oracle(K, M, max_dof: int = 600):
    """Full-spectrum reference by a direct dense generalized eigensolve.

    Guardrail: refuses systems above max_dof (3M <= 600 by default); this
    path exists to validate the iterative stack, not to replace it.
    """
    n = K.shape[0]
    if n > max_dof:
        raise InputError(f"dense oracle limited to {max_dof} DOFs, got {n}")
    Kd = np.asarray(K.todense()) if hasattr(K, "todense") else np.asarray(K)
    Md = np.asarray(M.todense()) if hasattr(M, "todense") else np.asarray(M)
    w, V = scipy.linalg.eigh(Kd, Md)
    return w, V


# ---------------------------------------------------------------------------
# mode sets


@dataclass
class ModeSet:
    """Converged eigenpairs plus the derived per-mode audio quantities.

    lambdas ascending; vectors M-orthonormal columns aligned with lambdas.
    When a material is attached, damping ratios follow the Rayleigh model:
    xi = (alpha + beta*lambda) / (2*omega), omega = sqrt(lambda), and the
    damped angular frequency is omega*sqrt(1 - xi^2) for xi < 1 (zero marks
    an overdamped, non-oscillatory mode).
    """

    lambdas: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    material: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64).reshape(-1)
        V = np.asarray(self.vectors, dtype=np.float64)
        res = np.asarray(self.residuals, dtype=np.float64).reshape(-1)
        if V.ndim != 2 or V.shape[1] != lam.size or res.size != lam.size:
            raise InputError("inconsistent mode set shapes")
        order = np.argsort(lam, kind="stable")
        self.lambdas = lam[order]
        self.vectors = V[:, order]
        self.residuals = res[order]

    @property
    def k(self) -> int:
        return self.lambdas.size

    @property
    def ndof(self) -> int:
        return self.vectors.shape[0]

    @property
    def omega(self) -> np.ndarray:
        return np.sqrt(np.clip(self.lambdas, 0.0, None))

    @property
    def freqs_hz(self) -> np.ndarray:
        return self.omega / (2.0 * np.pi)

    @property
    def xi(self) -> np.ndarray:
        if self.material is None:
            raise InputError("damping ratios require an attached material")
        om = self.omega
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.material.alpha + self.material.beta * self.lambdas) / (2.0 * om)
        return np.where(om > 0, out, np.inf)

    @property
    def overdamped(self) -> np.ndarray:
        return self.xi >= 1.0

    @property
    def omega_damped(self) -> np.ndarray:
        xi = self.xi
        return np.where(xi < 1.0, self.omega * np.sqrt(np.clip(1.0 - xi ** 2, 0.0, None)), 0.0)


@dataclass
class SolveReport:
    """Iteration diary of one eigensolve.

    iterations counts residual evaluations including the initial basis, so
    residual_history has exactly `iterations` entries and an already-converged
    start reports 1.  warm_start records the provenance of the initial block.
    """

    iterations: int = 0
    wall_time_s: float = 0.0
    residual_history: list = field(default_factory=list)
    warm_start: str = "none"
    converged: bool = False
    block_size: int = 0

    def iterations_to(self, tol: float):
        """Index of the first evaluation at or below tol (None if never)."""
        for i, r in enumerate(self.residual_history):
            if r < tol:
                return i
        return None


# ---------------------------------------------------------------------------
# LOBPCG


def _rigid_split(lam: np.ndarray):
    """Indices of rigid (near-zero) and audible eigenvalues in a sorted block."""
    if lam.size == 0:
        return np.array([], dtype=int), np.array([], dtype=int)
    scale = max(float(lam[-1]), 0.0)
    thresh = _RIGID_REL_TOL * scale
    rigid = np.nonzero(lam < thresh)[0]
    audible = np.nonzero(lam >= thresh)[0]
    return rigid, audible


def lobpcg(K, M, X0, tol: float = 1e-6, max_iter: int = 200, k: int = None,
           rigid_basis=None, seed: int = 0, material=None,
           preconditioner: str = "none"):
    """Block LOBPCG for the k lowest audible modes of K v = lambda M v.

    X0 supplies k columns (extra columns raise the block size).  Six buffer
    columns are appended for the rigid nullspace: the analytic rigid_basis
    when provided, seeded random columns otherwise.  Each iteration performs
    Rayleigh-Ritz over the SVQB-cleaned [X, R, P] block; residual breakdowns
    restart with fresh random directions at most twice.

    Returns (ModeSet, SolveReport).  Raises ConvergenceError (report
    attached) when max_iter evaluations pass without meeting tol.
    """
    X = _as_block(X0)
    n = K.shape[0]
    if X.shape[0] != n:
        raise InputError("X0 shape does not match the system")
    if k is None:
        k = X.shape[1]
    if k < 1:
        raise InputError("k must be positive")
    if k + 6 > n:
        raise InputError(f"k={k} too large for a {n}-DOF free body (needs k+6 <= n)")
    rng = np.random.default_rng(np.uint64(seed) ^ np.uint64(0xB10C))
    norms = pencil_norms(K, M)
    if preconditioner not in ("none", "jacobi"):
        raise InputError(f"unknown preconditioner {preconditioner!r}")
    jacobi_d = None
    if preconditioner == "jacobi":
        jacobi_d = np.asarray(K.diagonal(), dtype=np.float64)
        jacobi_d = np.where(np.abs(jacobi_d) > 0, jacobi_d, 1.0)

    if rigid_basis is not None:
        buffer_cols = _as_block(rigid_basis)
    else:
        buffer_cols = rng.standard_normal((n, 6))
    block = np.hstack([X, buffer_cols])

    t0 = time.perf_counter()
    report = SolveReport(warm_start="X0", block_size=block.shape[1])
    history: list = []
    restarts = 0
    enlargements = 0

    Q = _orthonormalize(block, M)
    lam, Xc = rayleigh_ritz(SubspaceBasis(Q, True), K, M)
    b = Xc.shape[1]
    lam = lam[:b]
    X = Xc
    P = None

    while True:
        res = residual_errors(K, M, X, lam, norms=norms)
        rigid_idx, audible_idx = _rigid_split(lam)
        gate = audible_idx[:k]
        gate_res = res[gate] if gate.size else res
        history.append(float(gate_res.max()) if gate_res.size else float("inf"))
        converged = gate.size >= k and bool((res[gate] < tol).all())
        if converged:
            if audible_idx.size >= k:
                break
        if len(history) > max_iter:
            report.iterations = len(history)
            report.residual_history = history
            report.wall_time_s = time.perf_counter() - t0
            report.converged = False
            raise ConvergenceError(
                f"no convergence to tol={tol:g} within {max_iter} iterations "
                f"(last residual {history[-1]:.3e})", report=report)

        R = K @ X - (M @ X) * lam[None, :]
        W = R / jacobi_d[:, None] if jacobi_d is not None else R
        parts = [X, W] if P is None else [X, W, P]
        S = np.hstack(parts)
        try:
            Q = _orthonormalize(S, M)
            lam_new, Xc = rayleigh_ritz(SubspaceBasis(Q, True), K, M)
        except NumericalError:
            if restarts >= 2:
                report.iterations = len(history)
                report.residual_history = history
                report.wall_time_s = time.perf_counter() - t0
                report.converged = False
                raise
            restarts += 1
            fresh = rng.standard_normal((n, X.shape[1]))
            Q = _orthonormalize(np.hstack([X, fresh]), M)
            lam_new, Xc = rayleigh_ritz(SubspaceBasis(Q, True), K, M)
        b_eff = min(X.shape[1], Xc.shape[1])
        X_new = Xc[:, :b_eff]
        lam = lam_new[:b_eff]
        # implicit conjugate direction: strip the old-X component of the update
        P = X_new - X[:, :] @ (X.T @ (M @ X_new)) if X.shape[1] <= X_new.shape[0] else None
        X = X_new
        if X.shape[1] < k + 6 and enlargements < 2:
            # rank collapse in SVQB: replenish the block with fresh directions
            enlargements += 1
            pad = rng.standard_normal((n, k + 6 - X.shape[1]))
            Q = _orthonormalize(np.hstack([X, pad]), M)
            lam, X = rayleigh_ritz(SubspaceBasis(Q, True), K, M)
            lam = lam[: X.shape[1]]
            P = None

    rigid_idx, audible_idx = _rigid_split(lam)
    take = audible_idx[:k]
    if take.size < k:
        report.iterations = len(history)
        report.residual_history = history
        report.wall_time_s = time.perf_counter() - t0
        report.converged = False
        raise NumericalError(
            f"only {take.size} audible modes available in the converged block "
            f"(requested {k}); enlarge the block or the system")
    modes = ModeSet(lambdas=lam[take], vectors=X[:, take], residuals=res[take],
                    material=material)
    report.iterations = len(history)
    report.residual_history = history
    report.wall_time_s = time.perf_counter() - t0
    report.converged = True
    return modes, report


# ---------------------------------------------------------------------------
# mixed solve with pluggable warm starts


@dataclass(frozen=True)
class RandomStart:
    """Seeded random initial block (the plain LOBPCG baseline)."""


@dataclass(frozen=True)
class KrylovStart:
    """Shift-inverted Krylov warm start with `count` vectors of depth `depth`."""

    count: int = 20
    depth: int = 1


@dataclass(frozen=True)
class FileStart:
    """Initial subspace read from a .modes exchange file."""

    path: str


def mixed_solve(K, M, k: int, warmstart=RandomStart(), tol: float = 1e-4,
                max_iter: int = 200, seed: int = 0, grid=None, material=None,
                preconditioner: str = "none", guard: int = None):
    """Warm start -> SVQB -> Rayleigh-Ritz -> LOBPCG refinement.

    The provider subspace is augmented with the raw random seed block before
    the projection, which protects against a warm start that misses part of
    the low subspace.  For RandomStart the projection is a pure rotation of
    the random block, so the path is identical to plain LOBPCG.  The grid,
    when given, contributes analytic rigid-mode buffer vectors.

    guard extra columns ride along in the block without being gated or
    reported; they keep mode k converging when eigenvalues cluster right at
    the block boundary.  Defaults to max(2, k//4) capped at 8 and by the
    system size.
    """
    n = K.shape[0]
    if guard is None:
        guard = min(8, max(2, k // 4))
    guard = max(0, min(guard, n - 6 - k))
    width = k + guard
    rng = np.random.default_rng(seed)
    if isinstance(warmstart, RandomStart):
        raw = rng.standard_normal((n, width))
        candidates = raw
        tag = "random (plain lobpcg path)"
    elif isinstance(warmstart, KrylovStart):
        raw = rng.standard_normal((n, warmstart.count))
        kry = krylov_warmstart(K, M, warmstart.count, warmstart.depth, x0=raw)
        candidates = np.hstack([kry.vectors, raw])
        tag = f"krylov(k={warmstart.count},J={warmstart.depth})"
    elif isinstance(warmstart, FileStart):
        prior = load_modes(warmstart.path)
        if prior.ndof != n:
            raise InputError(
                f"warm-start file has {prior.ndof} DOFs, system has {n}")
        raw = rng.standard_normal((n, width))
        candidates = np.hstack([prior.vectors, raw])
        tag = f"external:{Path(warmstart.path).name}"
    else:
        raise InputError(f"unknown warm start {warmstart!r}")

    vals, ritz = rayleigh_ritz(svqb(candidates, M), K, M)
    X0 = ritz[:, : min(width, ritz.shape[1])]
    if X0.shape[1] < width:
        X0 = np.hstack([X0, rng.standard_normal((n, width - X0.shape[1]))])
    rigid = rigid_modes(grid) if grid is not None else None
    modes, report = lobpcg(K, M, X0, tol=tol, max_iter=max_iter, k=k,
                           rigid_basis=rigid, seed=seed, material=material,
                           preconditioner=preconditioner)
    report.warm_start = tag
    return modes, report


# ---------------------------------------------------------------------------
# Mel-scale frequency metrics


def mel(f):
    """Mel scale value 2595*log10(1 + f/700) (f in Hz)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


_MEL_LO = float(mel(20.0))
_MEL_HI = float(mel(20000.0))


def freq_error(pred_hz, truth_hz) -> float:
    """Mean squared Mel-normalized frequency error over paired modes.

    Frequencies are clamped to the audible band [20, 20000] Hz; each term is
    ((mel(pred) - mel(truth)) / (mel(20000) - mel(20)))^2.
    """
    p = np.clip(np.asarray(pred_hz, dtype=np.float64), 20.0, 20000.0)
    t = np.clip(np.asarray(truth_hz, dtype=np.float64), 20.0, 20000.0)
    if p.shape != t.shape:
        raise InputError("prediction/truth length mismatch")
    d = (mel(p) - mel(t)) / (_MEL_HI - _MEL_LO)
    return float(np.mean(d ** 2))


def mean_residual_error(K, M, modes: ModeSet, norms=None) -> float:
    """Mean normalized residual over a mode set (reporting metric)."""
    return float(np.mean(residual_errors(K, M, modes.vectors, modes.lambdas, norms=norms)))


# ---------------------------------------------------------------------------
# .modes container: one-line JSON header, newline, then little-endian f64
# lambdas (k), vectors (ndof*k, column-major), residuals (k)


def save_modes(modes: ModeSet, path, h: float = None, seed=None, solver: str = None,
               tol: float = None) -> None:
    mat = modes.material.as_dict() if modes.material is not None else None
    header = {
        "k": int(modes.k),
        "ndof": int(modes.ndof),
        "material": mat,
        "h": h if h is None else float(h),
        "seed": seed,
        "solver": solver,
        "tol": tol if tol is None else float(tol),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(modes.lambdas, dtype="<f8").tobytes())
        fh.write(np.asfortranarray(modes.vectors, dtype="<f8").tobytes(order="F"))
        fh.write(np.ascontiguousarray(modes.residuals, dtype="<f8").tobytes())


def load_modes(path) -> ModeSet:
    from .hexfem import Material

    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InputError("truncated .modes: missing header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    k, ndof = int(header["k"]), int(header["ndof"])
    body = memoryview(raw)[nl + 1:]
    need = 8 * (k + ndof * k + k)
    if len(body) != need:
        raise InputError("truncated .modes: payload size mismatch")
    lam = np.frombuffer(body[: 8 * k], dtype="<f8").copy()
    vec = np.frombuffer(body[8 * k: 8 * k + 8 * ndof * k], dtype="<f8").reshape(
        (ndof, k), order="F").copy()
    res = np.frombuffer(body[8 * k + 8 * ndof * k:], dtype="<f8").copy()
    mat = Material(**header["material"]) if header.get("material") else None
    meta = {key: header.get(key) for key in ("h", "seed", "solver", "tol")}
    return ModeSet(lambdas=lam, vectors=vec, residuals=res, material=mat, meta=meta)
