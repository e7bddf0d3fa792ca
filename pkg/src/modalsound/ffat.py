"""Far-field acoustic transfer maps: fit, scale, query, and serialize.

A map compresses one mode's exterior field to a 64x32 image of the monopole
amplitude psi(theta, phi), so |p(x)| ~ psi(direction(x)) / r.  The image is
stored Frobenius-normalized with the norm split off as a natural log
(log_norm), which keeps quiet and loud modes on the same numeric footing.

Angular convention (pixel centers, no sample on the poles or the seam):
theta_j = (j + 0.5) * 2*pi / 64 (azimuth, wraps), phi_i = (i + 0.5) * pi / 32
(polar angle from +z).  The in-memory grid is indexed grid[theta_j, phi_i].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = [
    "N_THETA", "N_PHI",
    "SamplePattern", "sample_pattern", "FFATMap", "fit_ffat", "scale_ffat",
    "query", "mel_normalize_frequency",
    "save_ffat", "load_ffat", "ffat_to_png",
]

N_THETA = 64
N_PHI = 32


def _directions() -> np.ndarray:
    """(64, 32, 3) unit direction lattice at pixel centers."""
    theta = (np.arange(N_THETA) + 0.5) * (2.0 * np.pi / N_THETA)
    phi = (np.arange(N_PHI) + 0.5) * (np.pi / N_PHI)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    out = np.empty((N_THETA, N_PHI, 3))
    out[:, :, 0] = ct[:, None] * sp[None, :]
    out[:, :, 1] = st[:, None] * sp[None, :]
    out[:, :, 2] = cp[None, :]
    return out


@dataclass(frozen=True)
class SamplePattern:
    """Radial shells of the angular lattice where the field gets sampled."""

    center: np.ndarray
    a: float
    radii: np.ndarray      # (S,), ascending
    directions: np.ndarray  # (64, 32, 3)

    def points(self) -> np.ndarray:
        """(S, 64, 32, 3) world positions, radius-major."""
        return self.center + self.radii[:, None, None, None] * self.directions[None]


def sample_pattern(center, a: float, mode: str = "far") -> SamplePattern:
    """Build the sampling shells around the object.

    a is the longest side of the object's bounding box.  Radii are (3a)^i
    for the far range and (1.25a)^i for the near range, i = 1..3.  The
    powers only grow (and clear the body) when a is expressed in a frame
    where the base exceeds 1, so fitting is done on a size-normalized body
    and the map is rescaled afterwards.
    """
    if not (a > 0):
        raise InputError(f"bounding-box size must be positive, got {a}")
    if mode == "far":
        base = 3.0 * a
    elif mode == "near":
        base = 1.25 * a
    else:
        raise InputError(f"mode must be 'far' or 'near', got {mode!r}")
    if base <= 1.0:
        raise InputError(
            f"shell radii ({base:g})^i are not strictly increasing; fit in a "
            f"frame with a > {1.0 / (base / a):g} (e.g. normalize the body to "
            f"unit size and rescale the map afterwards)")
    radii = np.array([base ** i for i in (1, 2, 3)])
    return SamplePattern(center=np.asarray(center, dtype=np.float64).reshape(3),
                         a=float(a), radii=radii, directions=_directions())


@dataclass(frozen=True)
class FFATMap:
    """Normalized transfer image with its split-off scale.

    grid has unit Frobenius norm; the physical amplitude for direction d and
    distance r is exp(log_norm) * grid[d] / r.
    """

    grid: np.ndarray   # (64, 32), non-negative, ||grid||_F == 1
    log_norm: float
    center: np.ndarray
    a: float
    radii: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        if g.shape != (N_THETA, N_PHI):
            raise InputError(f"grid must be ({N_THETA}, {N_PHI})")
        if (g < 0).any():
            raise InputError("grid values must be non-negative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=np.float64).reshape(-1))

    @property
    def amplitude_grid(self) -> np.ndarray:
        """Un-normalized psi image."""
        return np.exp(self.log_norm) * self.grid


def fit_ffat(pressures: np.ndarray, pattern: SamplePattern) -> FFATMap:
    """Per-direction least-squares fit of psi in |p| ~ psi / r.

    Minimizing sum_i (psi/R_i - |p_i|)^2 over the shells gives
    psi = (sum_i |p_i| / R_i) / (sum_i 1/R_i^2).

    pressures : (S, 64, 32) complex or real field samples on pattern.points().
    """
    p = np.abs(np.asarray(pressures))
    S = pattern.radii.size
    if p.shape != (S, N_THETA, N_PHI):
        raise InputError(f"expected pressures of shape {(S, N_THETA, N_PHI)}, got {p.shape}")
    inv_r = 1.0 / pattern.radii
    psi = np.tensordot(inv_r, p, axes=(0, 0)) / np.sum(inv_r ** 2)
    norm = float(np.linalg.norm(psi))
    if norm == 0.0 or not np.isfinite(norm):
        raise InputError("transfer field is identically zero; log-scale is undefined")
    return FFATMap(grid=psi / norm, log_norm=float(np.log(norm)),
                   center=pattern.center, a=pattern.a, radii=pattern.radii)


def scale_ffat(m: FFATMap, gamma: float) -> FFATMap:
    """Uniform object rescaling law: amplitudes scale by gamma^(-5/2).

    Exact in log space: log_norm += -2.5*ln(gamma); the normalized image is
    unchanged while the geometric metadata (a, radii) scales by gamma.
    """
    if not (gamma > 0):
        raise InputError(f"gamma must be positive, got {gamma}")
    return replace(m, log_norm=m.log_norm - 2.5 * float(np.log(gamma)),
                   a=m.a * gamma, radii=m.radii * gamma, center=m.center.copy())


def query(m: FFATMap, x) -> float:
    """Listener amplitude |p| at world position x via bilinear interpolation.

    Azimuth wraps across the theta seam; the polar coordinate clamps at the
    first/last pixel-center rings (no interpolation across the poles).
    """
    rel = np.asarray(x, dtype=np.float64).reshape(3) - m.center
    r = float(np.linalg.norm(rel))
    if r <= 0.0:
        raise InputError("query point coincides with the map center")
    theta = float(np.arctan2(rel[1], rel[0])) % (2.0 * np.pi)
    phi = float(np.arccos(np.clip(rel[2] / r, -1.0, 1.0)))
    t = theta / (2.0 * np.pi) * N_THETA - 0.5
    u = np.clip(phi / np.pi * N_PHI - 0.5, 0.0, N_PHI - 1.0)
    t0 = int(np.floor(t)) % N_THETA
    t1 = (t0 + 1) % N_THETA
    ft = (t - np.floor(t)) % 1.0
    u0 = min(int(np.floor(u)), N_PHI - 2) if u < N_PHI - 1 else N_PHI - 2
    fu = u - u0
    g = m.grid
    interp = ((1 - ft) * (1 - fu) * g[t0, u0] + ft * (1 - fu) * g[t1, u0]
              + (1 - ft) * fu * g[t0, u0 + 1] + ft * fu * g[t1, u0 + 1])
    return float(np.exp(m.log_norm) * interp / r)


def mel_normalize_frequency(f_hz: float) -> float:
    """Map a frequency to [0, 1] on the Mel scale over the audible band.

    (mel(f) - mel(20)) / (mel(20000) - mel(20)) with f clamped to
    [20, 20000] Hz; mel(f) = 2595*log10(1 + f/700).
    """
    from .eigensolve import mel, _MEL_LO, _MEL_HI

    f = float(np.clip(f_hz, 20.0, 20000.0))
    return float((mel(f) - _MEL_LO) / (_MEL_HI - _MEL_LO))


# ---------------------------------------------------------------------------
# .ffat container: one-line JSON header, newline, little-endian f32 image in
# row-major phi-then-theta order (32 rows of 64)


def save_ffat(m: FFATMap, path) -> None:
    header = {
        "res": [N_THETA, N_PHI],
        "a": float(m.a),
        "center": [float(v) for v in m.center],
        "radii": [float(v) for v in m.radii],
        "log_norm": float(m.log_norm),
        "pixel_convention": "centers",
    }
    payload = np.ascontiguousarray(m.grid.T, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_ffat(path) -> FFATMap:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InputError("truncated .ffat: missing header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    if list(header["res"]) != [N_THETA, N_PHI]:
        raise InputError(f"unsupported map resolution {header['res']}")
    body = raw[nl + 1:]
    if len(body) != 4 * N_THETA * N_PHI:
        raise InputError("truncated .ffat: payload size mismatch")
    img = np.frombuffer(body, dtype="<f4").reshape(N_PHI, N_THETA).astype(np.float64).T
    # restore the unit-norm invariant lost to f32 storage (folds into log_norm)
    norm = float(np.linalg.norm(img))
    if norm == 0.0:
        raise InputError(".ffat image is identically zero")
    return FFATMap(grid=img / norm, log_norm=float(header["log_norm"]) + float(np.log(norm)),
                   center=np.asarray(header["center"], dtype=np.float64),
                   a=float(header["a"]), radii=np.asarray(header["radii"], dtype=np.float64))


def ffat_to_png(m: FFATMap, path) -> None:
    """Max-normalized grayscale export (32 rows tall, 64 wide)."""
    from PIL import Image

    img = m.grid.T
    peak = img.max()
    scaled = (img / peak * 255.0).round().astype(np.uint8) if peak > 0 else \
        np.zeros_like(img, dtype=np.uint8)
    Image.fromarray(scaled, mode="L").save(path)
