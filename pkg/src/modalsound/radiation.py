"""Exterior Helmholtz radiation from the voxel surface by collocation BEM.

Every exposed voxel face becomes one constant square panel collocated at its
center.  With the free-space kernel G = exp(i*kappa*r) / (4*pi*r) and the
harmonic convention exp(+i*omega*t), a surface vibrating with outward normal
displacement d_n imposes the Neumann data dp/dn = rho_air * omega^2 * d_n.

The surface equation solved is (I/2 + K) p = V q and the exterior field is
recovered as p(x) = V q - K p, with the double-layer kernel differentiated
along the body-inward normal.  That orientation makes the two formulas a
consistent exterior pair; the resulting pressures carry a global sign flip
relative to the outward-normal convention, which is irrelevant downstream
because the transfer maps store magnitudes only.

Off-diagonal entries use one-point quadrature (panel area times the kernel
at the center).  The singular V self-term integrates 1/(4*pi*r) analytically
over the square, h*ln(1+sqrt(2))/pi, plus the first-order wave correction
i*kappa*h^2/(4*pi); the K self-term vanishes on flat panels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError, ResolutionError
from .voxgrid import FACE_CORNERS, FACE_DIRECTIONS, VoxelGrid, surface_exposure

__all__ = [
    "HelmholtzContext", "BemSurface", "build_surface", "neumann_from_mode",
    "CbieSystem", "assemble_cbie", "solve_surface_pressure", "evaluate_potential",
    "save_bemout", "load_bemout",
    "SOUND_SPEED_DEFAULT", "AIR_DENSITY_DEFAULT",
]

SOUND_SPEED_DEFAULT = 343.0     # m/s
AIR_DENSITY_DEFAULT = 1.204     # kg/m^3


@dataclass(frozen=True)
class HelmholtzContext:
    """Angular frequency plus air constants; kappa = omega / c."""

    omega: float
    c: float = SOUND_SPEED_DEFAULT
    rho_air: float = AIR_DENSITY_DEFAULT

    def __post_init__(self):
        if not (self.omega > 0):
            raise InputError(f"omega must be positive, got {self.omega}")
        if not (self.c > 0 and self.rho_air > 0):
            raise InputError("air constants must be positive")

    @property
    def kappa(self) -> float:
        return self.omega / self.c


@dataclass
class BemSurface:
    """Flat square panels over the exposed voxel faces.

    normals point into the exterior (away from the occupied cell); each
    panel keeps the ids of the 4 grid vertices on its face so modal
    displacements can be averaged onto it.
    """

    centers: np.ndarray          # (P, 3)
    normals: np.ndarray          # (P, 3), unit, outward
    face_vertex_ids: np.ndarray  # (P, 4) indices into the grid vertex set
    h: float
    n_grid_vertices: int

    @property
    def n_panels(self) -> int:
        return self.centers.shape[0]

    @property
    def areas(self) -> np.ndarray:
        return np.full(self.n_panels, self.h * self.h)


def build_surface(g: VoxelGrid, exposure: np.ndarray = None) -> BemSurface:
    """Collect exposed faces into a panel list (voxel-major, face-minor order)."""
    if exposure is None:
        exposure = surface_exposure(g)
    exposure = np.asarray(exposure, dtype=bool)
    if exposure.shape != (g.n_voxels, 6):
        raise InputError("exposure array shape mismatch")
    vox_idx, face_idx = np.nonzero(exposure)
    if vox_idx.size == 0:
        raise InputError("grid has no exposed faces")
    centers = (g.origin + (g.occupied[vox_idx] + 0.5) * g.h
               + 0.5 * g.h * FACE_DIRECTIONS[face_idx])
    normals = FACE_DIRECTIONS[face_idx].astype(np.float64)
    fvids = g.voxel_corner_ids[vox_idx[:, None], FACE_CORNERS[face_idx]]
    return BemSurface(centers=centers, normals=normals, face_vertex_ids=fvids,
                      h=g.h, n_grid_vertices=g.n_vertices)


def neumann_from_mode(surface: BemSurface, displacement: np.ndarray,
                      ctx: HelmholtzContext) -> np.ndarray:
    """Neumann data rho_air * omega^2 * d_n per panel.

    displacement is the (3M,) vertex field of one mode shape; d_n averages
    the panel's 4 corner displacements and projects on the outward normal.
    """
    disp = np.asarray(displacement, dtype=np.float64)
    if disp.shape != (3 * surface.n_grid_vertices,):
        raise InputError(
            f"expected displacement of length {3 * surface.n_grid_vertices}, got {disp.shape}")
    per_vertex = disp.reshape(-1, 3)
    face_mean = per_vertex[surface.face_vertex_ids].mean(axis=1)  # (P, 3)
    d_n = np.einsum("pi,pi->p", face_mean, surface.normals)
    return (ctx.rho_air * ctx.omega ** 2 * d_n).astype(np.complex128)


# ---------------------------------------------------------------------------
# kernels


def _pairwise_r(x: np.ndarray, y: np.ndarray):
    d = x[:, None, :] - y[None, :, :]
    return d, np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def _single_layer(r: np.ndarray, kappa: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(1j * kappa * r) / (4.0 * np.pi * r)


def _double_layer_inward(d: np.ndarray, r: np.ndarray, normals_y: np.ndarray,
                         kappa: float) -> np.ndarray:
    # d = x - y, r = |d|; kernel dG/d(nu)(y) with nu = -n (body-inward normal):
    # dG/dn_out = e^{i k r} (i k r - 1) / (4 pi r^2) * ((y - x) . n_out) / r,
    # negated for the inward orientation.
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = np.exp(1j * kappa * r) * (1j * kappa * r - 1.0) / (4.0 * np.pi * r ** 2)
        cosine = -np.einsum("ijk,jk->ij", d, normals_y) / r  # ((y-x).n)/r
    return -radial * cosine


_SELF_TERM_STATIC = np.log(1.0 + np.sqrt(2.0)) / np.pi  # times h


@dataclass
class CbieSystem:
    """Dense (V, K) operator pair for one surface at one frequency."""

    V: np.ndarray
    K: np.ndarray
    ctx: HelmholtzContext
    surface: BemSurface

    @cached_property
    def _lu(self):
        lhs = 0.5 * np.eye(self.surface.n_panels) + self.K
        lu, piv = scipy.linalg.lu_factor(lhs)
        # cheap post-factorization condition estimate flags fictitious frequencies
        anorm = np.linalg.norm(lhs, 1)
        rcond, info = scipy.linalg.lapack.zgecon(lu, anorm)
        if info != 0 or not np.isfinite(rcond) or rcond < 1e-12:
            raise NumericalError(
                f"CBIE system is near-singular (rcond={rcond:.2e}); this is "
                "characteristic of a fictitious frequency - perturb omega slightly")
        return lu, piv


def assemble_cbie(surface: BemSurface, ctx: HelmholtzContext) -> CbieSystem:
    """Assemble dense single/double-layer collocation matrices.

    Enforces kappa*h < 1: one-point panel quadrature needs several panels
    per wavelength, so finer grids (or lower frequencies) are required past
    that bound.
    """
    kappa = ctx.kappa
    if kappa * surface.h >= 1.0:
        raise ResolutionError(
            f"kappa*h = {kappa * surface.h:.3f} >= 1: panel size {surface.h:.4g} m "
            f"cannot resolve the wavelength at omega={ctx.omega:.4g} rad/s; "
            "use a finer voxelization or a lower frequency")
    x = surface.centers
    d, r = _pairwise_r(x, x)
    area = surface.h ** 2
    np.fill_diagonal(r, 1.0)  # placeholder; diagonals overwritten below
    V = _single_layer(r, kappa) * area
    Kd = _double_layer_inward(d, r, surface.normals, kappa) * area
    vd = surface.h * _SELF_TERM_STATIC + 1j * kappa * area / (4.0 * np.pi)
    np.fill_diagonal(V, vd)
    np.fill_diagonal(Kd, 0.0)
    return CbieSystem(V=V, K=Kd, ctx=ctx, surface=surface)


def solve_surface_pressure(system: CbieSystem, neumann: np.ndarray) -> np.ndarray:
    """Direct dense solve of (I/2 + K) p = V q; verifies the residual."""
    q = np.asarray(neumann, dtype=np.complex128)
    if q.shape != (system.surface.n_panels,):
        raise InputError("neumann data length does not match the panel count")
    rhs = system.V @ q
    lu, piv = system._lu
    p = scipy.linalg.lu_solve((lu, piv), rhs)
    lhs = 0.5 * p + system.K @ p
    rhs_norm = float(np.linalg.norm(rhs))
    resid = float(np.linalg.norm(lhs - rhs)) / (rhs_norm if rhs_norm > 0 else 1.0)
    if resid > 1e-8:
        raise NumericalError(f"surface solve residual {resid:.3e} exceeds 1e-8")
    return p


def evaluate_potential(surface: BemSurface, p_surf: np.ndarray, dn_p: np.ndarray,
                       points: np.ndarray, ctx: HelmholtzContext) -> np.ndarray:
    """Exterior pressures p(x) = V q - K p at strictly exterior points.

    Points closer than one panel size h to any panel center are rejected:
    one-point quadrature breaks down in the near field.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    p_surf = np.asarray(p_surf, dtype=np.complex128)
    dn_p = np.asarray(dn_p, dtype=np.complex128)
    if p_surf.shape != (surface.n_panels,) or dn_p.shape != (surface.n_panels,):
        raise InputError("surface field lengths do not match the panel count")
    d, r = _pairwise_r(pts, surface.centers)
    rmin = r.min(axis=1)
    if (rmin <= surface.h).any():
        bad = int(np.argmin(rmin))
        raise InputError(
            f"evaluation point {bad} is {rmin[bad]:.4g} m from the surface; "
            f"points must be strictly exterior with clearance > h = {surface.h:.4g} m")
    area = surface.h ** 2
    V = _single_layer(r, ctx.kappa) * area
    Kd = _double_layer_inward(d, r, surface.normals, ctx.kappa) * area
    return V @ dn_p - Kd @ p_surf


# ---------------------------------------------------------------------------
# .bemout container: one-line JSON header, newline, interleaved complex f64
# (surface pressure then Neumann data, each re/im interleaved)


def save_bemout(path, ctx: HelmholtzContext, p_surf: np.ndarray, dn_p: np.ndarray) -> None:
    p = np.asarray(p_surf, dtype="<c16")
    q = np.asarray(dn_p, dtype="<c16")
    if p.shape != q.shape or p.ndim != 1:
        raise InputError("pressure/neumann arrays must be equal-length vectors")
    header = {"omega": float(ctx.omega), "kappa": float(ctx.kappa), "nelem": int(p.size)}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(p).tobytes())
        fh.write(np.ascontiguousarray(q).tobytes())


def load_bemout(path):
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InputError("truncated .bemout: missing header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    n = int(header["nelem"])
    body = memoryview(raw)[nl + 1:]
    if len(body) != 2 * 16 * n:
        raise InputError("truncated .bemout: payload size mismatch")
    p = np.frombuffer(body[: 16 * n], dtype="<c16").copy()
    q = np.frombuffer(body[16 * n:], dtype="<c16").copy()
    return header, p, q
