"""Trilinear hexahedral finite elements on voxel grids.

Each occupied cell is one 8-node brick of side h with 3 displacement DOFs
per node (global DOF of vertex v, axis a is 3*v + a).  Element stiffness
uses the isotropic Hooke tensor and full 2x2x2 Gauss quadrature; the mass
matrix is consistent (not lumped).  Both integrands are at most quadratic
per axis, so the quadrature is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .errors import InputError
from .voxgrid import VoxelGrid

__all__ = [
    "Material",
    "load_material",
    "builtin_materials",
    "ElementMatrices",
    "element_matrices",
    "AssembledSystem",
    "assemble",
    "rescale_eigendata",
    "save_spmat",
    "load_spmat",
]


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material with Rayleigh damping C = alpha*M + beta*K.

    E in Pa, rho in kg/m^3, nu dimensionless in (0, 0.5), alpha in 1/s, beta in s.
    """

    name: str
    E: float
    nu: float
    rho: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.E > 0):
            raise InputError(f"E must be positive, got {self.E}")
        if not (0.0 < self.nu < 0.5):
            raise InputError(f"nu must lie in (0, 0.5), got {self.nu}")
        if not (self.rho > 0):
            raise InputError(f"rho must be positive, got {self.rho}")
        if self.alpha < 0 or self.beta < 0:
            raise InputError("damping coefficients must be non-negative")

    def as_dict(self) -> dict:
        return {"name": self.name, "E": self.E, "nu": self.nu,
                "rho": self.rho, "alpha": self.alpha, "beta": self.beta}


def builtin_materials() -> dict:
    """Named material table shipped with the package."""
    text = resources.files("modalsound").joinpath("data/materials.json").read_text()
    table = json.loads(text)
    return {name: Material(**params) for name, params in table.items()}


def load_material(spec) -> Material:
    """Resolve a material from a table name, a JSON file path, or a dict."""
    if isinstance(spec, Material):
        return spec
    if isinstance(spec, dict):
        return Material(**spec)
    spec = str(spec)
    table = builtin_materials()
    if spec in table:
        return table[spec]
    path = Path(spec)
    if path.exists():
        data = json.loads(path.read_text())
        return Material(**data)
    raise InputError(
        f"unknown material {spec!r}: not in table {sorted(table)} and no such file")


# ---------------------------------------------------------------------------
# element matrices


@dataclass(frozen=True)
class ElementMatrices:
    """24x24 stiffness/mass pair for one voxel, canonical corner order."""

    Ke: np.ndarray
    Me: np.ndarray
    material: Material
    h: float


def _hooke(E: float, nu: float) -> np.ndarray:
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] += 2.0 * mu
    D[3:, 3:] = np.eye(3) * mu
    return D


# natural-coordinate signs per corner, canonical order (x fastest)
_SIGNS = np.array([[-1, -1, -1], [1, -1, -1], [-1, 1, -1], [1, 1, -1],
                   [-1, -1, 1], [1, -1, 1], [-1, 1, 1], [1, 1, 1]], dtype=np.float64)


def element_matrices(material: Material, h: float) -> ElementMatrices:
    """Integrate Ke and Me on the cube [0,h]^3 with 2x2x2 Gauss points.

    Ke is symmetric PSD with a six-dimensional rigid-body null space; Me is
    symmetric positive definite with per-axis total mass rho*h^3.
    """
    if not (h > 0):
        raise InputError(f"voxel pitch must be positive, got {h}")
    D = _hooke(material.E, material.nu)
    g = 1.0 / np.sqrt(3.0)
    det = (h / 2.0) ** 3
    Ke = np.zeros((24, 24))
    Me = np.zeros((24, 24))
    for gx in (-g, g):
        for gy in (-g, g):
            for gz in (-g, g):
                xi = np.array([gx, gy, gz])
                # shape values and natural-coordinate gradients at this point
                n = np.prod(1.0 + _SIGNS * xi, axis=1) / 8.0
                dn = np.empty((8, 3))
                for a in range(3):
                    others = [b for b in range(3) if b != a]
                    dn[:, a] = (_SIGNS[:, a] / 8.0
                                * (1.0 + _SIGNS[:, others[0]] * xi[others[0]])
                                * (1.0 + _SIGNS[:, others[1]] * xi[others[1]]))
                dn *= 2.0 / h  # physical gradients
                B = np.zeros((6, 24))
                B[0, 0::3] = dn[:, 0]
                B[1, 1::3] = dn[:, 1]
                B[2, 2::3] = dn[:, 2]
                B[3, 0::3] = dn[:, 1]
                B[3, 1::3] = dn[:, 0]
                B[4, 1::3] = dn[:, 2]
                B[4, 2::3] = dn[:, 1]
                B[5, 0::3] = dn[:, 2]
                B[5, 2::3] = dn[:, 0]
                N = np.zeros((3, 24))
                N[0, 0::3] = n
                N[1, 1::3] = n
                N[2, 2::3] = n
                Ke += B.T @ D @ B * det
                Me += material.rho * (N.T @ N) * det
    Ke = (Ke + Ke.T) / 2.0
    Me = (Me + Me.T) / 2.0
    return ElementMatrices(Ke=Ke, Me=Me, material=material, h=float(h))


# ---------------------------------------------------------------------------
# assembly


@dataclass
class AssembledSystem:
    """Global sparse (K, M) pair with its provenance.

    K and M share an identical CSR sparsity layout (same COO construction,
    explicit zeros kept), which downstream kernels rely on.
    """

    K: csr_matrix
    M: csr_matrix
    material: Material
    h: float
    grid: VoxelGrid

    @property
    def ndof(self) -> int:
        return self.K.shape[0]


def assemble(g: VoxelGrid, em: ElementMatrices) -> AssembledSystem:
    """Scatter element matrices into global CSR via the grid's vertex ids."""
    ids = g.voxel_corner_ids  # (N, 8)
    dof = (3 * ids[:, :, None] + np.arange(3)).reshape(-1, 24)  # (N, 24)
    rows = np.repeat(dof, 24, axis=1).reshape(-1)
    cols = np.tile(dof, (1, 24)).reshape(-1)
    n = 3 * g.n_vertices
    datk = np.tile(em.Ke.reshape(-1), g.n_voxels)
    datm = np.tile(em.Me.reshape(-1), g.n_voxels)
    K = coo_matrix((datk, (rows, cols)), shape=(n, n)).tocsr()
    M = coo_matrix((datm, (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    return AssembledSystem(K=K, M=M, material=em.material, h=em.h, grid=g)


def rescale_eigendata(lambdas: np.ndarray, from_spec, to_spec) -> np.ndarray:
    """Map eigenvalues solved under (material, h) to a new (material', h').

    lambda' = lambda * (E'/E) * (rho/rho') * (h/h')^2; eigenvectors are
    unchanged.  Requires equal Poisson ratios: mode shapes depend on nu, so
    the scaling law only holds within a fixed-nu family.
    """
    mat_a, h_a = from_spec
    mat_b, h_b = to_spec
    if abs(mat_a.nu - mat_b.nu) > 1e-12:
        raise InputError(
            f"eigen rescaling requires equal Poisson ratios (got {mat_a.nu} vs {mat_b.nu})")
    if not (h_a > 0 and h_b > 0):
        raise InputError("voxel pitches must be positive")
    factor = (mat_b.E / mat_a.E) * (mat_a.rho / mat_b.rho) * (h_a / h_b) ** 2
    return np.asarray(lambdas, dtype=np.float64) * factor


# ---------------------------------------------------------------------------
# .spmat container: one-line JSON header, newline, CSR arrays (i64, i64, f64 LE)


def save_spmat(A: csr_matrix, path) -> None:
    A = A.tocsr()
    A.sum_duplicates()
    header = {"n": int(A.shape[0]), "nnz": int(A.nnz), "symmetric": True}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(A.indptr, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(A.indices, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(A.data, dtype="<f8").tobytes())


def load_spmat(path) -> csr_matrix:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InputError("truncated .spmat: missing header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    n, nnz = int(header["n"]), int(header["nnz"])
    body = memoryview(raw)[nl + 1:]
    need = 8 * (n + 1) + 8 * nnz + 8 * nnz
    if len(body) != need:
        raise InputError("truncated .spmat: payload size mismatch")
    indptr = np.frombuffer(body[: 8 * (n + 1)], dtype="<i8")
    indices = np.frombuffer(body[8 * (n + 1): 8 * (n + 1) + 8 * nnz], dtype="<i8")
    data = np.frombuffer(body[8 * (n + 1) + 8 * nnz:], dtype="<f8")
    return csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(n, n))
