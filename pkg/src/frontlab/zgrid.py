"""Uniform z-grids and the exponentially weighted finite-difference operator.

Fields on the cylinder are arrays of shape (n_z, n_y) with n_y the number of
cross-section unknowns (1 for a point).  The z-operator

    L_z u_i = [e^{c dz/2} (u_{i+1} - u_i) - e^{-c dz/2} (u_i - u_{i-1})] / dz^2

is the Euler-Lagrange operator of sum_edges e^{c z_{i+1/2}} (u_{i+1}-u_i)^2 / (2 dz),
so it is a consistent O(dz^2) discretization of u_zz + c u_z and is symmetric
in the e^{cz}-weighted inner product.  At the first node a half cell gives the
zero-flux (Neumann) condition; the last node carries Dirichlet data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .cross_section import CrossSectionMesh


@dataclass(frozen=True)
class ZGrid:
    z_min: float
    dz: float
    n: int

    @classmethod
    def covering(cls, z_lo: float, z_hi: float, dz: float = 0.02) -> "ZGrid":
        """Grid with spacing dz that contains z = 0 as a node and spans [z_lo, z_hi]."""
        i_lo = int(np.floor(z_lo / dz + 1e-9))
        i_hi = int(np.ceil(z_hi / dz - 1e-9))
        return cls(i_lo * dz, float(dz), i_hi - i_lo + 1)

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n)

    @property
    def z_max(self) -> float:
        return self.z_min + self.dz * (self.n - 1)

    @property
    def length(self) -> float:
        return self.z_max - self.z_min

    def index(self, z: float) -> int:
        return int(np.clip(round((z - self.z_min) / self.dz), 0, self.n - 1))

    def refined(self) -> "ZGrid":
        """Half spacing; every node of self is a node of the result."""
        return ZGrid(self.z_min, self.dz / 2, 2 * self.n - 1)

    def as_dict(self) -> dict:
        return {"z_min": self.z_min, "z_max": self.z_max, "dz": self.dz, "n": self.n}


def cell_weights(n: int) -> np.ndarray:
    """Quadrature factors beta_i: 1/2 at the Neumann end, 1 elsewhere."""
    b = np.ones(n)
    b[0] = 0.5
    return b


def z_operator(n: int, c: float, dz: float) -> sparse.csr_matrix:
    """L_z on nodes 0..n-1 with a Neumann first node; the last row is zero (Dirichlet)."""
    ep, em = np.exp(0.5 * c * dz), np.exp(-0.5 * c * dz)
    main = np.full(n, -(ep + em)) / dz**2
    up = np.full(n - 1, ep) / dz**2
    lo = np.full(n - 1, em) / dz**2
    main[0] = -2.0 * ep / dz**2
    up[0] = 2.0 * ep / dz**2
    main[-1] = 0.0
    lo[-1] = 0.0
    return sparse.diags([lo, main, up], [-1, 0, 1], format="csr")


def field_operator(grid: ZGrid, c: float, mesh: CrossSectionMesh) -> sparse.csr_matrix:
    """L_z + Delta_y acting on fields flattened in C order (z major)."""
    Lz = z_operator(grid.n, c, grid.dz)
    ny = mesh.n_unknowns
    if mesh.dim == 0:
        return Lz
    Iy = sparse.identity(ny, format="csr")
    keep = np.ones(grid.n)
    keep[-1] = 0.0
    return (sparse.kron(Lz, Iy) + sparse.kron(sparse.diags(keep), mesh.laplacian())).tocsr()


def apply_operator(u: np.ndarray, c: float, dz: float, mesh: CrossSectionMesh) -> np.ndarray:
    """(L_z + Delta_y) u for a field of shape (n_z, n_y); zero on the last row."""
    ep, em = np.exp(0.5 * c * dz), np.exp(-0.5 * c * dz)
    out = np.zeros_like(u)
    fwd = np.diff(u, axis=0)
    out[1:-1] = (ep * fwd[1:] - em * fwd[:-1]) / dz**2
    out[0] = 2.0 * ep * fwd[0] / dz**2
    if mesh.dim:
        out[:-1] += (mesh.laplacian() @ u[:-1].T).T
    return out


def pde_residual(u: np.ndarray, c: float, dz: float, mesh, term) -> np.ndarray:
    """Delta u + c u_z + f(u, y) on all nodes but the last (which holds boundary data)."""
    r = apply_operator(u, c, dz, mesh) + np.broadcast_to(term.f(np.clip(u, 0.0, 1.0)), u.shape)
    r[-1] = 0.0
    return r


def smoothstep5(x):
    """Quintic smoothstep: 0 for x <= 0, 1 for x >= 1, C^2 in between."""
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)
