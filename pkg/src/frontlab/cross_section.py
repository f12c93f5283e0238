"""Cross-section meshes and principal eigenpairs of -Delta_y - p(y)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy import sparse

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class ConvergenceError(RuntimeError):
    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


@dataclass(frozen=True)
class CrossSectionMesh:
    """A point (dim=0) or an interval with Dirichlet/Neumann end tags (dim=1).

    For dim=1 the nodes include both endpoints; Dirichlet endpoints carry the
    value 0 and are not unknowns.
    """

    dim: int = 0
    interval: tuple[float, float] = (0.0, 1.0)
    n_nodes: int = 1
    bc_left: str = NEUMANN
    bc_right: str = NEUMANN

    def __post_init__(self):
        if self.dim == 0:
            if self.n_nodes != 1:
                raise ValueError("dim=0 mesh carries exactly one node")
            return
        if self.dim != 1:
            raise ValueError("only dim 0 or 1 cross-sections are supported")
        bcs = {DIRICHLET, NEUMANN}
        if self.bc_left not in bcs or self.bc_right not in bcs:
            raise ValueError("boundary tags must be 'dirichlet' or 'neumann'")
        if not self.interval[1] > self.interval[0]:
            raise ValueError("empty interval")
        if self.n_nodes - 2 < 8:
            raise ValueError("need at least 8 interior nodes")

    @classmethod
    def point(cls) -> "CrossSectionMesh":
        return cls()

    @classmethod
    def strip(cls, y_a, y_b, n_nodes, bc_left=DIRICHLET, bc_right=DIRICHLET):
        return cls(1, (float(y_a), float(y_b)), int(n_nodes), bc_left.lower(), bc_right.lower())

    @property
    def h(self) -> float:
        return (self.interval[1] - self.interval[0]) / (self.n_nodes - 1) if self.dim else 1.0

    @property
    def nodes(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(1)
        return np.linspace(self.interval[0], self.interval[1], self.n_nodes)

    @property
    def unknown_index(self) -> np.ndarray:
        idx = np.arange(self.n_nodes)
        if self.dim == 0:
            return idx
        lo = 1 if self.bc_left == DIRICHLET else 0
        hi = self.n_nodes - 1 if self.bc_right == DIRICHLET else self.n_nodes
        return idx[lo:hi]

    @property
    def n_unknowns(self) -> int:
        return len(self.unknown_index)

    @property
    def y(self) -> np.ndarray:
        """Coordinates of the unknown nodes."""
        return self.nodes[self.unknown_index]

    def mass(self) -> np.ndarray:
        """Trapezoid weights on the unknown nodes (1 for a point)."""
        if self.dim == 0:
            return np.ones(1)
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w[self.unknown_index]

    def stiffness(self) -> sparse.csr_matrix:
        """K with g^T K g = sum over edges (g_{j+1} - g_j)^2 / h_y, Dirichlet values 0."""
        n = self.n_unknowns
        if self.dim == 0:
            return sparse.csr_matrix((1, 1))
        h = self.h
        diag = np.full(n, 2.0 / h)
        if self.bc_left == NEUMANN:
            diag[0] = 1.0 / h
        if self.bc_right == NEUMANN:
            diag[-1] = 1.0 / h
        off = np.full(n - 1, -1.0 / h)
        return sparse.diags([off, diag, off], [-1, 0, 1], format="csr")

    def laplacian(self) -> sparse.csr_matrix:
        """Discrete Delta_y on unknowns: -M^{-1} K (ghost-node Neumann, eliminated Dirichlet)."""
        return -sparse.diags(1.0 / self.mass()) @ self.stiffness()

    def full(self, values) -> np.ndarray:
        """Extend unknown-node values by the Dirichlet zeros."""
        out = np.zeros(self.n_nodes)
        out[self.unknown_index] = values
        return out

    def integrate(self, values) -> float:
        return float(np.dot(self.mass(), values))

    def as_dict(self) -> dict:
        if self.dim == 0:
            return {"dim": 0}
        return {
            "dim": 1,
            "interval": list(self.interval),
            "n_nodes": self.n_nodes,
            "bc_left": self.bc_left,
            "bc_right": self.bc_right,
        }


def mesh_from_dict(d: dict) -> CrossSectionMesh:
    if int(d.get("dim", 0)) == 0:
        return CrossSectionMesh.point()
    a, b = d.get("interval", [0.0, np.pi])
    return CrossSectionMesh.strip(
        a, b, d.get("n_nodes", 65), d.get("bc_left", DIRICHLET), d.get("bc_right", DIRICHLET)
    )


@dataclass(frozen=True)
class EigenPair:
    nu: float
    psi: np.ndarray
    iterations: int = 0


def rayleigh_quotient(mesh: CrossSectionMesh, potential, psi) -> float:
    m = mesh.mass()
    num = psi @ (mesh.stiffness() @ psi) - np.dot(m * potential, psi**2)
    return float(num / np.dot(m, psi**2))


def eigen_residual(mesh: CrossSectionMesh, potential, pair: EigenPair) -> float:
    r = mesh.laplacian() @ pair.psi + (potential + pair.nu) * pair.psi
    return float(np.max(np.abs(r)))


def principal_eigenpair(
    mesh: CrossSectionMesh,
    potential,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> EigenPair:
    """Smallest eigenvalue of -Delta_y - p by shifted inverse power iteration."""
    p = np.asarray(potential, dtype=float).reshape(-1)
    if mesh.dim == 0:
        return EigenPair(-float(p[0]), np.ones(1))
    if p.size != mesh.n_unknowns:
        raise ValueError("potential must be tabulated on the unknown nodes")

    pnorm = float(np.max(np.abs(p)))
    shift = -pnorm - 1.0
    A = -mesh.laplacian().toarray() - np.diag(p) - shift * np.eye(p.size)
    ab = np.zeros((3, p.size))
    ab[0, 1:] = np.diag(A, 1)
    ab[1] = np.diag(A)
    ab[2, :-1] = np.diag(A, -1)

    psi = np.ones(p.size)
    # a positive start vector has a component along the positive ground state
    nu_old = rayleigh_quotient(mesh, p, psi)
    res_tol = 1e-10 * max(pnorm, 1.0)
    for it in range(1, max_iter + 1):
        psi = solve_banded((1, 1), ab, psi)
        psi /= np.max(np.abs(psi))
        nu = rayleigh_quotient(mesh, p, psi)
        if abs(nu - nu_old) <= tol * max(1.0, abs(nu)):
            pair = EigenPair(nu, psi, it)
            if eigen_residual(mesh, p, pair) <= res_tol:
                break
        nu_old = nu
    else:
        raise ConvergenceError("inverse iteration did not converge", nu)

    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    psi = psi / np.max(psi)
    return EigenPair(float(nu), psi, it)


def write_eigen_csv(path, mesh: CrossSectionMesh, pair: EigenPair) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("y,psi\n")
        for y, v in zip(mesh.nodes, mesh.full(pair.psi)):
            fh.write(f"{y:.17g},{v:.17g}\n")
