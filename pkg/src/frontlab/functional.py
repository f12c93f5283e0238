"""Discrete renormalized weighted energy Psi_c^w[h] and its gradient.

With u = w + h on a ZGrid,

    Psi[h] = sum_edges e^{c z_{i+1/2}} (h_{i+1} - h_i)^2 / (2 dz)
           + sum_nodes beta_i dz e^{c z_i} [ h^T K_y h / 2
               + sum_j m_j ( V(w+h) - V(w) - V'(w) h - R_w h ) ],

where R_w is the discrete residual of w on its cutoff layer.  Every weight is
absorbed into the tilted field g = e^{cz/2} h, so the sums only contain
g-quantities and never overflow; on the far left g simply underflows to 0,
which is the correct size of those contributions.

h is free on the nodes with c z / 2 <= TILT_CAP (and before the last node);
beyond that it is pinned to 0, i.e. u = w there.
"""
from __future__ import annotations

import numpy as np

from .aux_front import CUTOFF
from .nonlinearity import on_mesh
from .zgrid import ZGrid, apply_operator, cell_weights, pde_residual

TILT_CAP = 300.0


class FrontFunctional:
    def __init__(self, term, mesh, grid: ZGrid, c: float, w, residual_mask_until: float | None = None):
        self.term = on_mesh(term, mesh)
        self.mesh = mesh
        self.grid = grid
        self.c = float(c)
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        self.w = np.broadcast_to(w, (grid.n, mesh.n_unknowns)).copy()
        z = grid.z
        n_free = int(np.searchsorted(z, 2.0 * TILT_CAP / self.c, side="right")) if self.c > 0 else grid.n
        self.n_free = min(n_free, grid.n - 1)
        self.tilt = np.exp(0.5 * self.c * z[: self.n_free])
        self.beta = cell_weights(grid.n)[: self.n_free]
        self.my = mesh.mass()
        self.Ky = mesh.stiffness() if mesh.dim else None
        until = CUTOFF[1] + 2.0 * grid.dz if residual_mask_until is None else residual_mask_until
        self.mask = (z <= until)[:, None]
        self.res_w = pde_residual(self.w, self.c, grid.dz, mesh, self.term)
        self.res_w_masked = np.where(self.mask, self.res_w, 0.0)

    # -- state helpers ------------------------------------------------------
    def u_of(self, h):
        u = self.w.copy()
        u[: self.n_free] += h[: self.n_free]
        return u

    def h_of(self, u):
        h = np.zeros_like(self.w)
        h[: self.n_free] = u[: self.n_free] - self.w[: self.n_free]
        return h

    def tilted(self, h):
        """g = e^{cz/2} h on the free nodes."""
        return self.tilt[:, None] * h[: self.n_free]

    def inner(self, a, b) -> float:
        """Weighted L^2_c inner product of two h-fields."""
        ga, gb = self.tilted(a), self.tilted(b)
        return float(np.sum(self.beta[:, None] * self.grid.dz * self.my[None, :] * ga * gb))

    def norm2(self, h) -> float:
        return self.inner(h, h)

    # -- value and gradient -------------------------------------------------
    def value(self, h) -> float:
        dz, nf = self.grid.dz, self.n_free
        h = np.asarray(h, dtype=float).reshape(self.w.shape)
        g = self.tilted(h)
        gext = np.vstack([g, np.zeros((1, g.shape[1]))])
        s = 0.25 * self.c * dz
        edge = np.exp(-s) * gext[1:] - np.exp(s) * gext[:-1]
        total = float(np.sum(self.my[None, :] * edge**2)) / (2.0 * dz)
        wdz = self.beta * dz
        if self.Ky is not None:
            ky = np.einsum("ij,ij->i", g, (self.Ky @ g.T).T)
            total += 0.5 * float(np.dot(wdz, ky))
        w = self.w[:nf]
        q = self.term.second_difference_V(w, h[:nf])
        node = g * g * q - self.tilt[:, None] * self.res_w_masked[:nf] * g
        total += float(np.sum(wdz[:, None] * self.my[None, :] * node))
        return total

    def gradient(self, h) -> np.ndarray:
        """Riesz representative in the weighted inner product (h-units), zero on pinned nodes.

        Equals minus the discrete residual of u = w + h, corrected by the part of
        R_w that the functional leaves out.
        """
        u = self.u_of(np.asarray(h, dtype=float).reshape(self.w.shape))
        G = -pde_residual(u, self.c, self.grid.dz, self.mesh, self.term)
        G += self.res_w - self.res_w_masked
        G[self.n_free:] = 0.0
        return G

    def euclidean_gradient(self, h) -> np.ndarray:
        """dPsi/dh_ij, i.e. the weighted gradient times the quadrature weights."""
        G = self.gradient(h)
        wts = np.zeros_like(G)
        wts[: self.n_free] = (
            self.beta[:, None] * self.grid.dz * self.my[None, :] * self.tilt[:, None] ** 2
        )
        return G * wts
