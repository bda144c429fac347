"""Discrete spaces and dof bookkeeping.

Per cell: vector P_k velocity (component-major within the cell block)
followed by the P_{k-1} pressure.  Per facet: vector P_k trace velocity
followed by the facet pressure of degree `facet_pressure_degree`
(= k for the proposed method, k-1 for the mixed-order comparison
variant).  Facet dofs live in the global parameterization of the facet
(low vertex -> high vertex), so the two adjacent cells address the same
unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import polybasis
from .mesh import Mesh
from .polybasis import (QuadRule, UnsupportedDegreeError, _basis_eval_unchecked,
                        basis_eval, tri_dim)

# reference-triangle vertices; local edge lf joins REF_VERTS[lf], REF_VERTS[lf+1]
REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class Spaces:
    mesh: Mesh
    k: int
    facet_pressure_degree: int
    nb: int        # scalar cell basis size (k+1)(k+2)/2
    np_: int       # cell pressure basis size k(k+1)/2
    nfb: int       # scalar facet velocity basis size k+1
    nfp: int       # facet pressure basis size

    @property
    def cell_block(self) -> int:
        """Dofs per cell: two velocity components plus pressure."""
        return 2 * self.nb + self.np_

    @property
    def facet_block(self) -> int:
        """Dofs per facet: two velocity components plus facet pressure."""
        return 2 * self.nfb + self.nfp

    @property
    def n_cell_dofs(self) -> int:
        return self.mesh.num_cells * self.cell_block

    @property
    def n_facet_dofs(self) -> int:
        return self.mesh.num_facets * self.facet_block

    def facet_dofs(self, f: int) -> np.ndarray:
        return np.arange(f * self.facet_block, (f + 1) * self.facet_block)

    def facet_velocity_dofs(self, f: int) -> np.ndarray:
        return np.arange(f * self.facet_block, f * self.facet_block + 2 * self.nfb)

    def facet_pressure_dofs(self, f: int) -> np.ndarray:
        base = f * self.facet_block + 2 * self.nfb
        return np.arange(base, base + self.nfp)

    def cell_to_facet_dofs(self) -> np.ndarray:
        """(nc, 3*facet_block) global facet dof ids seen by each cell."""
        fb = self.facet_block
        base = self.mesh.cell_facets * fb  # (nc, 3)
        return (base[:, :, None] + np.arange(fb)[None, None, :]).reshape(
            self.mesh.num_cells, 3 * fb)


def build_spaces(mesh: Mesh, k: int, facet_pressure_degree: int | None = None
                 ) -> Spaces:
    if not (polybasis.K_MIN <= k <= polybasis.K_MAX):
        raise UnsupportedDegreeError(f"k={k} outside supported range")
    if facet_pressure_degree is None:
        facet_pressure_degree = k
    if facet_pressure_degree not in (k, k - 1):
        raise ValueError("facet_pressure_degree must be k or k-1")
    return Spaces(mesh=mesh, k=k, facet_pressure_degree=facet_pressure_degree,
                  nb=tri_dim(k), np_=tri_dim(k - 1) if k >= 1 else 0,
                  nfb=k + 1, nfp=facet_pressure_degree + 1)


@dataclass
class FieldState:
    """Coefficient vectors at one time level (or Picard iterate).

    u: (nc, 2, nb), p: (nc, np_), ubar: (nf, 2, nfb), pbar: (nf, nfp).
    """

    u: np.ndarray
    p: np.ndarray
    ubar: np.ndarray
    pbar: np.ndarray
    time: float = 0.0

    @classmethod
    def zeros(cls, spaces: Spaces, time: float = 0.0) -> "FieldState":
        m = spaces.mesh
        return cls(u=np.zeros((m.num_cells, 2, spaces.nb)),
                   p=np.zeros((m.num_cells, spaces.np_)),
                   ubar=np.zeros((m.num_facets, 2, spaces.nfb)),
                   pbar=np.zeros((m.num_facets, spaces.nfp)),
                   time=time)

    def copy(self) -> "FieldState":
        return FieldState(self.u.copy(), self.p.copy(), self.ubar.copy(),
                          self.pbar.copy(), self.time)

    def facet_vector(self, spaces: Spaces) -> np.ndarray:
        y = np.empty(spaces.n_facet_dofs)
        fb, nfb = spaces.facet_block, spaces.nfb
        for f in range(spaces.mesh.num_facets):
            y[f * fb: f * fb + nfb] = self.ubar[f, 0]
            y[f * fb + nfb: f * fb + 2 * nfb] = self.ubar[f, 1]
            y[f * fb + 2 * nfb: (f + 1) * fb] = self.pbar[f]
        return y

    def set_facet_vector(self, spaces: Spaces, y: np.ndarray) -> None:
        fb, nfb = spaces.facet_block, spaces.nfb
        yr = y.reshape(spaces.mesh.num_facets, fb)
        self.ubar[:, 0, :] = yr[:, :nfb]
        self.ubar[:, 1, :] = yr[:, nfb: 2 * nfb]
        self.pbar[:, :] = yr[:, 2 * nfb:]


def facet_trace_points(mesh: Mesh, cell_id: int, local_facet: int,
                       facet_quad: QuadRule) -> np.ndarray:
    """Cell-reference coordinates of facet quadrature points, walked in the
    facet's global (low->high vertex) orientation so both adjacent cells see
    the same physical points in the same order."""
    s = facet_quad.points[:, 0]
    a = REF_VERTS[local_facet]
    b = REF_VERTS[(local_facet + 1) % 3]
    if mesh.cell_facet_orient[cell_id, local_facet] < 0:
        a, b = b, a
    return a[None, :] + s[:, None] * (b - a)[None, :]


def trace_tables(spaces: Spaces, facet_quad: QuadRule):
    """Cell-basis values/ref-gradients at facet quadrature points for the six
    (local facet, orientation) variants; variant id = 2*lf + (orient < 0)."""
    k = spaces.k
    vals, grads, pvals = [], [], []
    s = facet_quad.points[:, 0]
    for lf in range(3):
        for flip in (False, True):
            a = REF_VERTS[lf]
            b = REF_VERTS[(lf + 1) % 3]
            if flip:
                a, b = b, a
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            bs = basis_eval("triangle", k, pts)
            vals.append(bs.values)
            grads.append(bs.grads)
            pvals.append(_basis_eval_unchecked("triangle", k - 1, pts).values)
    return np.stack(vals), np.stack(grads), np.stack(pvals)


@dataclass
class Constraints:
    """Dirichlet facet-velocity constraints plus optional pressure pin.

    values maps constrained global facet dof -> prescribed value; the pin
    (gauge fixing for pure-Dirichlet problems) is a single facet-pressure
    dof held at zero during the solve.
    """

    dirichlet_facets: list[int] = field(default_factory=list)
    values: dict[int, float] = field(default_factory=dict)
    pinned_dof: int | None = None

    def constrained_dofs(self) -> np.ndarray:
        dofs = sorted(self.values)
        if self.pinned_dof is not None and self.pinned_dof not in self.values:
            dofs = sorted(dofs + [self.pinned_dof])
        return np.array(dofs, dtype=np.int64)

    def value_vector(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        for d, v in self.values.items():
            x[d] = v
        return x


def apply_dirichlet(spaces: Spaces, dirichlet_facets, boundary_data, t: float,
                    pinned_dof: int | None = None) -> Constraints:
    """Facet-wise L2 projection of `boundary_data(x, t)` onto vector P_k of
    each Dirichlet facet."""
    mesh = spaces.mesh
    quad = polybasis.quadrature_rule("interval", 2 * spaces.k + 2)
    chi = basis_eval("interval", spaces.k, quad.points).values  # (nq, nfb)
    M = np.einsum("q,qi,qj->ij", quad.weights, chi, chi)
    Minv = np.linalg.inv(M)

    cons = Constraints(dirichlet_facets=sorted(int(f) for f in dirichlet_facets),
                       pinned_dof=pinned_dof)
    s = quad.points[:, 0]
    for f in cons.dirichlet_facets:
        va, vb = mesh.vertices[mesh.facets[f]]
        pts = va[None, :] + s[:, None] * (vb - va)[None, :]
        g = np.asarray(boundary_data(pts, t), dtype=float)  # (nq, 2)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite Dirichlet data on facet {f}")
        rhs = np.einsum("q,qi,qc->ci", quad.weights, chi, g)
        coefs = rhs @ Minv.T  # (2, nfb)
        udofs = spaces.facet_velocity_dofs(f)
        for c in range(2):
            for i in range(spaces.nfb):
                cons.values[int(udofs[c * spaces.nfb + i])] = float(coefs[c, i])
    return cons
