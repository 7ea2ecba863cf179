"""Assembly of the discrete quadratic form for the weight-m horizontal operator.

The energy of a weight-m section is the sum over grid edges of

    w_e * |f_j - U_e f_i|^2,     U_e = exp(-i*m*Theta_e),

with Theta_e the connection's weight-1 edge angle and w_e the conformal edge
coefficient h^(d-2) * avg(exp((d-2)u)) over the edge endpoints.  In d = 2 the
edge coefficient is identically 1, so the stiffness matrix is conformally
invariant and the metric enters only through the diagonal mass matrix of
volume weights exp(d*u) * h^d.

The resulting pencil (K, M) is exactly Hermitian and positive semidefinite;
its eigenvalues discretize the spectrum of the weight-m operator, and adding
m^2 gives the eigenvalue of the full bundle Laplacian on the lifted
eigenfunction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import BaseGrid, Connection, Section


def edge_weight(grid: BaseGrid, axis: int) -> np.ndarray:
    """Conformal coefficient of the edge (i -> i+e_a), averaged endpoints."""
    d = grid.dim
    g = np.exp((d - 2) * grid.u)
    return grid.h ** (d - 2) * 0.5 * (g + np.roll(g, -1, axis=axis))


@dataclass
class OperatorPair:
    """Hermitian stiffness K and diagonal mass M for one weight m."""

    m: int
    K: sp.csr_matrix
    mass: np.ndarray          # diagonal of M, flattened row-major
    grid: BaseGrid = field(repr=False)
    conn: Connection = field(repr=False)

    @property
    def dim(self) -> int:
        return self.K.shape[0]

    def mass_matrix(self) -> sp.dia_matrix:
        return sp.diags(self.mass)


def assemble_forms(grid: BaseGrid, conn: Connection, m: int) -> OperatorPair:
    """Assemble the pencil (K, M) of the weight-m quadratic form.

    Each axis contributes edges (i -> i+e_a) with wrap; the link phase
    U = exp(-i*m*Theta_a[i]) makes the finite difference gauge covariant,
    and wrap edges carry the boundary twist inside Theta.  Off-diagonal
    entries are written conjugate-symmetrically, so K = K* holds exactly.
    """
    if conn.grid is not grid:
        raise ValueError("connection was built on a different grid")
    shape = grid.shape
    size = grid.size
    idx = np.arange(size).reshape(shape)

    diag = np.zeros(shape)
    rows, cols, vals = [], [], []
    for a in range(grid.dim):
        w = edge_weight(grid, a)
        u_link = np.exp(-1j * m * conn.link_angle[a])
        j_idx = np.roll(idx, -1, axis=a)
        diag += w + np.roll(w, 1, axis=a)
        off = (-w * u_link).astype(complex)
        rows.append(j_idx.ravel())
        cols.append(idx.ravel())
        vals.append(off.ravel())
        rows.append(idx.ravel())
        cols.append(j_idx.ravel())
        vals.append(np.conj(off).ravel())

    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel().astype(complex))

    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
    return OperatorPair(m=m, K=K, mass=grid.volume_weight.ravel().copy(), grid=grid, conn=conn)


def apply_operator(op: OperatorPair, s: Section) -> Section:
    """Matrix action K s as a section (without the mass inverse)."""
    if s.conn is not op.conn:
        raise ValueError("section does not belong to this operator's connection")
    if s.m != op.m:
        raise ValueError(f"weight mismatch: operator has m = {op.m}, section m = {s.m}")
    out = op.K @ s.values.ravel()
    return Section(op.m, out.reshape(op.grid.shape), op.conn)


def rayleigh_quotient(op: OperatorPair, s: Section) -> float:
    """Energy quotient (s* K s) / (s* M s), nonnegative for nonzero s."""
    f = s.values.ravel()
    denom = float(np.real(np.vdot(f, op.mass * f)))
    if denom <= 0.0:
        raise ValueError("Rayleigh quotient of a zero section")
    num = float(np.real(np.vdot(f, op.K @ f)))
    return num / denom


def total_eigenvalue(op_eig: float, m: int) -> float:
    """Eigenvalue of the full bundle Laplacian: horizontal part plus m^2."""
    return float(op_eig) + float(m * m)
