"""Lowest eigenpairs of the Hermitian pencil (K, M) with residual certificates.

The generalized problem K f = lambda M f is reduced by the exact diagonal
similarity A = M^(-1/2) K M^(-1/2); eigenvectors are mapped back by
f = M^(-1/2) y, which makes the returned sections M-orthonormal.  Dense
reduction is used up to 5000 unknowns, shift-invert Lanczos above.  Every
returned pair carries the residual |K f - lambda M f| measured in the
M^(-1) norm, relative to the M-norm of f, and must satisfy the configured
tolerance; non-convergence is an explicit failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import Section
from .operators import OperatorPair, total_eigenvalue

DENSE_THRESHOLD = 800
DEFAULT_GAP_TOL = 1e-6


class SolverConvergenceError(RuntimeError):
    """Raised when an eigenpair misses its residual contract."""

    def __init__(self, index, residual, tol):
        self.index = index
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"eigenpair {index} failed to converge: residual {residual:.3e} > tolerance {tol:.3e}"
        )


@dataclass
class EigenPair:
    """One eigenpair of the weight-m pencil: M-normalized section and residual."""

    m: int
    lam: float
    section: Section
    residual: float

    @property
    def total(self) -> float:
        """Eigenvalue of the full bundle Laplacian, lam + m^2."""
        return total_eigenvalue(self.lam, self.m)


def symmetrized_matrix(op: OperatorPair) -> sp.csr_matrix:
    inv_sqrt = 1.0 / np.sqrt(op.mass)
    return sp.csr_matrix(op.K.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :]))


def lowest_eigenpairs(op: OperatorPair, k: int, tol: float = 1e-8, seed: int = 0,
                      maxiter: int | None = None) -> list:
    """Compute the k lowest eigenpairs of the pencil (K, M).

    Deterministic for a fixed seed (the seed feeds the iterative solver's
    start vector).  Raises SolverConvergenceError naming the first index
    whose residual exceeds tol * (1 + lambda).
    """
    size = op.dim
    if not 1 <= k <= size // 4:
        raise ValueError(f"k must satisfy 1 <= k <= dim/4 = {size // 4}, got {k}")
    A = symmetrized_matrix(op)

    if size <= DENSE_THRESHOLD:
        evals, evecs = np.linalg.eigh(A.toarray())
        lams = evals[:k]
        Y = evecs[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        try:
            lams, Y = spla.eigsh(
                A, k=k, sigma=-1.0, which="LM", v0=v0,
                maxiter=maxiter if maxiter is not None else 500 * k,
            )
        except spla.ArpackNoConvergence as exc:
            n_ok = len(exc.eigenvalues)
            raise SolverConvergenceError(n_ok, float("nan"), tol) from exc
        order = np.argsort(lams)
        lams, Y = lams[order], Y[:, order]
        # Lanczos blocks can lose orthogonality inside degenerate clusters
        gram = Y.conj().T @ Y
        if np.max(np.abs(gram - np.eye(k))) > 1e-10:
            Y, _ = np.linalg.qr(Y)
            lams = np.real(np.einsum("ij,ij->j", Y.conj(), A @ Y))
            order = np.argsort(lams)
            lams, Y = lams[order], Y[:, order]

    # the pencil is positive semidefinite; tiny negatives are roundoff
    floor = -1e-9 * (1.0 + float(np.max(np.abs(lams))))
    if np.min(lams) < floor:
        raise ValueError(f"negative eigenvalue {np.min(lams):.3e} violates positivity")
    lams = np.maximum(lams, 0.0)

    inv_sqrt = 1.0 / np.sqrt(op.mass)
    pairs = []
    for i in range(k):
        y = Y[:, i]
        res = float(np.linalg.norm(A @ y - lams[i] * y) / np.linalg.norm(y))
        if res > tol * (1.0 + lams[i]):
            raise SolverConvergenceError(i, res, tol * (1.0 + lams[i]))
        f = (inv_sqrt * y).reshape(op.grid.shape)
        pairs.append(EigenPair(m=op.m, lam=float(lams[i]),
                               section=Section(op.m, f, op.conn), residual=res))
    return pairs


@dataclass
class ClusterGroup:
    start: int
    size: int
    mean: float
    spread: float
    gap: float

    @property
    def well_separated(self) -> bool:
        return self.spread < self.gap


@dataclass
class ClusterReport:
    """Greedy degeneracy clustering of a sorted eigenvalue list."""

    groups: list
    gap_tol: float

    @property
    def sizes(self) -> list:
        return [g.size for g in self.groups]

    def simple_indices(self) -> list:
        """Indices of eigenvalues living in size-1 clusters."""
        return [g.start for g in self.groups if g.size == 1]


def _lambdas(eigs) -> np.ndarray:
    if len(eigs) and hasattr(eigs[0], "lam"):
        return np.array([e.lam for e in eigs])
    return np.asarray(eigs, dtype=float)


def detect_clusters(eigs, gap_tol: float = DEFAULT_GAP_TOL) -> ClusterReport:
    """Group consecutive eigenvalues closer than gap_tol * (1 + lambda)."""
    lam = _lambdas(eigs)
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be sorted ascending")
    groups = []
    start = 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or lam[i] - lam[i - 1] >= gap_tol * (1.0 + lam[i - 1]):
            block = lam[start:i]
            gap = float(lam[i] - lam[i - 1]) if i < len(lam) else float("inf")
            groups.append(ClusterGroup(
                start=start, size=i - start, mean=float(np.mean(block)),
                spread=float(block[-1] - block[0]), gap=gap,
            ))
            start = i
    return ClusterReport(groups=groups, gap_tol=gap_tol)


@dataclass
class DisjointnessReport:
    """Cross-weight comparison of total eigenvalues (lam + m^2)."""

    min_distance: float
    closest: tuple | None
    collisions: list
    tol: float


def cross_weight_disjointness(eigs_by_m: dict, tol: float = 1e-8) -> DisjointnessReport:
    """Minimum pairwise distance of total eigenvalues across distinct weights.

    Pairs closer than tol are flagged as collisions; a single weight yields an
    empty collision list.
    """
    weights = sorted(eigs_by_m)
    totals = {m: np.array([e.total for e in eigs_by_m[m]]) for m in weights}
    min_dist = float("inf")
    closest = None
    collisions = []
    for wi, m1 in enumerate(weights):
        for m2 in weights[wi + 1:]:
            diff = np.abs(totals[m1][:, None] - totals[m2][None, :])
            i, j = np.unravel_index(np.argmin(diff), diff.shape)
            if diff[i, j] < min_dist:
                min_dist = float(diff[i, j])
                closest = (m1, int(i), m2, int(j))
            hits = np.argwhere(diff < tol)
            collisions.extend(
                (m1, int(i2), m2, int(j2), float(diff[i2, j2])) for i2, j2 in hits
            )
    return DisjointnessReport(min_distance=min_dist, closest=closest,
                              collisions=collisions, tol=tol)
