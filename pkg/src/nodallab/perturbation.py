"""First-order eigenvalue shifts under metric and connection deformations.

Both deformation families act on explicit parameters of the discrete
quadratic form, so the exact first derivative of an eigenvalue of the pencil
(K(t), M(t)) at a simple eigenpair is the Hellmann-Feynman expression

    lam_dot = <K_dot f, f> - lam * <M_dot f, f>,     |f|_M = 1.

Conformal metric directions u -> u + t*u_dot move the edge coefficients
(through exp((d-2)u), so not at all in d = 2) and the volume weights
(through exp(d*u)); connection directions add t times a flux-preserving
1-form to the edge angles and leave the mass fixed.  Pure-gauge directions
(exact discrete gradients) produce zero shift to rounding.

The same polarized forms assembled on a degenerate cluster give the
first-order splitting matrix; its eigenvalues predict how a seeded random
perturbation resolves a symmetric multiplet into simple eigenvalues, which
is the numerical shadow of the generic-simplicity prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BaseGrid,
    Connection,
    Section,
    gradient_edge_integrals,
    one_form_edge_integrals,
    scalar_field_callable,
)
from .operators import OperatorPair, assemble_forms, edge_weight
from .spectral import EigenPair, detect_clusters, lowest_eigenpairs

DEFAULT_FD_EPS = 1e-4


class DegenerateEigenvalueError(ValueError):
    """First-order formulas are invalid on a degenerate eigenvalue."""

    def __init__(self, lam, cluster_lambdas):
        self.lam = lam
        self.cluster_lambdas = list(cluster_lambdas)
        super().__init__(
            f"eigenvalue {lam:.9g} sits in a cluster {self.cluster_lambdas}; "
            "use the cluster splitting matrix instead"
        )


@dataclass
class MetricVariation:
    """Conformal direction u -> u + t * u_dot of the base metric."""

    grid: BaseGrid
    u_dot: np.ndarray

    def __post_init__(self):
        self.u_dot = np.broadcast_to(np.asarray(self.u_dot, dtype=float), self.grid.shape).copy()

    @classmethod
    def from_spec(cls, grid: BaseGrid, spec) -> "MetricVariation":
        vals = scalar_field_callable(spec)(grid.coords)
        return cls(grid=grid, u_dot=np.asarray(vals, dtype=float))

    @property
    def trace_b(self) -> np.ndarray:
        """Trace of the inverse-metric rate, -2 * dim * u_dot."""
        return -2.0 * self.grid.dim * self.u_dot


@dataclass
class ConnectionVariation:
    """Flux-preserving 1-form direction added to the gauge potential.

    Stored as per-axis edge integrals; the total wrapped flux through every
    coordinate plane must vanish (connection variations cannot change the
    bundle).
    """

    grid: BaseGrid
    beta_dot: tuple = field(repr=False)

    def __post_init__(self):
        for a in range(self.grid.dim):
            for b in range(a + 1, self.grid.dim):
                raw = (
                    self.beta_dot[a]
                    + np.roll(self.beta_dot[b], -1, axis=a)
                    - np.roll(self.beta_dot[a], -1, axis=b)
                    - self.beta_dot[b]
                )
                total = np.sum(np.angle(np.exp(1j * raw)), axis=(a, b))
                if np.max(np.abs(total)) > 1e-8:
                    raise ValueError(
                        f"variation carries flux {np.max(np.abs(total)):.3e} in plane ({a},{b})"
                    )

    @classmethod
    def from_spec(cls, grid: BaseGrid, spec) -> "ConnectionVariation":
        return cls(grid=grid, beta_dot=one_form_edge_integrals(grid, spec))

    @classmethod
    def pure_gauge(cls, grid: BaseGrid, chi) -> "ConnectionVariation":
        if not isinstance(chi, np.ndarray):
            chi = np.broadcast_to(
                np.asarray(scalar_field_callable(chi)(grid.coords), dtype=float), grid.shape
            ).copy()
        return cls(grid=grid, beta_dot=gradient_edge_integrals(grid, chi))


# ---------------------------------------------------------------------------
# polarized form derivatives
# ---------------------------------------------------------------------------

def _edge_diff(values: np.ndarray, conn: Connection, m: int, axis: int):
    """Covariant edge difference f_j - U f_i and the transported f_i."""
    u_link = np.exp(-1j * m * conn.link_angle[axis])
    transported = u_link * values
    return np.roll(values, -1, axis=axis) - transported, transported


def k_dot_form(var, f: Section, g: Section) -> complex:
    """Polarized derivative of the stiffness form, <K_dot f, g>."""
    conn = f.conn
    grid = f.grid
    m = f.m
    d = grid.dim
    total = 0.0 + 0.0j
    if isinstance(var, MetricVariation):
        if d == 2:
            return 0.0 + 0.0j
        rate = var.u_dot * (d - 2) * np.exp((d - 2) * grid.u)
        for a in range(d):
            w_dot = grid.h ** (d - 2) * 0.5 * (rate + np.roll(rate, -1, axis=a))
            df, _ = _edge_diff(f.values, conn, m, a)
            dg, _ = _edge_diff(g.values, conn, m, a)
            total += np.sum(w_dot * df * np.conj(dg))
        return complex(total)
    if isinstance(var, ConnectionVariation):
        for a in range(d):
            w = edge_weight(grid, a)
            phi = m * var.beta_dot[a]
            tf = np.exp(-1j * m * conn.link_angle[a]) * f.values
            g_j = np.roll(g.values, -1, axis=a)
            tg = np.exp(-1j * m * conn.link_angle[a]) * g.values
            f_j = np.roll(f.values, -1, axis=a)
            total += np.sum(1j * phi * w * (tf * np.conj(g_j) - f_j * np.conj(tg)))
        return complex(total)
    raise TypeError(f"unknown variation type: {type(var)!r}")


def m_dot_form(var, f: Section, g: Section) -> complex:
    """Polarized derivative of the mass form, <M_dot f, g>."""
    if isinstance(var, ConnectionVariation):
        return 0.0 + 0.0j
    grid = f.grid
    m_dot = grid.dim * var.u_dot * grid.volume_weight
    return complex(np.sum(m_dot * f.values * np.conj(g.values)))


def _check_simple(eig: EigenPair, neighbors, gap_tol: float):
    if neighbors is None:
        return
    lams = [e.lam if isinstance(e, EigenPair) else float(e) for e in neighbors]
    close = [l for l in lams if l != eig.lam and abs(l - eig.lam) < gap_tol * (1.0 + eig.lam)]
    if close:
        raise DegenerateEigenvalueError(eig.lam, [eig.lam] + close)


def metric_first_order_shift(eig: EigenPair, var: MetricVariation,
                             neighbors=None, gap_tol: float = 1e-6) -> float:
    """First-order eigenvalue rate along a conformal metric direction.

    Requires a simple eigenvalue; pass the other eigenvalues of the same
    solve as ``neighbors`` to enforce the simplicity check.  The section is
    renormalized in the M-inner product before evaluation.
    """
    _check_simple(eig, neighbors, gap_tol)
    f = eig.section.normalized()
    q_dot = float(np.real(k_dot_form(var, f, f)))
    n_dot = float(np.real(m_dot_form(var, f, f)))
    return q_dot - eig.lam * n_dot


def connection_first_order_shift(eig: EigenPair, var: ConnectionVariation,
                                 neighbors=None, gap_tol: float = 1e-6) -> float:
    """First-order eigenvalue rate along a flux-preserving connection direction."""
    _check_simple(eig, neighbors, gap_tol)
    f = eig.section.normalized()
    return float(np.real(k_dot_form(var, f, f)))


def conformal_identity_shift(eig: EigenPair, var: MetricVariation) -> float:
    """The d = 2 closed form -2 * lam * integral(u_dot |f|^2 dV).

    In two dimensions the stiffness is conformally invariant, so the entire
    first-order shift comes from the moving volume; this quadrature is the
    independent check of that identity.
    """
    f = eig.section.normalized()
    w = f.grid.volume_weight
    return -2.0 * eig.lam * float(np.sum(var.u_dot * np.abs(f.values) ** 2 * w))


def continuum_shift_quadrature(eig: EigenPair, var) -> float:
    """Continuum-style rate formula evaluated by site-centered quadrature.

    Metric direction: (d-2) * int u_dot |D f|^2 dV - lam * d * int u_dot
    |f|^2 dV; connection direction: 2m * int Im(conj(f) <D f, beta_dot>) dV,
    with D the gauge-covariant derivative and the inner products taken in the
    conformal cometric.  This discretizes the analytic rate expressions
    independently of the form derivative; the two agree up to quadrature
    error and are reported side by side.
    """
    f = eig.section.normalized()
    grid = f.grid
    conn = f.conn
    m = f.m
    d = grid.dim
    h = grid.h
    vol = grid.volume_weight
    conf = np.exp(-2.0 * grid.u)

    if isinstance(var, MetricVariation):
        grad_sq = np.zeros(grid.shape)
        for a in range(d):
            diff, _ = _edge_diff(f.values, conn, m, a)
            e2 = np.abs(diff) ** 2 / h ** 2
            grad_sq += 0.5 * (e2 + np.roll(e2, 1, axis=a))
        stiff = (d - 2) * float(np.sum(var.u_dot * conf * grad_sq * vol))
        mass = d * float(np.sum(var.u_dot * np.abs(f.values) ** 2 * vol))
        return stiff - eig.lam * mass
    if isinstance(var, ConnectionVariation):
        total = 0.0
        for a in range(d):
            _, transported = _edge_diff(f.values, conn, m, a)
            pair = np.imag(np.conj(transported) * np.roll(f.values, -1, axis=a)) / h
            pair_site = 0.5 * (pair + np.roll(pair, 1, axis=a))
            bdot = var.beta_dot[a] / h
            bdot_site = 0.5 * (bdot + np.roll(bdot, 1, axis=a))
            total += float(np.sum(conf * pair_site * bdot_site * vol))
        return 2.0 * m * total
    raise TypeError(f"unknown variation type: {type(var)!r}")


def shift_comparison_report(eig: EigenPair, var, neighbors=None) -> dict:
    """Form derivative next to the continuum-formula quadrature."""
    if isinstance(var, MetricVariation):
        form = metric_first_order_shift(eig, var, neighbors=neighbors)
    else:
        form = connection_first_order_shift(eig, var, neighbors=neighbors)
    cont = continuum_shift_quadrature(eig, var)
    return {
        "form_derivative": form,
        "continuum_quadrature": cont,
        "abs_difference": abs(form - cont),
    }


def cluster_shift_matrix(eigs, indices, var) -> np.ndarray:
    """Hermitian first-order matrix of a degenerate cluster.

    Entry (i, j) is <(K_dot - mean_lam * M_dot) f_j, f_i> on the cluster
    members; its eigenvalues are the first-order splittings and its trace is
    the first-order rate of the cluster's eigenvalue sum.
    """
    members = [eigs[i] for i in indices]
    lam_bar = float(np.mean([e.lam for e in members]))
    size = len(members)
    h1 = np.zeros((size, size), dtype=complex)
    for i in range(size):
        for j in range(size):
            fi = members[i].section
            fj = members[j].section
            h1[i, j] = k_dot_form(var, fj, fi) - lam_bar * m_dot_form(var, fj, fi)
    return 0.5 * (h1 + h1.conj().T)


# ---------------------------------------------------------------------------
# reassembly at finite parameter and finite differences
# ---------------------------------------------------------------------------

def perturbed_operator(op: OperatorPair, var, t: float) -> OperatorPair:
    """Assemble the pencil at parameter t along the given variation."""
    grid = op.grid
    conn = op.conn
    if isinstance(var, MetricVariation):
        new_u = grid.u + t * var.u_dot
        new_grid = BaseGrid(dim=grid.dim, n=grid.n, u=new_u, coords=grid.coords)
        new_conn = Connection(grid=new_grid, flux=conn.flux,
                              link_angle=conn.link_angle, beta_edge=conn.beta_edge)
        return assemble_forms(new_grid, new_conn, op.m)
    if isinstance(var, ConnectionVariation):
        new_angles = tuple(th + t * bd for th, bd in zip(conn.link_angle, var.beta_dot))
        new_beta = tuple(be + t * bd for be, bd in zip(conn.beta_edge, var.beta_dot))
        new_conn = Connection(grid=grid, flux=conn.flux,
                              link_angle=new_angles, beta_edge=new_beta)
        return assemble_forms(grid, new_conn, op.m)
    raise TypeError(f"unknown variation type: {type(var)!r}")


def finite_difference_shift(op: OperatorPair, index: int, var, eps: float = DEFAULT_FD_EPS,
                            k: int | None = None, tol: float = 1e-8, seed: int = 0) -> float:
    """Central difference (lam(eps) - lam(-eps)) / (2 eps) for one sorted index."""
    k_eff = k if k is not None else index + 1
    plus = lowest_eigenpairs(perturbed_operator(op, var, eps), k_eff, tol=tol, seed=seed)
    minus = lowest_eigenpairs(perturbed_operator(op, var, -eps), k_eff, tol=tol, seed=seed)
    return (plus[index].lam - minus[index].lam) / (2.0 * eps)


def finite_difference_report(op: OperatorPair, eigs, index: int, var,
                             eps: float = DEFAULT_FD_EPS, tol: float = 1e-8,
                             seed: int = 0) -> dict:
    """Compare the first-order formula against central differences.

    Returns the formula value, the finite differences at eps and eps/2, the
    relative error at eps, and the Richardson ratio err(eps) / err(eps/2)
    (near 4 for the O(eps^2) truncation of a smooth eigenvalue branch).
    """
    eig = eigs[index]
    neighbors = [e.lam for e in eigs]
    if isinstance(var, MetricVariation):
        shift = metric_first_order_shift(eig, var, neighbors=neighbors)
    else:
        shift = connection_first_order_shift(eig, var, neighbors=neighbors)
    k_eff = min(max(index + 2, 4), op.dim // 4)
    fd1 = finite_difference_shift(op, index, var, eps, k=k_eff, tol=tol, seed=seed)
    fd2 = finite_difference_shift(op, index, var, eps / 2, k=k_eff, tol=tol, seed=seed)
    err1 = abs(fd1 - shift)
    err2 = abs(fd2 - shift)
    return {
        "shift": shift,
        "fd": fd1,
        "fd_half": fd2,
        "eps": eps,
        "rel_err": err1 / max(abs(shift), 1e-300),
        "richardson_ratio": err1 / err2 if err2 > 0 else float("inf"),
    }


# ---------------------------------------------------------------------------
# degeneracy splitting experiments
# ---------------------------------------------------------------------------

@dataclass
class SplitReport:
    """Before/after cluster structure of a seeded splitting run."""

    direction: str
    epsilon: float
    seed: int
    lambdas_before: list
    lambdas_after: list
    sizes_before: list
    sizes_after: list
    lowest_cluster_size_before: int
    min_gap_after: float
    gap_over_epsilon: float
    split: bool

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "lambdas_before": self.lambdas_before,
            "lambdas_after": self.lambdas_after,
            "sizes_before": self.sizes_before,
            "sizes_after": self.sizes_after,
            "lowest_cluster_size_before": self.lowest_cluster_size_before,
            "min_gap_after": self.min_gap_after,
            "gap_over_epsilon": self.gap_over_epsilon,
            "split": self.split,
        }


def seeded_variations(grid: BaseGrid, seed: int, direction: str):
    """Unit-scale random deformation directions for a splitting run."""
    out = []
    if direction in ("metric", "both"):
        out.append(MetricVariation.from_spec(
            grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": seed, "max_mode": 2, "terms": 4}
        ))
    if direction in ("connection", "both"):
        out.append(ConnectionVariation.from_spec(
            grid, {"kind": "random_fourier_form", "amplitude": 1.0, "seed": seed + 500,
                   "max_mode": 2, "terms": 4}
        ))
    if direction == "pure_gauge":
        chi = scalar_field_callable(
            {"kind": "random_fourier", "amplitude": 1.0, "seed": seed, "max_mode": 2, "terms": 4}
        )(grid.coords)
        out.append(ConnectionVariation.pure_gauge(grid, np.asarray(chi)))
    if not out:
        raise ValueError(f"unknown direction {direction!r}")
    return out


def splitting_experiment(op: OperatorPair, epsilon: float, seed: int,
                         direction: str = "both", k: int = 6,
                         gap_tol: float = 1e-6, tol: float = 1e-8,
                         solver_seed: int = 0) -> SplitReport:
    """Perturb a configuration with a degenerate lowest cluster and record gaps.

    Applies the seeded random deformation (metric, connection, both, or
    pure_gauge) at size epsilon, re-solves, and reports the cluster structure
    before and after together with the minimal gap inside the former lowest
    cluster.
    """
    before = lowest_eigenpairs(op, k, tol=tol, seed=solver_seed)
    rep_before = detect_clusters(before, gap_tol)
    size0 = rep_before.groups[0].size

    pert = op
    for var in seeded_variations(op.grid, seed, direction):
        pert = perturbed_operator(pert, var, epsilon)
    after = lowest_eigenpairs(pert, k, tol=tol, seed=solver_seed)
    rep_after = detect_clusters(after, gap_tol)

    lam_after = [e.lam for e in after]
    if size0 >= 2:
        gaps = np.diff(lam_after[:size0])
        min_gap = float(np.min(gaps)) if len(gaps) else 0.0
    else:
        min_gap = float("nan")
    after_sizes_in_block = detect_clusters(lam_after[:size0], gap_tol).sizes if size0 >= 2 else [1]
    split = all(sz == 1 for sz in after_sizes_in_block)
    return SplitReport(
        direction=direction,
        epsilon=epsilon,
        seed=seed,
        lambdas_before=[e.lam for e in before],
        lambdas_after=lam_after,
        sizes_before=rep_before.sizes,
        sizes_after=rep_after.sizes,
        lowest_cluster_size_before=size0,
        min_gap_after=min_gap,
        gap_over_epsilon=min_gap / epsilon if epsilon > 0 else float("nan"),
        split=split,
    )
