"""Lifting eigensections to the total space and measuring nodal topology.

A weight-m eigensection f on the base grid lifts to the real scalar

    values(i, t) = Re f_i * cos(m*theta_t) + Im f_i * sin(m*theta_t)

on the product lattice (base site, fiber sample), which samples the real
part of the equivariant eigenfunction.  The bundle topology enters through
the twisted adjacency: crossing the x_a wrap at transverse index j shifts
the fiber index by (n_theta/n) * sum_{b>a} c[a,b] * j_b, an exact integer
because n_theta is a multiple of n.

On this twisted lattice the module counts nodal domains (sign components
under face adjacency), nodal-set components (mixed-sign cells glued across
shared faces), the per-fiber zero count 2|m| away from section zeros, the
per-plaquette winding of the section (whose total equals the bundle degree
m*c in dimension 2), and a regular-value margin: the minimal gradient norm
over near-nodal cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .geometry import Connection, Section

ZERO_THRESHOLD = 1e-13


def auto_n_theta(n: int, m: int) -> int:
    """Smallest multiple of n that is at least 8 * max(|m|, 1)."""
    target = 8 * max(abs(m), 1)
    return n * int(np.ceil(target / n))


@dataclass
class LiftedField:
    """Sampled Re(phi) on the total-space lattice with twisted adjacency."""

    m: int
    conn: Connection = field(repr=False)
    n_theta: int
    values: np.ndarray = field(repr=False)

    @property
    def grid(self):
        return self.conn.grid

    @property
    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def shifted(self, arr: np.ndarray, axis: int, step: int = 1) -> np.ndarray:
        """Array of neighbor entries along one lattice axis, twist-corrected.

        ``axis`` in [0, d) walks the base with the fiber-index shift applied
        on the wrapped slice; ``axis == d`` walks the fiber.  Works on any
        array shaped like ``values`` (values, flat ids, masks).
        """
        d = self.grid.dim
        if axis == d:
            return np.roll(arr, -step, axis=d)
        out = np.roll(arr, -step, axis=axis)
        n = self.grid.n
        sel = [slice(None)] * d
        sel[axis] = n - 1 if step == 1 else 0
        shift = self.conn.fiber_shift(axis, self.n_theta)[tuple(sel)]
        block = out[tuple(sel)]
        t_idx = np.arange(self.n_theta).reshape((1,) * (d - 1) + (-1,))
        t_idx = (t_idx + step * shift[..., None]) % self.n_theta
        out[tuple(sel)] = np.take_along_axis(block, t_idx, axis=-1)
        return out

    def corner_stack(self, arr: np.ndarray) -> list:
        """All 2^(d+1) corner arrays of the lattice cells anchored at each site.

        Shifts are composed in ascending axis order (base axes, then fiber);
        at wrap cells the composition order fixes the one-unit fiber shear
        inherent to the twisted lattice.
        """
        corners = [arr]
        for axis in range(self.grid.dim + 1):
            corners = corners + [self.shifted(c, axis, 1) for c in corners]
        return corners

    def check_against_section(self, s: Section) -> float:
        """Max deviation of the stored values from Re(f * exp(-i*m*theta))."""
        ref = np.real(s.values[..., None] * np.exp(-1j * self.m * self.thetas))
        return float(np.max(np.abs(self.values - ref)))


def lift(s: Section, n_theta_request: int | None = None) -> LiftedField:
    """Sample the lifted real part of a section on the total-space lattice.

    The automatic fiber resolution is the smallest multiple of n that is at
    least 8 * max(|m|, 1); an explicit request must keep every twist shift an
    exact integer.
    """
    n = s.grid.n
    n_theta = auto_n_theta(n, s.m) if n_theta_request is None else int(n_theta_request)
    conn = s.conn
    has_twist = any(np.any(conn.flux[a, a + 1:]) for a in range(s.grid.dim))
    if has_twist and n_theta % n != 0:
        raise ValueError(f"n_theta = {n_theta} must be a multiple of n = {n} for integer twist shifts")
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    a = np.real(s.values)[..., None]
    b = np.imag(s.values)[..., None]
    values = a * np.cos(s.m * theta) + b * np.sin(s.m * theta)
    return LiftedField(m=s.m, conn=conn, n_theta=n_theta, values=values)


def _component_count(ids_from, ids_to, member_mask, size):
    """Connected components of the subgraph induced by member_mask."""
    graph = sp.coo_matrix(
        (np.ones(len(ids_from), dtype=np.int8), (ids_from, ids_to)), shape=(size, size)
    )
    _, labels = connected_components(graph, directed=False)
    return len(np.unique(labels[member_mask]))


def nodal_domains(field: LiftedField, zero_threshold: float = ZERO_THRESHOLD) -> int:
    """Number of sign domains of the lifted field under face adjacency.

    Sites with |value| < zero_threshold belong to no domain.  Components of
    the positive and of the negative set are counted separately and summed.
    """
    v = field.values
    pos = v > zero_threshold
    neg = v < -zero_threshold
    if not pos.any() and not neg.any():
        raise ValueError("degenerate all-zero field")
    size = v.size
    ids = np.arange(size).reshape(v.shape)
    rows, cols = [], []
    for axis in range(field.grid.dim + 1):
        nb_ids = field.shifted(ids, axis, 1)
        nb_pos = field.shifted(pos, axis, 1)
        nb_neg = field.shifted(neg, axis, 1)
        mask = (pos & nb_pos) | (neg & nb_neg)
        rows.append(ids[mask])
        cols.append(nb_ids[mask])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    graph = sp.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    _, labels = connected_components(graph, directed=False)
    n_pos = len(np.unique(labels[pos.ravel()])) if pos.any() else 0
    n_neg = len(np.unique(labels[neg.ravel()])) if neg.any() else 0
    return n_pos + n_neg


def nodal_cell_mask(field: LiftedField, zero_threshold: float = ZERO_THRESHOLD) -> np.ndarray:
    """Cells whose corner values straddle (or touch) zero."""
    corners = field.corner_stack(field.values)
    cmin = np.minimum.reduce(corners)
    cmax = np.maximum.reduce(corners)
    return (cmin <= zero_threshold) & (cmax >= -zero_threshold)


def nodal_set_components(field: LiftedField, zero_threshold: float = ZERO_THRESHOLD) -> int:
    """Number of components of the mixed-sign cell set under face adjacency."""
    mask = nodal_cell_mask(field, zero_threshold)
    if not mask.any():
        return 0
    size = mask.size
    ids = np.arange(size).reshape(mask.shape)
    rows, cols = [], []
    for axis in range(field.grid.dim + 1):
        nb_ids = field.shifted(ids, axis, 1)
        nb_mask = field.shifted(mask, axis, 1)
        keep = mask & nb_mask
        rows.append(ids[keep])
        cols.append(nb_ids[keep])
    return _component_count(np.concatenate(rows), np.concatenate(cols), mask.ravel(), size)


def regularity_margin(field: LiftedField, zero_threshold: float = ZERO_THRESHOLD) -> float:
    """Minimal centered-difference gradient norm over near-nodal cells.

    The gradient uses grid units (1/h along base axes, n_theta/(2*pi) along
    the fiber); a margin bounded away from zero across resolutions is the
    numerical certificate that zero is a regular value.  Returns inf when the
    field has no mixed-sign cells.
    """
    d = field.grid.dim
    h = field.grid.h
    dtheta = 2.0 * np.pi / field.n_theta
    norm_sq = np.zeros_like(field.values)
    for axis in range(d + 1):
        step = h if axis < d else dtheta
        grad = (field.shifted(field.values, axis, 1) - field.shifted(field.values, axis, -1)) / (2 * step)
        norm_sq += grad ** 2
    norm = np.sqrt(norm_sq)
    mask = nodal_cell_mask(field, zero_threshold)
    if not mask.any():
        return float("inf")
    corner_min = np.minimum.reduce(field.corner_stack(norm))
    return float(np.min(corner_min[mask]))


def fiber_zero_count(a: float, b: float, m: int, tau: float):
    """Zeros of a*cos(m*theta) + b*sin(m*theta) on [0, 2*pi), or None.

    Away from section zeros (a^2 + b^2 > tau^2) the roots are computed from
    the arctangent formula and verified by evaluation; there are exactly
    2|m| of them.  Returns None over a section zero.
    """
    if m == 0:
        raise ValueError("fiber zero count requires m != 0")
    r2 = a * a + b * b
    if r2 <= tau * tau:
        return None
    mm = abs(m)
    bb = b if m > 0 else -b
    # a cos + b sin = R cos(m theta - psi) with psi = atan2(b, a)
    psi = np.arctan2(bb, a)
    k = np.arange(2 * mm)
    roots = (psi + np.pi / 2 + k * np.pi) / mm
    roots = np.mod(roots, 2.0 * np.pi)
    vals = a * np.cos(m * roots) + b * np.sin(m * roots)
    ok = np.abs(vals) <= 1e-9 * np.sqrt(r2)
    return int(np.count_nonzero(ok))


@dataclass
class CoveringSurvey:
    histogram: dict
    undefined: int
    sample_count: int
    tau: float

    @property
    def undefined_fraction(self) -> float:
        return self.undefined / self.sample_count


def covering_survey(s: Section, sample_count: int, tau: float | None = None,
                    seed: int = 0) -> CoveringSurvey:
    """Histogram of fiber zero counts at random base points.

    ``tau`` defaults to 1e-6 * max|f|; samples with |f| <= tau are reported
    as undefined (fibers over section zeros) rather than counted.
    """
    if s.m == 0:
        raise ValueError("covering survey requires m != 0")
    flat = s.values.ravel()
    if tau is None:
        tau = 1e-6 * float(np.max(np.abs(flat)))
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, flat.size, size=sample_count)
    hist: dict = {}
    undefined = 0
    for p in picks:
        z = flat[p]
        count = fiber_zero_count(float(np.real(z)), float(np.imag(z)), s.m, tau)
        if count is None:
            undefined += 1
        else:
            hist[count] = hist.get(count, 0) + 1
    return CoveringSurvey(histogram=hist, undefined=undefined,
                          sample_count=sample_count, tau=tau)


def _unwrapped_neighbor(values: np.ndarray, conn: Connection, m: int, axis: int) -> np.ndarray:
    """Section values at the +e_axis neighbor in the unwrapped chart.

    Wrap entries are multiplied by the boundary twist phase, so the result
    is the analytic continuation of the section past x_a = 1 (1-periodic in
    the twist because the flux is integral).
    """
    out = np.roll(values, -1, axis=axis)
    n = conn.grid.n
    sel = [slice(None)] * conn.grid.dim
    sel[axis] = n - 1
    out[tuple(sel)] = out[tuple(sel)] * conn.twist_phase(axis, m)[tuple(sel)]
    return out


def section_zero_winding(s: Section) -> tuple:
    """Per-plaquette winding of arg(f); returns (zero count, total winding).

    Only defined on 2-dimensional bases.  Corner values on wrap plaquettes
    are twist-corrected, so the winding is a gauge-invariant integer per
    plaquette; the total equals the bundle degree m * c[0,1].
    """
    if s.grid.dim != 2:
        raise ValueError("plaquette winding is defined for 2-dimensional bases")
    v = s.values
    vmax = float(np.max(np.abs(v)))
    if vmax == 0.0 or np.min(np.abs(v)) < 1e-14 * vmax:
        raise ValueError(
            "section vanishes on a plaquette corner (relative threshold 1e-14); "
            "perturb the configuration or use a different eigensection"
        )
    z00 = v
    z10 = _unwrapped_neighbor(v, s.conn, s.m, 0)
    z01 = _unwrapped_neighbor(v, s.conn, s.m, 1)
    z11 = _unwrapped_neighbor(z10, s.conn, s.m, 1)
    # traversal orientation chosen so that a section of degree m*c carries
    # total winding +m*c under the gauge convention of this package
    loop = (
        np.angle(z01 / z00)
        + np.angle(z11 / z01)
        + np.angle(z10 / z11)
        + np.angle(z00 / z10)
    )
    w = np.round(loop / (2.0 * np.pi)).astype(int)
    return int(np.count_nonzero(w)), int(np.sum(w))


@dataclass
class NodalReport:
    """Topology measurements of one lifted eigenfunction."""

    m: int
    n: int
    n_theta: int
    nodal_domain_count: int
    nodal_set_component_count: int
    covering_histogram: dict | None
    covering_undefined: int | None
    section_zero_count: int | None
    total_winding: int | None
    regularity_margin: float
    zero_threshold: float
    tau: float | None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "n_theta": self.n_theta,
            "nodal_domain_count": self.nodal_domain_count,
            "nodal_set_component_count": self.nodal_set_component_count,
            "covering_histogram": (
                {str(k): v for k, v in self.covering_histogram.items()}
                if self.covering_histogram is not None else None
            ),
            "covering_undefined": self.covering_undefined,
            "section_zero_count": self.section_zero_count,
            "total_winding": self.total_winding,
            "regularity_margin": self.regularity_margin,
            "zero_threshold": self.zero_threshold,
            "tau": self.tau,
        }


def analyze_nodal(s: Section, n_theta: int | None = None, tau: float | None = None,
                  sample_count: int = 500, zero_threshold: float = ZERO_THRESHOLD,
                  seed: int = 0) -> NodalReport:
    """Full nodal pipeline for one section: lift, count, survey, margin."""
    fld = lift(s, n_theta)
    domains = nodal_domains(fld, zero_threshold)
    components = nodal_set_components(fld, zero_threshold)
    margin = regularity_margin(fld, zero_threshold)
    if s.m != 0:
        survey = covering_survey(s, sample_count, tau, seed=seed)
        hist, undef, tau_used = survey.histogram, survey.undefined, survey.tau
    else:
        hist, undef, tau_used = None, None, tau
    if s.grid.dim == 2 and s.m != 0:
        try:
            zero_count, winding = section_zero_winding(s)
        except ValueError:
            # section vanishes on a grid corner (degenerate or symmetric
            # states); the rest of the report is still meaningful
            zero_count, winding = None, None
    else:
        zero_count, winding = None, None
    return NodalReport(
        m=s.m, n=s.grid.n, n_theta=fld.n_theta,
        nodal_domain_count=domains, nodal_set_component_count=components,
        covering_histogram=hist, covering_undefined=undef,
        section_zero_count=zero_count, total_winding=winding,
        regularity_margin=margin, zero_threshold=zero_threshold, tau=tau_used,
    )
