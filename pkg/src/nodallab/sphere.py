"""Equivariant spherical harmonics on S^2 under a rotation action with fixed poles.

The rotation action around the polar axis is not free: both poles are fixed,
every weight-m harmonic vanishes there, and zero fails to be a regular value
of Re Y_N^m once m >= 2 (and at the latitude-meridian crossings for every m
with N > m).  The field

    Re Y_N^m = sqrt(2N+1) * P_N^m(cos phi) * cos(m theta)

factors into a latitude part with N - m interior zero circles and a meridian
part with 2m zero lines through the poles, so the nodal set is connected
while the sphere splits into 2m(N-m+1) nodal domains with 2m(N-m) + 2
singular points (crossings plus poles), in contrast to the two-domain law on
free circle bundles.  Counts are measured on an equirectangular grid and
reported next to this product-structure oracle and to the coarser N*m
expressions, with mismatches flagged rather than hidden.

Associated Legendre values use the standard upward recurrence with the
Condon-Shortley phase, P_m^m(x) = (-1)^m (2m-1)!! (1-x^2)^(m/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


def legendre_p(N: int, m: int, x):
    """Associated Legendre value P_N^m(x) by upward recurrence from P_m^m.

    Requires 0 <= m <= N and |x| <= 1; Condon-Shortley phase included, so
    P_1^1(x) = -sqrt(1 - x^2).  Accepts scalars or arrays.
    """
    if not 0 <= m <= N:
        raise ValueError(f"need 0 <= m <= N, got N = {N}, m = {m}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0 + 1e-15):
        raise ValueError("argument outside [-1, 1]")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(np.clip(x_arr, -1.0, 1.0))

    # P_m^m = (-1)^m (2m-1)!! (1-x^2)^(m/2)
    pmm = np.ones_like(x_arr)
    if m > 0:
        s = np.sqrt((1.0 - x_arr) * (1.0 + x_arr))
        fact = 1.0
        for i in range(1, m + 1):
            pmm = -pmm * fact * s
            fact += 2.0
    if N == m:
        return float(pmm[0]) if scalar else pmm.reshape(np.shape(x))

    pmm1 = x_arr * (2 * m + 1) * pmm
    if N == m + 1:
        return float(pmm1[0]) if scalar else pmm1.reshape(np.shape(x))
    for ell in range(m + 2, N + 1):
        pmm, pmm1 = pmm1, (x_arr * (2 * ell - 1) * pmm1 - (ell + m - 1) * pmm) / (ell - m)
    return float(pmm1[0]) if scalar else pmm1.reshape(np.shape(x))


@dataclass
class SphereHarmonic:
    """Re Y_N^m sampled on an equirectangular grid with pole rows."""

    N: int
    m: int
    n_phi: int
    n_theta: int
    values: np.ndarray = field(repr=False)
    legendre_row: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)


def sphere_harmonic_field(N: int, m: int, n_phi: int, n_theta: int) -> SphereHarmonic:
    """Sample sqrt(2N+1) * P_N^m(cos phi) * cos(m theta); poles are rows 0 and -1."""
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got N = {N}, m = {m}")
    if n_phi < 5 or n_theta < 5:
        raise ValueError("grid too coarse")
    phi = np.linspace(0.0, np.pi, n_phi)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    p_row = legendre_p(N, m, np.cos(phi))
    values = np.sqrt(2 * N + 1) * p_row[:, None] * np.cos(m * theta)[None, :]
    return SphereHarmonic(N=N, m=m, n_phi=n_phi, n_theta=n_theta,
                          values=values, legendre_row=p_row, phi=phi, theta=theta)


@dataclass
class SphereNodalReport:
    """Measured sphere nodal counts next to the product-structure oracle."""

    N: int
    m: int
    n_phi: int
    n_theta: int
    component_count: int
    domain_count: int
    singular_point_count: int
    margin: float
    latitude_zero_circles: int
    predicted_domains: int
    predicted_singular_points: int
    nm_rule_domains: int
    nm_rule_singular_points: int
    domain_count_matches_oracle: bool
    nm_rule_matches: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def _sphere_components(mask: np.ndarray, wrap_axis: int = 1) -> int:
    """Connected components of True entries under 4-adjacency, theta wraps."""
    if not mask.any():
        return 0
    size = mask.size
    ids = np.arange(size).reshape(mask.shape)
    rows, cols = [], []
    down = np.roll(ids, -1, axis=0)
    keep = mask & np.roll(mask, -1, axis=0)
    keep[-1, :] = False  # phi does not wrap
    rows.append(ids[keep]); cols.append(down[keep])
    right = np.roll(ids, -1, axis=1)
    keep = mask & np.roll(mask, -1, axis=1)
    rows.append(ids[keep]); cols.append(right[keep])
    graph = sp.coo_matrix(
        (np.ones(sum(len(r) for r in rows), dtype=np.int8),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    _, labels = connected_components(graph, directed=False)
    return len(np.unique(labels[mask.ravel()]))


def sphere_nodal_counts(N: int, m: int, n_phi: int | None = None,
                        n_theta: int | None = None) -> SphereNodalReport:
    """Count nodal-set components, domains, and singular points of Re Y_N^m.

    Defaults: n_phi = 16N + 1 rows (pole to pole), n_theta = 16m + 2 columns
    (chosen so meridian zeros of cos(m theta) fall between grid lines).
    Raises when the grid fails to resolve the N - m latitude zero circles.
    """
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got N = {N}, m = {m}")
    if n_phi is None:
        n_phi = 16 * N + 1
    if n_theta is None:
        n_theta = 16 * m + 2
    if n_phi < 16 * N:
        raise ValueError(f"n_phi = {n_phi} too coarse, need at least {16 * N}")
    har = sphere_harmonic_field(N, m, n_phi, n_theta)
    v = har.values
    thresh = 1e-13 * float(np.max(np.abs(v)))

    # resolution check: interior sign changes of the latitude factor
    p_int = har.legendre_row[1:-1]
    lat_changes = int(np.count_nonzero(p_int[:-1] * p_int[1:] < 0))
    if lat_changes != N - m:
        raise ValueError(
            f"grid too coarse: resolved {lat_changes} latitude zero circles, expected {N - m}"
        )

    # nodal domains: sign components of the site graph, zero sites excluded
    pos = v > thresh
    neg = v < -thresh
    size = v.size
    ids = np.arange(size).reshape(v.shape)
    rows, cols = [], []
    for axis, wraps in ((0, False), (1, True)):
        nb = np.roll(ids, -1, axis=axis)
        same = (pos & np.roll(pos, -1, axis=axis)) | (neg & np.roll(neg, -1, axis=axis))
        if not wraps:
            same[-1, :] = False
        rows.append(ids[same]); cols.append(nb[same])
    graph = sp.coo_matrix(
        (np.ones(sum(len(r) for r in rows), dtype=np.int8),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    _, labels = connected_components(graph, directed=False)
    n_pos = len(np.unique(labels[pos.ravel()])) if pos.any() else 0
    n_neg = len(np.unique(labels[neg.ravel()])) if neg.any() else 0
    domain_count = n_pos + n_neg

    # nodal cells: corner interval straddles zero (pole rows count as zeros,
    # which glues the meridian lines together at the poles as on the sphere)
    c00 = v[:-1, :]
    c10 = v[1:, :]
    c01 = np.roll(v, -1, axis=1)[:-1, :]
    c11 = np.roll(v, -1, axis=1)[1:, :]
    cmin = np.minimum.reduce([c00, c10, c01, c11])
    cmax = np.maximum.reduce([c00, c10, c01, c11])
    nodal_cells = (cmin <= thresh) & (cmax >= -thresh)
    component_count = _sphere_components(nodal_cells)

    # singular cells: both factors change sign across the cell
    p_row = har.legendre_row
    lat_flip = (p_row[:-1] * p_row[1:])[:, None] < 0
    cosm = np.cos(m * har.theta)
    mer_flip = (cosm * np.roll(cosm, -1))[None, :] < 0
    crossing_cells = int(np.count_nonzero(lat_flip & mer_flip))
    singular_point_count = crossing_cells + 2

    # regular-value margin: min gradient norm over nodal cells, interior rows
    dphi = np.pi / (n_phi - 1)
    dtheta = 2.0 * np.pi / n_theta
    grad_phi = np.full_like(v, np.inf)
    grad_theta = np.full_like(v, np.inf)
    grad_phi[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * dphi)
    sin_phi = np.sin(har.phi[1:-1])[:, None]
    grad_theta[1:-1, :] = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1))[1:-1, :] / (
        2 * dtheta * sin_phi
    )
    norm = np.hypot(np.where(np.isfinite(grad_phi), grad_phi, 0.0),
                    np.where(np.isfinite(grad_theta), grad_theta, 0.0))
    norm[0, :] = np.inf   # pole rows carry no centered gradient
    norm[-1, :] = np.inf
    n00 = norm[:-1, :]
    n10 = norm[1:, :]
    n01 = np.roll(norm, -1, axis=1)[:-1, :]
    n11 = np.roll(norm, -1, axis=1)[1:, :]
    corner_min = np.minimum.reduce([n00, n10, n01, n11])
    margin = float(np.min(corner_min[nodal_cells])) if nodal_cells.any() else float("inf")

    predicted_domains = 2 * m * (N - m + 1)
    predicted_singular = 2 * m * (N - m) + 2
    return SphereNodalReport(
        N=N, m=m, n_phi=n_phi, n_theta=n_theta,
        component_count=component_count,
        domain_count=domain_count,
        singular_point_count=singular_point_count,
        margin=margin,
        latitude_zero_circles=lat_changes,
        predicted_domains=predicted_domains,
        predicted_singular_points=predicted_singular,
        nm_rule_domains=N * m,
        nm_rule_singular_points=N * m,
        domain_count_matches_oracle=domain_count == predicted_domains,
        nm_rule_matches=(
            predicted_domains == N * m and predicted_singular == N * m
        ),
    )


def fixed_point_vanishing_check(N: int, m: int, delta: float = 1e-5,
                                n_theta: int = 64) -> dict:
    """Value and central-difference gradient of Re Y_N^m at the fixed points.

    The difference is taken across each pole along meridian geodesics,
    [f(delta, theta) - f(delta, theta + pi)] / (2 delta), maximized over
    theta.  The pole value vanishes for every m >= 1; the gradient estimate
    vanishes for m >= 2 but stays of order one for m = 1, where the pole is
    a regular point of the real part (Re Y_N^1 behaves like a linear
    coordinate there).
    """
    if m < 1:
        raise ValueError("fixed-point check requires m >= 1")
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    scale = np.sqrt(2 * N + 1)

    out = {}
    for pole, x_near in (("north", np.cos(delta)), ("south", np.cos(np.pi - delta))):
        x_pole = 1.0 if pole == "north" else -1.0
        value = scale * legendre_p(N, m, x_pole)
        ring = scale * legendre_p(N, m, x_near) * np.cos(m * theta)
        opposite = scale * legendre_p(N, m, x_near) * np.cos(m * (theta + np.pi))
        grad = np.max(np.abs(ring - opposite)) / (2.0 * delta)
        out[f"{pole}_value"] = float(abs(value))
        out[f"{pole}_gradient_estimate"] = float(grad)
    out["delta"] = delta
    out["gradient_vanishes"] = bool(
        max(out["north_gradient_estimate"], out["south_gradient_estimate"]) < 1e-6
    )
    return out
