"""Discretized flat tori, conformal metrics, and U(1) connections with integer flux.

The base manifold is the unit torus [0,1)^d sampled on a uniform n^d grid
(h = 1/n).  A conformal factor exp(2u) rescales the flat metric; each site
carries the volume weight exp(d*u) * h^d.  A connection with antisymmetric
integer flux matrix c is realized by the Landau-type potential

    eta = 2*pi * sum_{a<b} c[a,b] * x_a dx_b   (+ an optional periodic beta),

together with quasi-periodic boundary twists: a weight-m section satisfies

    f(x + e_a) = exp(-2*pi*i*m * sum_{b>a} c[a,b] * x_b) * f(x).

Every edge (i -> i+e_a) stores a weight-1 angle Theta_a[i] such that the
parallel transport of a weight-m section along the edge is
exp(-i*m*Theta_a[i]); wrap edges absorb the boundary twist into Theta.  All
bundle topology lives in these angles: the wrapped plaquette angle sums
reproduce the total flux 2*pi*c[a,b] per coordinate plane exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# scalar-field and one-form specs
# ---------------------------------------------------------------------------

def _random_fourier_callable(amplitude, seed, max_mode=2, terms=4):
    """Seeded random Fourier sum, 1-periodic, with |value| <= amplitude."""
    cache = {}  # modes drawn once per dimension, deterministic in the seed

    def func(x):
        d = len(x)
        if d not in cache:
            r = np.random.default_rng(seed)
            modes = []
            while len(modes) < terms:
                k = r.integers(-max_mode, max_mode + 1, size=d)
                if np.any(k != 0):
                    modes.append(k)
            coeffs = r.normal(size=terms)
            coeffs /= np.sum(np.abs(coeffs))
            phases = r.uniform(0.0, TWO_PI, size=terms)
            cache[d] = (modes, coeffs, phases)
        modes, coeffs, phases = cache[d]
        out = np.zeros(np.broadcast(*x).shape)
        for k, a, p in zip(modes, coeffs, phases):
            arg = np.zeros_like(out)
            for ka, xa in zip(k, x):
                arg = arg + TWO_PI * ka * xa
            out += a * np.cos(arg + p)
        return amplitude * out

    return func


def scalar_field_callable(spec):
    """Turn a scalar-field spec into a callable ``f(x)`` on coordinate stacks.

    Accepted specs: ``None`` (zero), a real number (constant), a callable
    taking the tuple of coordinate meshes, a dict with ``kind`` in
    {"constant", "cosine", "random_fourier"}, or a list of specs (summed).
    """
    if spec is None:
        return lambda x: np.zeros(np.broadcast(*x).shape)
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = float(spec)
        return lambda x: np.full(np.broadcast(*x).shape, value)
    if callable(spec):
        return spec
    if isinstance(spec, (list, tuple)):
        parts = [scalar_field_callable(s) for s in spec]
        return lambda x: sum(p(x) for p in parts)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "constant":
            return scalar_field_callable(float(spec["value"]))
        if kind == "cosine":
            amp = float(spec["amplitude"])
            kvec = [float(k) for k in spec["wavevector"]]
            phase = float(spec.get("phase", 0.0))

            def cosine(x):
                arg = np.zeros(np.broadcast(*x).shape)
                for ka, xa in zip(kvec, x):
                    arg = arg + TWO_PI * ka * xa
                return amp * np.cos(arg + phase)

            return cosine
        if kind == "random_fourier":
            return _random_fourier_callable(
                float(spec["amplitude"]),
                int(spec["seed"]),
                max_mode=int(spec.get("max_mode", 2)),
                terms=int(spec.get("terms", 4)),
            )
        raise ValueError(f"unknown scalar field kind: {kind!r}")
    raise TypeError(f"cannot interpret scalar field spec: {spec!r}")


# ---------------------------------------------------------------------------
# base grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseGrid:
    """Uniform periodic grid on [0,1)^d with conformal metric exp(2u)*delta.

    ``u`` and ``volume_weight`` (= exp(dim*u) * h^dim) are read-only arrays of
    shape (n,)*dim.  Neighbor index arithmetic wraps modulo n on every axis.
    """

    dim: int
    n: int
    u: np.ndarray
    coords: tuple = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @property
    def volume_weight(self) -> np.ndarray:
        return self._volume_weight

    def __post_init__(self):
        vw = np.exp(self.dim * self.u) * self.h ** self.dim
        object.__setattr__(self, "_volume_weight", _freeze(vw))

    def same_mesh(self, other: "BaseGrid") -> bool:
        return self.dim == other.dim and self.n == other.n


def make_base_grid(dim: int, n: int, u_spec=None) -> BaseGrid:
    """Build a BaseGrid with the conformal factor sampled from ``u_spec``.

    Rejects dim not in {2, 3}, n < 8, and conformal factors with
    max |u| > 2 (configuration bound).
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if n < 8:
        raise ValueError(f"n must be at least 8, got {n}")
    axes = [np.arange(n) / n for _ in range(dim)]
    coords = tuple(np.meshgrid(*axes, indexing="ij"))
    u = np.asarray(scalar_field_callable(u_spec)(coords), dtype=float)
    u = np.broadcast_to(u, (n,) * dim).copy()
    bound = float(np.max(np.abs(u)))
    if bound > 2.0:
        raise ValueError(f"conformal factor exceeds bound: max|u| = {bound:.3f} > 2")
    return BaseGrid(dim=dim, n=n, u=_freeze(u), coords=tuple(_freeze(c.copy()) for c in coords))


# ---------------------------------------------------------------------------
# one-forms as edge integrals
# ---------------------------------------------------------------------------

def midpoint_edge_integrals(grid: BaseGrid, components) -> tuple:
    """Edge integrals of a smooth periodic 1-form by the midpoint rule.

    ``components`` is a sequence of scalar-field specs, one per axis.  The
    integral over edge (i -> i+e_a) is h * beta_a(x_i + (h/2) e_a).
    """
    if len(components) != grid.dim:
        raise ValueError("need one component per axis")
    edges = []
    h = grid.h
    for a in range(grid.dim):
        comp = scalar_field_callable(components[a])
        mid = tuple(c + (h / 2 if b == a else 0.0) for b, c in enumerate(grid.coords))
        edges.append(h * np.broadcast_to(np.asarray(comp(mid), dtype=float), grid.shape).copy())
    return tuple(edges)


def gradient_edge_integrals(grid: BaseGrid, chi: np.ndarray) -> tuple:
    """Exact edge integrals of d(chi) for a periodic grid scalar chi.

    Returns (chi[i+e_a] - chi[i]) per axis, with periodic wrap, so that
    adding these angles to a connection is an exact discrete gauge move.
    """
    chi = np.asarray(chi, dtype=float)
    if chi.shape != grid.shape:
        raise ValueError("chi must be sampled on the grid")
    return tuple(np.roll(chi, -1, axis=a) - chi for a in range(grid.dim))


def one_form_edge_integrals(grid: BaseGrid, spec) -> tuple:
    """Resolve a 1-form spec to per-axis edge-integral arrays.

    Accepted: ``None`` (zero), a tuple of precomputed edge-integral arrays,
    a list of per-axis scalar specs (midpoint rule), or dicts with kind
    "components", "random_fourier_form" (seeded per-axis random Fourier
    components), or "gradient" (exact discrete gradient of a scalar spec).
    """
    if spec is None:
        return tuple(np.zeros(grid.shape) for _ in range(grid.dim))
    if isinstance(spec, tuple) and all(isinstance(s, np.ndarray) for s in spec):
        if len(spec) != grid.dim or any(s.shape != grid.shape for s in spec):
            raise ValueError("edge integral arrays must match the grid")
        return tuple(np.asarray(s, dtype=float) for s in spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "components":
            return midpoint_edge_integrals(grid, spec["components"])
        if kind == "random_fourier_form":
            seed = int(spec["seed"])
            comps = [
                {
                    "kind": "random_fourier",
                    "amplitude": float(spec["amplitude"]),
                    "seed": seed + 101 * (a + 1),
                    "max_mode": int(spec.get("max_mode", 2)),
                    "terms": int(spec.get("terms", 4)),
                }
                for a in range(grid.dim)
            ]
            return midpoint_edge_integrals(grid, comps)
        if kind == "gradient":
            chi = np.asarray(scalar_field_callable(spec["chi"])(grid.coords), dtype=float)
            return gradient_edge_integrals(grid, np.broadcast_to(chi, grid.shape).copy())
        raise ValueError(f"unknown one-form kind: {kind!r}")
    if isinstance(spec, (list, tuple)):
        return midpoint_edge_integrals(grid, list(spec))
    raise TypeError(f"cannot interpret one-form spec: {spec!r}")


# ---------------------------------------------------------------------------
# connection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Connection:
    """Gauge data on a BaseGrid: integer flux, edge angles, boundary twists.

    ``link_angle[a][i]`` is the weight-1 angle Theta of edge (i -> i+e_a);
    the transport phase of a weight-m section along that edge is
    exp(-i*m*Theta).  Wrap edges (i_a = n-1) already include the boundary
    twist term -2*pi * sum_{b>a} c[a,b] * x_b.
    """

    grid: BaseGrid
    flux: np.ndarray
    link_angle: tuple
    beta_edge: tuple = field(repr=False)

    def twist_angle(self, axis: int) -> np.ndarray:
        """Angle t_a(x) = 2*pi * sum_{b>a} c[a,b] * x_b on the full grid.

        A weight-m section satisfies f(x + e_a) = exp(-i*m*t_a(x)) * f(x)
        across the a-th period.
        """
        t = np.zeros(self.grid.shape)
        for b in range(axis + 1, self.grid.dim):
            if self.flux[axis, b]:
                t = t + TWO_PI * self.flux[axis, b] * self.grid.coords[b]
        return t

    def twist_phase(self, axis: int, m: int) -> np.ndarray:
        return np.exp(-1j * m * self.twist_angle(axis))

    def fiber_shift(self, axis: int, n_theta: int) -> np.ndarray:
        """Integer fiber-index shift when crossing the a-th wrap, per site.

        Crossing the x_a boundary at transverse index j shifts the fiber
        sample index by (n_theta/n) * sum_{b>a} c[a,b] * j_b; requires
        n | n_theta so that every shift is an exact integer.
        """
        n = self.grid.n
        if np.any(self.flux[axis, axis + 1:]) and n_theta % n != 0:
            raise ValueError(f"n_theta = {n_theta} must be a multiple of n = {n} for exact twists")
        s = np.zeros(self.grid.shape, dtype=np.int64)
        for b in range(axis + 1, self.grid.dim):
            if self.flux[axis, b]:
                j_b = np.round(self.grid.coords[b] * n).astype(np.int64)
                s = s + (n_theta // n) * int(self.flux[axis, b]) * j_b
        return s

    def link_phases(self, m: int) -> tuple:
        return tuple(np.exp(-1j * m * th) for th in self.link_angle)

    def plaquette_flux_angles(self, a: int, b: int) -> np.ndarray:
        """Wrapped plaquette angles of the weight-1 link field in plane (a, b).

        The angle around the plaquette at i (corners i, i+e_a, i+e_a+e_b,
        i+e_b) is Theta_a[i] + Theta_b[i+e_a] - Theta_a[i+e_b] - Theta_b[i],
        wrapped to (-pi, pi].  Summing over a full coordinate plane yields
        exactly 2*pi*c[a,b] (up to float rounding).
        """
        th_a, th_b = self.link_angle[a], self.link_angle[b]
        raw = th_a + np.roll(th_b, -1, axis=a) - np.roll(th_a, -1, axis=b) - th_b
        return np.angle(np.exp(1j * raw))

    def plane_flux_sums(self, a: int, b: int) -> np.ndarray:
        """Sum of wrapped plaquette angles over each (a, b) coordinate plane."""
        angles = self.plaquette_flux_angles(a, b)
        return np.sum(angles, axis=(a, b))

    def measured_flux(self) -> np.ndarray:
        """Integer flux matrix recovered from plaquette angle sums."""
        d = self.grid.dim
        out = np.zeros((d, d), dtype=int)
        for a in range(d):
            for b in range(a + 1, d):
                total = np.mean(self.plane_flux_sums(a, b))
                out[a, b] = int(np.round(total / TWO_PI))
                out[b, a] = -out[a, b]
        return out


def make_connection(grid: BaseGrid, flux, beta_spec=None) -> Connection:
    """Build a Connection from an antisymmetric integer flux matrix.

    ``flux`` may be a d x d antisymmetric integer matrix, or a plain integer
    in dimension 2 (shorthand for c[0,1]).  ``beta_spec`` adds a smooth
    periodic 1-form on top of the Landau representative.
    """
    d = grid.dim
    if np.isscalar(flux):
        if d != 2:
            raise ValueError("scalar flux shorthand is only valid in dimension 2")
        c = int(flux)
        flux = np.array([[0, c], [-c, 0]])
    flux = np.asarray(flux)
    if flux.shape != (d, d):
        raise ValueError(f"flux matrix must be {d} x {d}")
    if not np.allclose(flux, np.round(flux)):
        raise ValueError("flux matrix must be integer")
    flux = np.round(flux).astype(int)
    if np.any(flux + flux.T != 0):
        raise ValueError("flux matrix must be antisymmetric")

    beta_edge = one_form_edge_integrals(grid, beta_spec)
    h = grid.h
    angles = []
    for a in range(d):
        # Landau part: eta_a(x) = 2*pi * sum_{b<a} c[b,a] * x_b, exact under
        # the midpoint rule because it does not depend on x_a.
        eta_a = np.zeros(grid.shape)
        for b in range(a):
            if flux[b, a]:
                eta_a = eta_a + TWO_PI * flux[b, a] * grid.coords[b]
        theta = h * eta_a + beta_edge[a]
        # wrap edges additionally carry the boundary twist
        twist = np.zeros(grid.shape)
        for b in range(a + 1, d):
            if flux[a, b]:
                twist = twist + TWO_PI * flux[a, b] * grid.coords[b]
        sel = [slice(None)] * d
        sel[a] = grid.n - 1
        theta[tuple(sel)] -= twist[tuple(sel)]
        angles.append(_freeze(theta))
    return Connection(
        grid=grid,
        flux=_freeze(flux),
        link_angle=tuple(angles),
        beta_edge=tuple(_freeze(b.copy()) for b in beta_edge),
    )


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

@dataclass
class Section:
    """Weight-m section of L^m as a complex grid function in the unitary frame."""

    m: int
    values: np.ndarray
    conn: Connection

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.conn.grid.shape:
            raise ValueError("section values must match the grid shape")

    @property
    def grid(self) -> BaseGrid:
        return self.conn.grid

    def _check_compatible(self, other: "Section"):
        if self.m != other.m:
            raise ValueError(f"weight mismatch: {self.m} vs {other.m}")
        if self.conn is not other.conn:
            raise ValueError("sections live on different connections")

    def norm(self) -> float:
        """L2 norm with volume weights, sqrt(sum |f|^2 exp(d*u) h^d)."""
        w = self.grid.volume_weight
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * w)))

    def mdot(self, other: "Section") -> complex:
        """Volume-weighted inner product <self, other>."""
        self._check_compatible(other)
        w = self.grid.volume_weight
        return complex(np.sum(self.values * np.conj(other.values) * w))

    def normalized(self) -> "Section":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero section")
        return Section(self.m, self.values / nrm, self.conn)

    def __add__(self, other):
        self._check_compatible(other)
        return Section(self.m, self.values + other.values, self.conn)

    def __sub__(self, other):
        self._check_compatible(other)
        return Section(self.m, self.values - other.values, self.conn)

    def __mul__(self, scalar):
        return Section(self.m, self.values * scalar, self.conn)

    __rmul__ = __mul__


def gauge_transform(conn: Connection, s: Section, chi) -> tuple:
    """Apply the gauge move eta -> eta + d(chi) with the matching frame change.

    ``chi`` is a periodic real scalar (array on the grid, or a scalar-field
    spec).  Edge angles gain the exact discrete gradient chi[j] - chi[i], and
    section values are multiplied by exp(-i*m*chi), which makes the new
    operator exactly unitarily equivalent to the old one.  The flux matrix is
    unchanged.
    """
    grid = conn.grid
    if isinstance(chi, np.ndarray):
        chi_arr = np.asarray(chi, dtype=float)
        if chi_arr.shape != grid.shape:
            raise ValueError("chi must be sampled on the same grid")
    else:
        chi_arr = np.broadcast_to(
            np.asarray(scalar_field_callable(chi)(grid.coords), dtype=float), grid.shape
        ).copy()
    dchi = gradient_edge_integrals(grid, chi_arr)
    new_angles = tuple(_freeze(th + dth) for th, dth in zip(conn.link_angle, dchi))
    new_conn = Connection(grid=grid, flux=conn.flux, link_angle=new_angles, beta_edge=conn.beta_edge)
    if s.conn is not conn:
        raise ValueError("section does not belong to this connection")
    new_values = s.values * np.exp(-1j * s.m * chi_arr)
    return new_conn, Section(s.m, new_values, new_conn)
