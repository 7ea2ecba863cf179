"""Run configuration: schema validation, normalization, and hashing.

A run configuration is a JSON object with five blocks; unknown keys are
rejected at every level and defaults are filled during normalization, so
the sha256 hash of the canonical (sorted, compact) JSON of the normalized
configuration identifies the run.  Field names:

    geometry: dim (2|3), n (>= 8), flux (int shorthand in d=2, or d x d
              antisymmetric integer matrix), u_spec, beta_spec, seed
    solver:   m (weight), k, tol, seed
    nodal:    n_theta (null = auto), tau (null = 1e-6 * max|f|),
              sample_count, zero_threshold
    perturb:  directions (subset of {metric, connection}), epsilons,
              split_seeds
    sphere:   N, m (list of orders, null = 1..N)

Scalar-field specs in u_spec / beta_spec are JSON values: null, a number,
a {kind: ...} object, or a list of these (summed).  Random Fourier specs
without an explicit seed inherit it from geometry.seed (beta at offset
+1000), which keeps runs reproducible from the file alone.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .geometry import BaseGrid, Connection, make_base_grid, make_connection


class ConfigError(ValueError):
    pass


_GEOMETRY_KEYS = {"dim", "n", "flux", "u_spec", "beta_spec", "seed"}
_SOLVER_KEYS = {"m", "k", "tol", "seed"}
_NODAL_KEYS = {"n_theta", "tau", "sample_count", "zero_threshold"}
_PERTURB_KEYS = {"directions", "epsilons", "split_seeds"}
_SPHERE_KEYS = {"N", "m"}
_TOP_KEYS = {"geometry", "solver", "nodal", "perturb", "sphere"}


def _reject_unknown(block: dict, allowed: set, where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _check_field_spec(spec, where: str):
    if spec is None or isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return
    if isinstance(spec, list):
        for s in spec:
            _check_field_spec(s, where)
        return
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "constant":
            return
        if kind == "cosine":
            if "amplitude" not in spec or "wavevector" not in spec:
                raise ConfigError(f"{where}: cosine spec needs amplitude and wavevector")
            return
        if kind == "random_fourier":
            if "amplitude" not in spec:
                raise ConfigError(f"{where}: random_fourier spec needs amplitude")
            return
        raise ConfigError(f"{where}: unknown scalar field kind {kind!r}")
    raise ConfigError(f"{where}: cannot interpret scalar field spec {spec!r}")


def _check_beta_spec(spec, dim: int, where: str):
    if spec is None:
        return
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "components":
            comps = spec.get("components")
            if not isinstance(comps, list) or len(comps) != dim:
                raise ConfigError(f"{where}: components must be a list of {dim} scalar specs")
            for c in comps:
                _check_field_spec(c, where)
            return
        if kind == "random_fourier_form":
            if "amplitude" not in spec:
                raise ConfigError(f"{where}: random_fourier_form needs amplitude")
            return
        if kind == "gradient":
            _check_field_spec(spec.get("chi"), where)
            return
        raise ConfigError(f"{where}: unknown one-form kind {kind!r}")
    if isinstance(spec, list):
        if len(spec) != dim:
            raise ConfigError(f"{where}: per-axis list must have {dim} entries")
        for c in spec:
            _check_field_spec(c, where)
        return
    raise ConfigError(f"{where}: cannot interpret one-form spec {spec!r}")


def _seed_defaults(spec, default_seed: int):
    """Fill missing random_fourier seeds so the file alone fixes the run."""
    if isinstance(spec, dict):
        out = dict(spec)
        if spec.get("kind") in ("random_fourier", "random_fourier_form") and "seed" not in spec:
            out["seed"] = default_seed
        if spec.get("kind") == "components":
            out["components"] = [_seed_defaults(c, default_seed) for c in spec["components"]]
        if spec.get("kind") == "gradient":
            out["chi"] = _seed_defaults(spec["chi"], default_seed)
        return out
    if isinstance(spec, list):
        return [_seed_defaults(s, default_seed) for s in spec]
    return spec


def normalize_config(raw: dict) -> dict:
    """Validate a raw config dict and fill defaults; rejects unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be an object")
    _reject_unknown(raw, _TOP_KEYS, "top level")

    geo = dict(raw.get("geometry", {}))
    _reject_unknown(geo, _GEOMETRY_KEYS, "geometry")
    dim = int(geo.get("dim", 2))
    if dim not in (2, 3):
        raise ConfigError(f"geometry.dim must be 2 or 3, got {dim}")
    n = int(geo.get("n", 32))
    if n < 8:
        raise ConfigError(f"geometry.n must be at least 8, got {n}")
    flux = geo.get("flux", 0)
    if isinstance(flux, list):
        arr = np.asarray(flux)
        if arr.shape != (dim, dim) or not np.allclose(arr, np.round(arr)):
            raise ConfigError(f"geometry.flux must be a {dim}x{dim} integer matrix")
        if np.any(np.round(arr) + np.round(arr).T != 0):
            raise ConfigError("geometry.flux must be antisymmetric")
        flux = [[int(v) for v in row] for row in np.round(arr).astype(int)]
    elif isinstance(flux, (int, float)):
        if dim != 2:
            raise ConfigError("scalar flux shorthand is only valid for dim = 2")
        flux = int(flux)
    else:
        raise ConfigError("geometry.flux must be an integer or a matrix")
    seed = int(geo.get("seed", 0))
    u_spec = _seed_defaults(geo.get("u_spec"), seed)
    beta_spec = _seed_defaults(geo.get("beta_spec"), seed + 1000)
    _check_field_spec(u_spec, "geometry.u_spec")
    _check_beta_spec(beta_spec, dim, "geometry.beta_spec")

    sol = dict(raw.get("solver", {}))
    _reject_unknown(sol, _SOLVER_KEYS, "solver")
    solver = {
        "m": int(sol.get("m", 1)),
        "k": int(sol.get("k", 8)),
        "tol": float(sol.get("tol", 1e-8)),
        "seed": int(sol.get("seed", 0)),
    }
    if solver["k"] < 1:
        raise ConfigError("solver.k must be positive")

    nod = dict(raw.get("nodal", {}))
    _reject_unknown(nod, _NODAL_KEYS, "nodal")
    nodal = {
        "n_theta": None if nod.get("n_theta") is None else int(nod["n_theta"]),
        "tau": None if nod.get("tau") is None else float(nod["tau"]),
        "sample_count": int(nod.get("sample_count", 500)),
        "zero_threshold": float(nod.get("zero_threshold", 1e-13)),
    }

    per = dict(raw.get("perturb", {}))
    _reject_unknown(per, _PERTURB_KEYS, "perturb")
    directions = list(per.get("directions", ["metric", "connection"]))
    for d in directions:
        if d not in ("metric", "connection"):
            raise ConfigError(f"perturb.directions entries must be metric|connection, got {d!r}")
    perturb = {
        "directions": directions,
        "epsilons": [float(e) for e in per.get("epsilons", [1e-2, 1e-3])],
        "split_seeds": [int(s) for s in per.get("split_seeds", list(range(5)))],
    }

    sphb = dict(raw.get("sphere", {}))
    _reject_unknown(sphb, _SPHERE_KEYS, "sphere")
    n_deg = int(sphb.get("N", 4))
    m_list = sphb.get("m")
    if m_list is None:
        m_list = list(range(1, n_deg + 1))
    sphere = {"N": n_deg, "m": [int(m) for m in m_list]}
    for m in sphere["m"]:
        if not 1 <= m <= n_deg:
            raise ConfigError(f"sphere.m entries must lie in 1..{n_deg}")

    return {
        "geometry": {
            "dim": dim, "n": n, "flux": flux,
            "u_spec": u_spec, "beta_spec": beta_spec, "seed": seed,
        },
        "solver": solver,
        "nodal": nodal,
        "perturb": perturb,
        "sphere": sphere,
    }


def config_hash(config: dict) -> str:
    """sha256 hex digest of the canonical JSON of a normalized config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


class RunConfig:
    """Normalized configuration with geometry builders."""

    def __init__(self, raw: dict):
        self.data = normalize_config(raw)
        self.hash = config_hash(self.data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls(raw)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def geometry(self) -> dict:
        return self.data["geometry"]

    def flux_matrix(self) -> np.ndarray:
        flux = self.geometry["flux"]
        d = self.geometry["dim"]
        if isinstance(flux, int):
            return np.array([[0, flux], [-flux, 0]]) if d == 2 else np.zeros((d, d), int)
        return np.asarray(flux, dtype=int)

    def build_grid(self) -> BaseGrid:
        g = self.geometry
        return make_base_grid(g["dim"], g["n"], g["u_spec"])

    def build_connection(self, grid: BaseGrid) -> Connection:
        g = self.geometry
        return make_connection(grid, g["flux"], g["beta_spec"])
