"""JSON report envelopes and dependency-free SVG figures.

Every report embeds the config hash, the seeds, the resolution, and the
package version.  Figures are sign maps on a fixed 1024-unit viewport:
positive cells in blue, negative in red, near-zero in grey, and cells whose
corners straddle zero in black (the sampled nodal set).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .cache import atomic_write_bytes
from .nodal import LiftedField

VIEWPORT = 1024
COLOR_POS = "#4878a8"
COLOR_NEG = "#d65f5f"
COLOR_ZERO = "#d9d9d9"
COLOR_NODAL = "#000000"


def tool_version() -> str:
    from . import __version__
    return __version__


def report_envelope(config_hash: str, config: dict | None = None, **extra) -> dict:
    """Common header fields for every JSON report."""
    out = {"tool": "nodallab", "version": tool_version(), "config_hash": config_hash}
    if config is not None:
        out["geometry"] = config["geometry"]
        out["seeds"] = {"geometry": config["geometry"]["seed"], "solver": config["solver"]["seed"]}
        out["resolution"] = {"n": config["geometry"]["n"], "dim": config["geometry"]["dim"]}
    out.update(extra)
    return out


def write_json_atomic(path, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def _svg_header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEWPORT} {VIEWPORT}" '
        f'width="{VIEWPORT}" height="{VIEWPORT}">',
        f"<title>{title}</title>",
        f'<rect width="{VIEWPORT}" height="{VIEWPORT}" fill="white"/>',
    ]


def svg_sign_map(values: np.ndarray, title: str = "sign map",
                 zero_threshold: float = 1e-13, wrap_axis1: bool = True) -> str:
    """Render a 2-d scalar slice as sign-colored cells with nodal cells black.

    A cell is painted black when its four corner values straddle zero (the
    second axis wraps periodically unless told otherwise).
    """
    v = np.asarray(values, dtype=float)
    n0, n1 = v.shape
    w = VIEWPORT / n0
    h = VIEWPORT / n1
    c00 = v
    c10 = np.roll(v, -1, axis=0)
    c01 = np.roll(v, -1, axis=1)
    c11 = np.roll(c10, -1, axis=1)
    cmin = np.minimum.reduce([c00, c10, c01, c11])
    cmax = np.maximum.reduce([c00, c10, c01, c11])
    nodal = (cmin <= zero_threshold) & (cmax >= -zero_threshold)
    if not wrap_axis1:
        nodal[:, -1] = False

    parts = _svg_header(title)
    for i in range(n0):
        for j in range(n1):
            if nodal[i, j]:
                color = COLOR_NODAL
            elif v[i, j] > zero_threshold:
                color = COLOR_POS
            elif v[i, j] < -zero_threshold:
                color = COLOR_NEG
            else:
                color = COLOR_ZERO
            parts.append(
                f'<rect x="{i * w:.2f}" y="{j * h:.2f}" width="{w + 0.5:.2f}" '
                f'height="{h + 0.5:.2f}" fill="{color}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def svg_lifted_slices(field: LiftedField, zero_threshold: float = 1e-13) -> dict:
    """Fixed-theta and fixed-transverse-coordinate slices of a lifted field.

    Returns a dict of SVG strings: the base slice at theta index 0 and the
    (x1, theta) slice at the middle value of the last base coordinate.
    """
    d = field.grid.dim
    v = field.values
    base_slice = v[..., 0]
    if d == 3:
        base_slice = base_slice[:, :, field.grid.n // 2]
    trans = [slice(None)] + [field.grid.n // 2] * (d - 1) + [slice(None)]
    fiber_slice = v[tuple(trans)]
    return {
        "fixed_theta": svg_sign_map(base_slice, "base slice at theta = 0", zero_threshold),
        "fixed_transverse": svg_sign_map(
            fiber_slice, "(x1, theta) slice at mid transverse coordinates", zero_threshold
        ),
    }


def svg_sphere_map(values: np.ndarray, title: str = "sphere sign map",
                   zero_threshold: float | None = None) -> str:
    """Equirectangular sign plot of a sphere field (phi rows, theta columns)."""
    if zero_threshold is None:
        zero_threshold = 1e-13 * float(np.max(np.abs(values)))
    return svg_sign_map(np.asarray(values).T, title, zero_threshold, wrap_axis1=False)


def write_svg_atomic(path, svg: str) -> None:
    atomic_write_bytes(path, svg.encode())


def ensure_dir(path) -> str:
    path = os.fspath(path)
    os.makedirs(path, exist_ok=True)
    return path
