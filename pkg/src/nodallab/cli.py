"""Command-line entry points: spectrum, nodal, perturb, sphere, gate.

Every verb reads a JSON run configuration (defaults apply when omitted),
accepts overrides that mirror config keys, and writes reports through
atomic temp-then-rename.  Outputs embed the config hash, seeds, resolution,
and package version; the spectrum verb additionally writes the binary
eigenpair cache, which the nodal verb validates against the configuration
hash before reuse.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .cache import CacheError, read_cache, write_cache
from .config import ConfigError, RunConfig
from .gate import default_gate_config, run_gate
from .geometry import Section
from .nodal import analyze_nodal, lift
from .operators import assemble_forms
from .perturbation import (
    ConnectionVariation,
    MetricVariation,
    finite_difference_report,
    shift_comparison_report,
    splitting_experiment,
)
from .reports import (
    ensure_dir,
    report_envelope,
    svg_lifted_slices,
    svg_sphere_map,
    write_json_atomic,
    write_svg_atomic,
)
from .spectral import detect_clusters, lowest_eigenpairs
from .sphere import fixed_point_vanishing_check, sphere_harmonic_field, sphere_nodal_counts


def _apply_override(raw: dict, dotted: str, value):
    keys = dotted.split(".")
    target = raw
    for k in keys[:-1]:
        target = target.setdefault(k, {})
    target[keys[-1]] = value


def _load_config(args) -> RunConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    for dotted, flag in (
        ("geometry.dim", "dim"), ("geometry.n", "n"), ("geometry.flux", "flux"),
        ("geometry.seed", "seed"), ("solver.m", "m"), ("solver.k", "k"),
        ("solver.tol", "tol"), ("nodal.n_theta", "n_theta"),
        ("nodal.sample_count", "sample_count"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            _apply_override(raw, dotted, val)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key.path=value, got {item!r}")
        dotted, text = item.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        _apply_override(raw, dotted, value)
    return RunConfig(raw)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--out", default="nodallab_out", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                   help="override any config key, e.g. --set geometry.n=48")
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--flux", type=json.loads, help="integer or JSON matrix")
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int, help="equivariant weight (solver.m)")
    p.add_argument("--k", type=int)
    p.add_argument("--tol", type=float)


def cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    out = ensure_dir(args.out)
    grid = cfg.build_grid()
    conn = cfg.build_connection(grid)
    m = cfg["solver"]["m"]
    op = assemble_forms(grid, conn, m)
    eigs = lowest_eigenpairs(op, cfg["solver"]["k"], tol=cfg["solver"]["tol"],
                             seed=cfg["solver"]["seed"])
    clusters = detect_clusters(eigs)

    cache_path = os.path.join(out, f"eigs_m{m}.nbl")
    sections = np.stack([e.section.values.ravel() for e in eigs])
    write_cache(cache_path, grid.dim, grid.n, m, cfg["solver"]["seed"],
                cfg.flux_matrix(), cfg.hash,
                [e.lam for e in eigs], sections)

    summary = report_envelope(cfg.hash, cfg.data, report="spectrum", weight=m)
    summary["eigenvalues"] = [e.lam for e in eigs]
    summary["total_eigenvalues"] = [e.total for e in eigs]
    summary["residuals"] = [e.residual for e in eigs]
    summary["clusters"] = [
        {"start": g.start, "size": g.size, "mean": g.mean, "spread": g.spread, "gap": g.gap}
        for g in clusters.groups
    ]
    summary["cache"] = os.path.basename(cache_path)
    write_json_atomic(os.path.join(out, "spectrum.json"), summary)
    print(f"wrote {cache_path} and spectrum.json (lowest = {eigs[0].lam:.6f})")
    return 0


def cmd_nodal(args) -> int:
    cfg = _load_config(args)
    out = ensure_dir(args.out)
    cache_path = args.cache or os.path.join(out, f"eigs_m{cfg['solver']['m']}.nbl")
    cachef = read_cache(cache_path, expected_hash=cfg.hash)
    if not 0 <= args.index < cachef.k:
        print(f"index {args.index} out of range 0..{cachef.k - 1}", file=sys.stderr)
        return 2
    clusters = detect_clusters(list(cachef.eigenvalues))
    in_simple = args.index in {
        g.start for g in clusters.groups if g.size == 1
    }
    if not in_simple and not args.force:
        print(f"eigenvalue {args.index} is degenerate; rerun with --force", file=sys.stderr)
        return 2

    grid = cfg.build_grid()
    conn = cfg.build_connection(grid)
    section = Section(cachef.m, cachef.sections[args.index].reshape(grid.shape), conn)
    nodal_cfg = cfg["nodal"]
    report = analyze_nodal(
        section, n_theta=nodal_cfg["n_theta"], tau=nodal_cfg["tau"],
        sample_count=nodal_cfg["sample_count"],
        zero_threshold=nodal_cfg["zero_threshold"],
        seed=cfg["solver"]["seed"],
    )
    payload = report_envelope(cfg.hash, cfg.data, report="nodal", index=args.index,
                              eigenvalue=float(cachef.eigenvalues[args.index]))
    payload["nodal"] = report.to_dict()
    write_json_atomic(os.path.join(out, "nodal.json"), payload)

    if args.svg:
        fld = lift(section, nodal_cfg["n_theta"])
        for name, svg in svg_lifted_slices(fld, nodal_cfg["zero_threshold"]).items():
            write_svg_atomic(os.path.join(out, f"nodal_{name}.svg"), svg)

    print(f"domains={report.nodal_domain_count} components={report.nodal_set_component_count}")
    if args.gate:
        qualifying = cachef.m != 0 and np.any(cachef.flux != 0)
        if qualifying and (report.nodal_domain_count != 2
                           or report.nodal_set_component_count != 1):
            print("two-domain law FAILED for a qualifying eigenfunction", file=sys.stderr)
            return 1
    return 0


def cmd_perturb(args) -> int:
    cfg = _load_config(args)
    out = ensure_dir(args.out)
    grid = cfg.build_grid()
    conn = cfg.build_connection(grid)
    m = cfg["solver"]["m"]
    op = assemble_forms(grid, conn, m)
    eigs = lowest_eigenpairs(op, cfg["solver"]["k"], tol=cfg["solver"]["tol"],
                             seed=cfg["solver"]["seed"])
    clusters = detect_clusters(eigs)
    payload = report_envelope(cfg.hash, cfg.data, report="perturb", weight=m)
    payload["cluster_sizes"] = clusters.sizes

    seed0 = cfg["geometry"]["seed"]
    simple = clusters.simple_indices()
    checks = {}
    if simple:
        idx = simple[0]
        for direction in cfg["perturb"]["directions"]:
            if direction == "metric":
                var = MetricVariation.from_spec(
                    grid, {"kind": "random_fourier", "amplitude": 1.0, "seed": seed0 + 11})
            else:
                var = ConnectionVariation.from_spec(
                    grid, {"kind": "random_fourier_form", "amplitude": 1.0, "seed": seed0 + 13})
            for eps in cfg["perturb"]["epsilons"]:
                rep = finite_difference_report(op, eigs, idx, var, eps=eps,
                                               tol=cfg["solver"]["tol"],
                                               seed=cfg["solver"]["seed"])
                rep.update(shift_comparison_report(eigs[idx], var))
                checks[f"{direction},eps={eps:g}"] = rep
    payload["finite_difference_checks"] = checks

    splitting = []
    if clusters.groups[0].size >= 2:
        for seed in cfg["perturb"]["split_seeds"]:
            for eps in cfg["perturb"]["epsilons"]:
                rep = splitting_experiment(op, eps, seed, direction="both",
                                           k=cfg["solver"]["k"],
                                           tol=cfg["solver"]["tol"],
                                           solver_seed=cfg["solver"]["seed"])
                splitting.append(rep.to_dict())
    payload["splitting"] = splitting
    write_json_atomic(os.path.join(out, "perturb.json"), payload)
    print(f"wrote perturb.json ({len(checks)} FD checks, {len(splitting)} splitting runs)")
    return 0


def cmd_sphere(args) -> int:
    cfg = _load_config(args)
    out = ensure_dir(args.out)
    n_deg = cfg["sphere"]["N"]
    payload = report_envelope(cfg.hash, report="sphere_counterexample", N=n_deg)
    entries = []
    for m in cfg["sphere"]["m"]:
        rep = sphere_nodal_counts(n_deg, m)
        fp = fixed_point_vanishing_check(n_deg, m)
        entry = rep.to_dict()
        entry["fixed_points"] = fp
        entries.append(entry)
        if args.svg:
            har = sphere_harmonic_field(n_deg, m, rep.n_phi, rep.n_theta)
            write_svg_atomic(os.path.join(out, f"sphere_N{n_deg}_m{m}.svg"),
                             svg_sphere_map(har.values, f"Re Y_{n_deg}^{m}"))
    payload["harmonics"] = entries
    write_json_atomic(os.path.join(out, "sphere.json"), payload)
    print(f"wrote sphere.json ({len(entries)} harmonics)")
    return 0


def cmd_gate(args) -> int:
    overridden = bool(args.set) or any(
        getattr(args, f, None) is not None
        for f in ("config", "dim", "n", "flux", "seed", "m", "k", "tol")
    )
    cfg = _load_config(args) if overridden else None
    out = ensure_dir(args.out)
    result = run_gate(cfg)
    payload = report_envelope((cfg or default_gate_config()).hash, report="gate")
    payload.update(result)
    write_json_atomic(os.path.join(out, "gate.json"), payload)
    for crit in result["criteria"]:
        print(f"[{crit['status']:>12}] {crit['id']:>2} {crit['name']} ({crit['seconds']}s)")
    print(f"gate: {'PASS' if result['all_pass'] else 'FAIL'} "
          f"in {result['wall_clock_seconds']}s")
    return 0 if result["all_pass"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nodallab",
        description="Spectra and nodal topology of circle-bundle Laplacians over flat tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="solve the weight-m pencil and cache eigenpairs")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("nodal", help="nodal topology of one cached eigensection")
    _add_common(p)
    p.add_argument("--cache", help="eigenpair cache (default: <out>/eigs_m<m>.nbl)")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--force", action="store_true", help="analyze a degenerate eigenvalue")
    p.add_argument("--svg", action="store_true", help="emit sign-map slices")
    p.add_argument("--gate", action="store_true",
                   help="exit nonzero if the two-domain law fails for a qualifying eigenpair")
    p.set_defaults(func=cmd_nodal)

    p = sub.add_parser("perturb", help="first-order shift checks and splitting experiments")
    _add_common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("sphere", help="sphere counterexample counts and reports")
    _add_common(p)
    p.add_argument("--svg", action="store_true", help="emit equirectangular sign maps")
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("gate", help="run the acceptance battery")
    _add_common(p)
    p.set_defaults(func=cmd_gate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CacheError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
