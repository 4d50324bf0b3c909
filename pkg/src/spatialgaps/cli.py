"""Command line front end: ``spatialgaps <subcommand> [--preset NAME] [options]``.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical diagnostic.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, bands, io, resonances, scattering, wavepacket
from .config import PRESETS, SUBCOMMANDS, parse_config_text, resolve
from .exceptions import ConfigError, NumericalDiagnosticError
from .units import ATOM_PRESETS, lattice_period

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

# convenience flag -> config key
FLAG_KEYS = {
    "eta": "potential.eta",
    "phi": "potential.phi",
    "beta": "potential.beta",
    "z_c": "potential.z_c",
    "d": "potential.d",
    "mode": "potential.mode",
    "step": "grid.step",
    "z_min": "grid.z_min",
    "z_max": "grid.z_max",
    "q_min": "sweep.q_min",
    "q_max": "sweep.q_max",
    "n_q": "sweep.n_q",
    "prominence": "resonances.prominence_min",
    "e_max": "bands.e_max",
    "amplitude": "bands.amplitude",
    "a": "wavepacket.a",
    "q0": "wavepacket.q0",
    "z0": "wavepacket.z0",
    "times": "wavepacket.times",
    "out": "output.dir",
    "workers": "run.workers",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spatialgaps", description="Atom reflection from a Gaussian-enveloped optical lattice.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--preset", choices=sorted(PRESETS))
        s.add_argument("--config", type=Path, help="key = value file, or a manifest.json to reproduce")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any config key")
        s.add_argument("-o", "--out", help="output directory")
        s.add_argument("--eta", help="lattice depth (signed)")
        s.add_argument("--phi", help="beam half-angle (rad)")
        s.add_argument("--beta", help="dimensionless gravity")
        s.add_argument("--z-c", dest="z_c")
        s.add_argument("--d")
        s.add_argument("--mode", choices=["taylor", "exact_dressed"])
        s.add_argument("--step", help="grid step h")
        s.add_argument("--z-min", dest="z_min")
        s.add_argument("--z-max", dest="z_max")
        s.add_argument("--workers", help="worker threads (overrides SPATIALGAPS_WORKERS)")
        s.add_argument("--si", action="store_true", default=None, help="add SI columns (um, ms)")
        if name in ("spectrum", "resonances", "gapmap"):
            s.add_argument("--q-min", dest="q_min")
            s.add_argument("--q-max", dest="q_max")
            s.add_argument("--n-q", dest="n_q")
        if name in ("spectrum", "resonances"):
            s.add_argument("--adaptive", action="store_true", default=None)
        if name == "resonances":
            s.add_argument("--prominence")
        if name == "bands":
            s.add_argument("--amplitude", help="lattice amplitude A (default: eta)")
            s.add_argument("--e-max", dest="e_max")
        if name == "wavepacket":
            s.add_argument("--a")
            s.add_argument("--q0")
            s.add_argument("--z0")
            s.add_argument("--times", help="comma list, 'T' suffix = multiples of 18 pi")
    return p


def _file_values(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}", key="config") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})", key="config") from None
        return dict(data.get("config", data).get("values", {}))
    return parse_config_text(text)


def parse_config(argv=None, file_text=None):
    """Parse command line arguments (and optional config text) into a RunConfig."""
    args = build_parser().parse_args(argv)
    file_values = {}
    if args.config is not None:
        file_values.update(_file_values(args.config))
    if file_text is not None:
        file_values.update(parse_config_text(file_text))
    flags = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", key=item)
        k, v = item.split("=", 1)
        flags[k.strip()] = v.strip()
    for attr, key in FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            flags[key] = val
    if getattr(args, "si", None):
        flags["output.si"] = "true"
    if getattr(args, "adaptive", None):
        flags["sweep.adaptive"] = "true"
    return resolve(args.subcommand, args.preset, file_values, flags)


def _spectrum_grid(cfg, spec):
    z_min = cfg["grid.z_min"] if cfg["grid.z_min"] is not None else 0.0
    z_max = cfg["grid.z_max"] if cfg["grid.z_max"] is not None else 2.0 * spec.z_c
    return scattering.SpatialGrid(z_min, z_max, cfg["grid.step"])


def _convergence(grid, spec, q_max):
    return {
        "h": grid.h,
        "z_min": grid.z_min,
        "z_max": grid.z_max,
        "n_points": grid.n_points,
        "points_per_period": lattice_period(spec) / grid.h,
        "points_per_wavelength_at_q_max": 2.0 * math.pi / max(q_max, 1e-300) / grid.h,
    }


def _sweep(cfg, spec, grid):
    q = np.linspace(cfg["sweep.q_min"], cfg["sweep.q_max"], cfg["sweep.n_q"])
    grid.check_resolution(float(q.max()), lattice_period(spec), u_min=min(0.0, spec.eta) - spec.beta * grid.z_max)
    if cfg["sweep.adaptive"]:
        sweep = resonances.adaptive_spectrum(spec, q, grid, max_jump=cfg["sweep.max_jump"])
    else:
        sweep = scattering.reflectivity_spectrum(spec, q, grid)
    if not np.any(sweep.ok):
        raise NumericalDiagnosticError(f"no momentum could be solved: {next(iter(sweep.holes.values()))}")
    for qh, reason in sorted(sweep.holes.items()):
        print(f"warning: no solution at q={qh:.12g}: {reason}", file=sys.stderr)
    return sweep


def run(cfg) -> list:
    """Execute a resolved configuration; returns the written files."""
    out = Path(cfg["output.dir"])
    spec = cfg.potential()
    atom = ATOM_PRESETS[cfg["output.atom"]] if cfg["output.si"] else None
    files, meta = [], {}
    sc = cfg.subcommand
    if sc == "bands":
        A = cfg["bands.amplitude"] if cfg["bands.amplitude"] is not None else spec.eta
        bs = bands.band_edges(A, spec.kappa, cfg["bands.e_max"], tol=cfg["bands.tol"])
        files.append(io.emit_bands(bs, out / "bands.csv"))
    elif sc == "gapmap":
        q = np.linspace(cfg["sweep.q_min"], cfg["sweep.q_max"], cfg["gapmap.n_q"])
        z_min = cfg["grid.z_min"] if cfg["grid.z_min"] is not None else 0.0
        z_max = cfg["grid.z_max"] if cfg["grid.z_max"] is not None else 2.0 * spec.z_c
        gm = bands.spatial_gap_map(spec, q, np.linspace(z_min, z_max, cfg["gapmap.n_z"]))
        files.append(io.emit_gapmap(gm, out / "gapmap.csv", atom))
    elif sc in ("spectrum", "resonances"):
        grid = _spectrum_grid(cfg, spec)
        sweep = _sweep(cfg, spec, grid)
        files.append(io.emit_spectrum(sweep, out / "spectrum.csv"))
        meta = _convergence(grid, spec, cfg["sweep.q_max"])
        meta["holes"] = {io._fmt(k): v for k, v in sorted(sweep.holes.items())}
        if sc == "resonances":
            res = resonances.find_resonances(sweep, prominence_min=cfg["resonances.prominence_min"])
            files.append(io.emit_resonances(res, out / "resonances.csv"))
    elif sc == "wavepacket":
        wp = wavepacket.WavepacketSpec(cfg["wavepacket.a"], cfg["wavepacket.q0"], cfg["wavepacket.z0"],
                                       cfg["wavepacket.n_sigma"], cfg["wavepacket.n_q"])
        z_min = cfg["grid.z_min"] if cfg["grid.z_min"] is not None else -140.0 * math.pi
        grid = wavepacket.wavepacket_grid(spec, cfg["grid.step"], z_min)
        if cfg["grid.z_max"] is not None:
            grid = scattering.SpatialGrid(z_min, cfg["grid.z_max"], cfg["grid.step"])
        lo, hi = wavepacket.default_bounds(spec)
        lo = cfg["wavepacket.left_bound"] if cfg["wavepacket.left_bound"] is not None else lo
        hi = cfg["wavepacket.right_bound"] if cfg["wavepacket.right_bound"] is not None else hi
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            table = wavepacket.build_psi_table(wp, spec, grid)
            ev = wavepacket.evolve(wp, spec, grid, cfg["wavepacket.times"], table=table)
        for s in ev.snapshots:
            s.partition = wavepacket.partition_probability(s, lo, hi)
            s.bounds = (lo, hi)
            files.append(io.emit_snapshot(s, out, atom))
        files.append(io.emit_partition(ev, out / "partition.csv", atom))
        meta = _convergence(grid, spec, float(wp.q_grid.max()))
        meta.update({"n_q": wp.n_q, "n_sigma": wp.n_sigma, "left_bound": lo, "right_bound": hi,
                     "norms": [s.norm for s in ev.snapshots], "lobe_counts": ev.lobe_counts.tolist(),
                     "splitting_events": ev.splitting_events, "emission_events": ev.emission_events})
    return files, meta


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        cfg = parse_config(argv)
        scattering.configure_workers(cfg["run.workers"])
        files, meta = run(cfg)
        io.write_manifest(cfg["output.dir"], cfg.to_dict(), __version__, time.perf_counter() - t0, files, meta)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalDiagnosticError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
