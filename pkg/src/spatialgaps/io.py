"""CSV emitters and run manifests.

Numbers are written with 12 significant digits through Python's own
formatting (locale independent), with ``\\n`` line endings.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"


def _fmt(x) -> str:
    x = float(x)
    if x == 0.0:
        return "0"  # folds -0.0
    return format(x, ".12g")


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _write_atomic(path: Path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_table(path, header, columns):
    """Write equal-length numeric columns under a comma-separated header."""
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    _write_atomic(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def emit_spectrum(sweep, path):
    return write_table(path, ["q", "R", "T"], [sweep.q_values, sweep.R_values, sweep.T_values])


def emit_gapmap(gap_map, path, atom=None):
    q, z = np.meshgrid(gap_map.q_grid, gap_map.z_grid, indexing="ij")
    header = ["q", "z", "allowed"]
    cols = [q.ravel(), z.ravel(), gap_map.allowed.ravel().astype(int)]
    if atom is not None:
        header.append("z_um")
        cols.append(atom.length_to_si(z.ravel()) * 1e6)
    return write_table(path, header, cols)


def emit_bands(band_set, path):
    b = np.asarray(band_set.bands).reshape(-1, 2)
    return write_table(path, ["band_index", "E_min", "E_max"], [np.arange(len(b)), b[:, 0], b[:, 1]])


def emit_resonances(res_list, path):
    rs = list(res_list)
    return write_table(
        path,
        ["q_center", "width", "prominence", "kind"],
        [[r.q_center for r in rs], [r.width for r in rs], [r.prominence for r in rs], [r.kind for r in rs]],
    )


def snapshot_name(t) -> str:
    return f"snap_t{_fmt(t)}.csv"


def emit_snapshot(snap, directory, atom=None):
    header = ["z", "re_phi", "im_phi", "density"]
    cols = [snap.z, snap.amplitude.real, snap.amplitude.imag, snap.density]
    if atom is not None:
        header.append("z_um")
        cols.append(atom.length_to_si(snap.z) * 1e6)
    return write_table(Path(directory) / snapshot_name(snap.t), header, cols)


def emit_partition(evolution, path, atom=None):
    p = evolution.partitions
    header = ["t", "P_left", "P_inside", "P_right"]
    cols = [evolution.times, p[:, 0], p[:, 1], p[:, 2]]
    if atom is not None:
        header.append("t_ms")
        cols.append(atom.time_to_si(np.asarray(evolution.times)) * 1e3)
    return write_table(path, header, cols)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory, config: dict, version: str, duration_s: float, files, convergence=None):
    """Write manifest.json (atomically) describing one run in ``directory``."""
    directory = Path(directory)
    manifest = {
        "artifact_version": version,
        "config": config,
        "grid_convergence": convergence or {},
        "wall_clock_seconds": round(float(duration_s), 3),
        "files": {Path(f).name: sha256(f) for f in sorted(files, key=lambda f: Path(f).name)},
    }
    _write_atomic(directory / MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory / MANIFEST_NAME
