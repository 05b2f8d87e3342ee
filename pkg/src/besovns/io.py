"""Snapshots, run directories and CSV/JSON reports.

Snapshot layout (little endian)::

    b"NSCB" | version u32 | n u32 | box_length f64 | components u32 | time f64
    | components * n^3 f64 physical samples, x fastest

A trajectory directory holds ``time_<i>.nscb`` files and ``manifest.json``;
a cascade directory holds ``layer_<k>/time_<i>.nscb`` plus a manifest with
``p``, ``m``, ``times`` and the grid.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .cascade import CascadeState
from .norms import NormReport
from .spectral import Field, Grid
from .trajectory import Trajectory

MAGIC = b"NSCB"
VERSION = 1
_HEADER = struct.Struct("<4sIIdId")


class SnapshotError(IOError):
    """Base class for snapshot decoding failures."""


class SnapshotFormatError(SnapshotError):
    """Bad magic, inconsistent header or truncated payload."""


class SnapshotVersionError(SnapshotError):
    """Snapshot written by an unsupported format version."""


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

def encode_snapshot(samples: np.ndarray, box_length: float, time: float = 0.0) -> bytes:
    """Encode physical samples of shape ``(components, n, n, n)`` indexed ``[c, ix, iy, iz]``."""
    samples = np.asarray(samples, dtype=np.float64)
    c, n = samples.shape[0], samples.shape[1]
    if samples.shape[1:] != (n, n, n):
        raise ValueError("samples must have shape (components, n, n, n)")
    head = _HEADER.pack(MAGIC, VERSION, n, float(box_length), c, float(time))
    # x fastest: C order over (c, iz, iy, ix)
    body = np.ascontiguousarray(samples.transpose(0, 3, 2, 1)).astype("<f8").tobytes()
    return head + body


def decode_snapshot(blob: bytes) -> tuple[np.ndarray, float, float]:
    """Inverse of :func:`encode_snapshot`: ``(samples, box_length, time)``."""
    if len(blob) < _HEADER.size:
        raise SnapshotFormatError("truncated snapshot header")
    magic, version, n, box, c, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotVersionError(f"snapshot version {version}; this reader handles {VERSION}")
    if n < 1 or c not in (1, 3, 9) or not (box > 0):
        raise SnapshotFormatError(f"inconsistent header n={n} components={c} box={box}")
    count = c * n ** 3
    need = _HEADER.size + 8 * count
    if len(blob) != need:
        raise SnapshotFormatError(f"payload has {len(blob) - _HEADER.size} bytes, expected {8 * count}")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=_HEADER.size)
    samples = data.reshape(c, n, n, n).transpose(0, 3, 2, 1).astype(np.float64)
    return samples, box, t


def write_snapshot(f: Field, path, time: float = 0.0) -> None:
    Path(path).write_bytes(encode_snapshot(f.physical(), f.grid.box_length, time))


def read_snapshot_samples(path) -> tuple[np.ndarray, float, float]:
    return decode_snapshot(Path(path).read_bytes())


def read_snapshot(path, dealias_fraction: float = 2.0 / 3.0) -> tuple[Field, float]:
    samples, box, t = read_snapshot_samples(path)
    grid = Grid(samples.shape[1], box, dealias_fraction)
    return Field.from_physical(grid, samples), t


# ---------------------------------------------------------------------------
# Directories
# ---------------------------------------------------------------------------

def grid_dict(g: Grid) -> dict:
    return {"n": g.n, "box_length": g.box_length, "dealias_fraction": g.dealias_fraction}


def grid_from_dict(d: Mapping) -> Grid:
    return Grid(int(d["n"]), float(d["box_length"]), float(d["dealias_fraction"]))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _write_fields(traj: Trajectory, directory: Path) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, (t, f) in enumerate(traj):
        name = f"time_{i}.nscb"
        write_snapshot(f, directory / name, t)
        names.append(name)
    return names


def _read_fields(directory: Path, names: Iterable[str], grid: Grid) -> tuple[list[float], list[Field]]:
    times, fields = [], []
    for name in names:
        samples, box, t = read_snapshot_samples(directory / name)
        if samples.shape[1] != grid.n or box != grid.box_length:
            raise SnapshotFormatError(f"{name} does not match the manifest grid")
        times.append(t)
        fields.append(Field.from_physical(grid, samples))
    return times, fields


def save_trajectory(traj: Trajectory, directory, extra: Mapping | None = None) -> Path:
    d = Path(directory)
    names = _write_fields(traj, d)
    manifest = {"kind": "trajectory", "grid": grid_dict(traj.grid), "times": list(map(float, traj.times)),
                "files": names, "components": traj[0].components if len(traj) else 3}
    if extra:
        manifest.update(extra)
    write_json(manifest, d / "manifest.json")
    return d


def load_trajectory(directory) -> Trajectory:
    d = Path(directory)
    man = read_json(d / "manifest.json")
    grid = grid_from_dict(man["grid"])
    _, fields = _read_fields(d, man["files"], grid)
    return Trajectory(man["times"], fields)


def save_cascade(state: CascadeState, directory, extra: Mapping | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for k in range(1, state.m + 1):
        files[str(k)] = _write_fields(state.layer(k), d / f"layer_{k}")
    if state.remainder is not None:
        files["remainder"] = _write_fields(state.remainder, d / "remainder")
    manifest = {"kind": "cascade", "p": state.p, "m": state.m, "times": list(map(float, state.times)),
                "grid": grid_dict(state.grid), "files": files}
    if extra:
        manifest.update(extra)
    write_json(manifest, d / "manifest.json")
    return d


def load_cascade(directory) -> CascadeState:
    d = Path(directory)
    man = read_json(d / "manifest.json")
    grid = grid_from_dict(man["grid"])
    layers = []
    for k in range(1, int(man["m"]) + 1):
        _, fields = _read_fields(d / f"layer_{k}", man["files"][str(k)], grid)
        layers.append(Trajectory(man["times"], fields))
    state = CascadeState(float(man["p"]), layers)
    if "remainder" in man["files"]:
        _, fields = _read_fields(d / "remainder", man["files"]["remainder"], grid)
        state.remainder = Trajectory(man["times"], fields)
    return state


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def format_value(v) -> str:
    """Shortest faithful text: 17 significant digits for floats."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_rows(path, header: list[str], rows: Iterable[Mapping]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(row[h]) for h in header])


NORM_COLUMNS = ["time", "value", "norm_kind", "s", "p", "q", "a"]


def norm_report_rows(rep: NormReport) -> list[dict]:
    return [{"time": t, "value": v, "norm_kind": rep.norm_kind, "s": rep.s, "p": rep.p,
             "q": rep.q, "a": rep.a} for t, v in zip(rep.times, rep.values)]


def export_csv(report, path) -> Path:
    """Write a :class:`NormReport`, a monitor report or a list of them as CSV."""
    path = Path(path)
    if isinstance(report, NormReport):
        write_rows(path, NORM_COLUMNS, norm_report_rows(report))
    elif isinstance(report, (list, tuple)) and all(isinstance(r, NormReport) for r in report):
        rows = [row for r in report for row in norm_report_rows(r)]
        write_rows(path, NORM_COLUMNS, rows)
    elif hasattr(report, "rows"):
        rows = report.rows()
        header = list(rows[0].keys()) if rows else MONITOR_COLUMNS
        write_rows(path, header, rows)
    else:
        raise TypeError(f"cannot export {type(report).__name__} as CSV")
    return path


MONITOR_COLUMNS = ["time", "M", "A", "A_a", "lhs_0", "lhs_1", "rhs_lnlnln_0", "rhs_lnlnln_1",
                   "theorem13_ln"]


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
