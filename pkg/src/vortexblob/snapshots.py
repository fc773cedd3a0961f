"""Plain-text persistence: ensemble snapshots, grid-field dumps, CSV tables.

Everything is text with 17-significant-digit decimals, which round-trip
IEEE doubles bit-faithfully; rewriting what was read reproduces the bytes.
Output files carry `# key=value` header lines (notably config_hash) that
readers skip and replay checks inspect.
"""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from .diagnostics import GridField, GridSpec
from .discretization import Ensemble
from .kernels import Profile


class SnapshotFormatError(ValueError):
    """Malformed snapshot / grid dump / table file."""


def fmt(x: float) -> str:
    """17 significant digits: enough to reproduce any double exactly."""
    return "%.16e" % float(x)


def _header_lines(meta: dict) -> list[str]:
    return ["# " + " ".join(f"{k}={v}" for k, v in group.items())
            for group in ([meta] if meta else [])]


def _parse_headers(lines: list[str]) -> tuple[dict, int]:
    """Collect key=value pairs from leading '#' lines; returns (meta, body_start)."""
    meta: dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        for tok in lines[i][1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
        i += 1
    return meta, i


# ---------------------------------------------------------------------------
# Ensemble snapshots
# ---------------------------------------------------------------------------


def ensemble_text(e: Ensemble, extra_header: dict | None = None) -> str:
    head = {"epsilon": fmt(e.epsilon), "delta": fmt(e.delta), "h": fmt(e.h),
            "t": fmt(e.time), "profile": e.profile.value, "n": e.n_blobs}
    lines = []
    if extra_header:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in extra_header.items()))
    lines.extend(_header_lines(head))
    for i in range(e.n_blobs):
        lines.append(f"{fmt(e.positions[i, 0])} {fmt(e.positions[i, 1])} "
                     f"{fmt(e.circulations[i])}")
    return "\n".join(lines) + "\n"


def write_ensemble(e: Ensemble, path: str, extra_header: dict | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(ensemble_text(e, extra_header))


def read_ensemble(path: str) -> Ensemble:
    """Rebuild an ensemble from a snapshot (cell indices are not persisted
    and come back as zeros; they only matter for provenance, not dynamics)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta, body = _parse_headers(lines)
    required = ("epsilon", "delta", "h", "t", "profile", "n")
    missing = [k for k in required if k not in meta]
    if missing:
        raise SnapshotFormatError(f"{path}: snapshot header missing {missing}")
    try:
        n = int(meta["n"])
        eps, delta, h, t = (float(meta[k]) for k in ("epsilon", "delta", "h", "t"))
        profile = Profile.parse(meta["profile"])
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: bad snapshot header: {exc}") from exc
    rows = [ln for ln in lines[body:] if ln.strip()]
    if len(rows) != n:
        raise SnapshotFormatError(f"{path}: header says n={n}, found {len(rows)} rows")
    data = np.empty((n, 3))
    for i, ln in enumerate(rows):
        parts = ln.split()
        if len(parts) != 3:
            raise SnapshotFormatError(f"{path}: row {i + 1}: expected 'x y gamma', "
                                      f"got {len(parts)} fields")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise SnapshotFormatError(f"{path}: row {i + 1}: {exc}") from exc
    return Ensemble(data[:, :2], data[:, 2], np.zeros((n, 2), dtype=np.int64),
                    eps, delta, h, t, profile)


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------


def grid_field_text(f: GridField, extra_header: dict | None = None) -> str:
    comp = f.components
    lines = []
    if extra_header:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in extra_header.items()))
    lines.append(f"# origin={fmt(f.spec.origin[0])} {fmt(f.spec.origin[1])} "
                 f"spacing={fmt(f.spec.spacing)} nx={f.spec.nx} ny={f.spec.ny} "
                 f"components={comp}")
    flat = f.values.reshape(f.spec.ny, f.spec.nx * comp)
    for row in flat:
        lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_grid_field(f: GridField, path: str, extra_header: dict | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(grid_field_text(f, extra_header))


def read_grid_field(path: str) -> GridField:
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta, body = _parse_headers(lines)
    try:
        nx, ny, comp = int(meta["nx"]), int(meta["ny"]), int(meta["components"])
        spacing = float(meta["spacing"])
        origin_x = float(meta["origin"])
    except (KeyError, ValueError) as exc:
        raise SnapshotFormatError(f"{path}: bad grid header: {exc}") from exc
    # the second origin coordinate is the bare token after `origin=<x>`
    head_line = next(ln for ln in lines[:body] if "origin=" in ln)
    toks = head_line[1:].split()
    origin_y = float(toks[toks.index(f"origin={meta['origin']}") + 1])
    if comp not in (1, 2):
        raise SnapshotFormatError(f"{path}: components must be 1 or 2, got {comp}")
    rows = [ln for ln in lines[body:] if ln.strip()]
    if len(rows) != ny:
        raise SnapshotFormatError(f"{path}: expected {ny} rows, found {len(rows)}")
    vals = np.array([[float(v) for v in ln.split()] for ln in rows])
    if vals.shape[1] != nx * comp:
        raise SnapshotFormatError(f"{path}: expected {nx * comp} values per row, "
                                  f"found {vals.shape[1]}")
    spec = GridSpec((origin_x, origin_y), spacing, nx, ny)
    return GridField(spec, vals if comp == 1 else vals.reshape(ny, nx, 2))


# ---------------------------------------------------------------------------
# CSV tables (RFC 4180 body after '#' header lines)
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def csv_text(rows: list[dict], extra_header: dict | None = None) -> str:
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    if extra_header:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in extra_header.items()) + "\r\n")
    writer = csv.DictWriter(buf, fieldnames=fields, restval="",
                            quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})
    return buf.getvalue()


def write_csv(rows: list[dict], path: str, extra_header: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(rows, extra_header))


def read_csv(path: str) -> tuple[list[dict], dict]:
    """(rows, header meta); numeric cells come back as floats, '' as None."""
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    meta, body = _parse_headers(lines)
    reader = csv.DictReader(io.StringIO("\n".join(lines[body:])))
    rows = []
    for raw in reader:
        row = {}
        for k, v in raw.items():
            if v == "" or v is None:
                row[k] = None
            else:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        rows.append(row)
    return rows, meta


# ---------------------------------------------------------------------------
# Sidecar summaries and replay protection
# ---------------------------------------------------------------------------


def write_summary(mapping: dict, path: str, extra_header: dict | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        if extra_header:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in extra_header.items()) + "\n")
        for k, v in mapping.items():
            fh.write(f"{k} = {_cell(v)}\n")


def recorded_hash(path: str) -> str | None:
    """config_hash from an existing output file's header, if any."""
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        lines = []
        for ln in fh:
            if not ln.startswith("#"):
                break
            lines.append(ln)
    meta, _ = _parse_headers([ln.rstrip("\n") for ln in lines])
    return meta.get("config_hash")
