"""Point, coreset and instance files.

Point CSV: header ``x1,...,xd`` with an optional trailing ``weight`` column.
Point binary (little endian): magic ``CSPS1``, u32 n, u32 d, u8 flags, then n*d
f64 coordinates row by row, then n f64 weights if flag bit 0 is set. Flag bit 1
marks real-valued weights. Floats are written with ``repr`` so CSV round-trips
are bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidParameter, PointFormatError
from .lower_bounds.discrete import DiscreteInstance
from .metric import PointSet
from .sampler import WeightedCoreset

POINTS_MAGIC = b"CSPS1"
DISCRETE_MAGIC = b"CSDI1"
_POINTS_HEADER = struct.Struct("<5sIIB")
_DISCRETE_HEADER = struct.Struct("<5sIIII")
FLAG_WEIGHTS = 1
FLAG_REAL_WEIGHTS = 2


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, data) -> None:
    Path(path).write_text(dumps_json(data))


def _fmt(x: float) -> str:
    return repr(float(x))


def detect_format(path) -> str:
    with open(path, "rb") as fh:
        return "f64le-binary" if fh.read(len(POINTS_MAGIC)) == POINTS_MAGIC else "csv"


def load_points(path, format: str | None = None) -> PointSet:
    """Read a PointSet from CSV or the f64le binary format (auto-detected when format is None).

    Rows with weight 0 are dropped. Integer weight columns become multiplicities;
    anything else gives a real-weighted set.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such points file: {path}")
    format = format or detect_format(path)
    if format == "csv":
        return _load_points_csv(path)
    if format in ("f64le-binary", "binary", "bin"):
        return _load_points_binary(path)
    raise InvalidParameter(f"unknown points format {format!r}")


def _parse_header(header, path):
    if header is None:
        raise PointFormatError(f"{path}: empty file", code="malformed_header")
    names = [h.strip() for h in header]
    weighted = bool(names) and names[-1] == "weight"
    coords = names[:-1] if weighted else names
    if not coords or coords != [f"x{i + 1}" for i in range(len(coords))]:
        raise PointFormatError(f"{path}: header must be x1..xd[,weight], got {','.join(names)}", code="malformed_header")
    return len(coords), weighted


def _load_points_csv(path) -> PointSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        d, weighted = _parse_header(next(reader, None), path)
        width = d + weighted
        rows, weights, int_weights = [], [], True
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise PointFormatError(
                    f"{path}:{lineno}: expected {width} fields, got {len(row)}", code="bad_row", row=lineno
                )
            try:
                values = [float(v) for v in row[:d]]
            except ValueError as exc:
                raise PointFormatError(f"{path}:{lineno}: {exc}", code="bad_number", row=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise PointFormatError(f"{path}:{lineno}: non-finite coordinate", code="non_finite", row=lineno)
            rows.append(values)
            if weighted:
                token = row[d].strip()
                try:
                    w = float(token)
                except ValueError:
                    raise PointFormatError(f"{path}:{lineno}: bad weight {token!r}", code="bad_number", row=lineno)
                if not math.isfinite(w):
                    raise PointFormatError(f"{path}:{lineno}: non-finite weight", code="non_finite", row=lineno)
                if w < 0:
                    raise PointFormatError(f"{path}:{lineno}: negative weight {w}", code="negative_weight", row=lineno)
                int_weights = int_weights and token.lstrip("+").isdigit()
                weights.append(w)
    if not rows:
        raise PointFormatError(f"{path}: no data rows", code="empty")
    return _make_pointset(np.array(rows, dtype=np.float64), np.array(weights) if weighted else None, int_weights)


def _make_pointset(coords, weights, integral) -> PointSet:
    if weights is None:
        return PointSet(coords)
    keep = weights > 0
    if not keep.any():
        raise PointFormatError("every weight is zero", code="empty")
    if integral:
        return PointSet(coords[keep], weights[keep].astype(np.int64))
    return PointSet(coords[keep], weights[keep], real_weights=True)


def _load_points_binary(path) -> PointSet:
    data = Path(path).read_bytes()
    if len(data) < _POINTS_HEADER.size or data[:5] != POINTS_MAGIC:
        raise PointFormatError(f"{path}: missing CSPS1 magic", code="bad_magic")
    _, n, d, flags = _POINTS_HEADER.unpack_from(data)
    has_w = bool(flags & FLAG_WEIGHTS)
    expected = _POINTS_HEADER.size + 8 * (n * d + (n if has_w else 0))
    if n < 1 or d < 1 or len(data) != expected:
        raise PointFormatError(f"{path}: size {len(data)} does not match header n={n}, d={d}", code="truncated")
    coords = np.frombuffer(data, dtype="<f8", count=n * d, offset=_POINTS_HEADER.size).reshape(n, d)
    bad = np.flatnonzero(~np.isfinite(coords).all(axis=1))
    if bad.size:
        raise PointFormatError(f"{path}: non-finite coordinate in row {bad[0]}", code="non_finite", row=int(bad[0]))
    weights = None
    if has_w:
        weights = np.frombuffer(data, dtype="<f8", count=n, offset=_POINTS_HEADER.size + 8 * n * d).copy()
        neg = np.flatnonzero(~(weights >= 0))
        if neg.size:
            raise PointFormatError(f"{path}: invalid weight in row {neg[0]}", code="negative_weight", row=int(neg[0]))
    return _make_pointset(coords.astype(np.float64), weights, not flags & FLAG_REAL_WEIGHTS)


def _needs_weights(P: PointSet) -> bool:
    return P.real_weights or bool(np.any(P.multiplicity != 1))


def save_points(P: PointSet, path, format: str = "csv") -> None:
    path = Path(path)
    if format == "csv":
        header = [f"x{i + 1}" for i in range(P.d)]
        weighted = _needs_weights(P)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header + (["weight"] if weighted else []))
            for row, w in zip(P.coords, P.multiplicity):
                fields = [_fmt(v) for v in row]
                if weighted:
                    fields.append(_fmt(w) if P.real_weights else str(int(w)))
                writer.writerow(fields)
    elif format in ("f64le-binary", "binary", "bin"):
        weighted = _needs_weights(P)
        flags = (FLAG_WEIGHTS if weighted else 0) | (FLAG_REAL_WEIGHTS if P.real_weights else 0)
        with open(path, "wb") as fh:
            fh.write(_POINTS_HEADER.pack(POINTS_MAGIC, P.n, P.d, flags))
            fh.write(np.ascontiguousarray(P.coords, dtype="<f8").tobytes())
            if weighted:
                fh.write(np.ascontiguousarray(P.multiplicity, dtype="<f8").tobytes())
    else:
        raise InvalidParameter(f"unknown points format {format!r}")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_coreset(coreset: WeightedCoreset, path) -> Path:
    """CSV ``x1..xd,weight,provenance`` plus a JSON sidecar; returns the sidecar path."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(coreset.d)] + ["weight", "provenance"])
        for row, w, prov in zip(coreset.points, coreset.weights, coreset.provenance):
            writer.writerow([_fmt(v) for v in row] + [_fmt(w), prov])
    side = sidecar_path(path)
    meta = dict(coreset.info)
    meta.setdefault("total_weight", coreset.total_weight)
    meta.setdefault("size", coreset.size)
    meta["offset"] = coreset.offset
    write_json(side, meta)
    return side


def load_coreset(path) -> WeightedCoreset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such coreset file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-2:] != ["weight", "provenance"]:
            raise PointFormatError(f"{path}: header must be x1..xd,weight,provenance", code="malformed_header")
        d = len(header) - 2
        if header[:d] != [f"x{i + 1}" for i in range(d)] or d < 1:
            raise PointFormatError(f"{path}: header must be x1..xd,weight,provenance", code="malformed_header")
        pts, wts, prov = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise PointFormatError(f"{path}:{lineno}: expected {d + 2} fields", code="bad_row", row=lineno)
            pts.append([float(v) for v in row[:d]])
            wts.append(float(row[d]))
            prov.append(row[d + 1])
    side = sidecar_path(path)
    info = json.loads(side.read_text()) if side.exists() else {}
    info.pop("offset", None)
    return WeightedCoreset(np.array(pts, dtype=np.float64).reshape(-1, d), np.array(wts), prov, 0.0, info)


def save_discrete(inst: DiscreteInstance, path) -> Path:
    """Header ``CSDI1``, u32 copies, n_clients, n_centers, z, then the packed edge bits; JSON manifest beside it."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_DISCRETE_HEADER.pack(DISCRETE_MAGIC, inst.copies, inst.n_clients, inst.n_centers, inst.z))
        fh.write(np.ascontiguousarray(inst.packed_edges, dtype=np.uint8).tobytes())
    side = sidecar_path(path)
    write_json(side, {**inst.describe(), "format": "CSDI1", "packed_bytes_per_client": inst.packed_edges.shape[-1]})
    return side


def load_discrete(path) -> DiscreteInstance:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _DISCRETE_HEADER.size or data[:5] != DISCRETE_MAGIC:
        raise PointFormatError(f"{path}: missing CSDI1 magic", code="bad_magic")
    _, copies, n_clients, n_centers, z = _DISCRETE_HEADER.unpack_from(data)
    width = (n_centers + 7) // 8
    body = np.frombuffer(data, dtype=np.uint8, offset=_DISCRETE_HEADER.size)
    if body.size != copies * n_clients * width:
        raise PointFormatError(f"{path}: edge block size mismatch", code="truncated")
    edges = body.reshape(copies, n_clients, width).copy()
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return DiscreteInstance(n_clients, n_centers, z, copies, edges, d_inf=meta.get("d_inf"), eps=meta.get("eps"))


def atomic_write_text(path, text: str) -> None:
    """Write through a temporary file so readers never see half a file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
