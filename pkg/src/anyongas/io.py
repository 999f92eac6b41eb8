"""Serialization: binary field dumps (.afd), CSV tables, JSON summaries.

The .afd layout is fixed by specification and bit-exact:

    magic "AFD1"
    u32 nx, u32 ny                  (little-endian)
    f64 x0, y0, hx, hy
    u8 bc tag (0 dirichlet, 1 neumann, 2 plane)
    u8 kind  (0 real, 1 complex)
    row-major little-endian f64 values, index iy*nx + ix,
    complex interleaved re, im.

CSV output is RFC-4180 style with a mandatory header row, '.' decimal
separator and 17 significant digits (full f64 round trip).  JSON output
uses sorted keys so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import ComplexField, GridSpec, ScalarField

MAGIC = b"AFD1"
_BC_TO_TAG = {"dirichlet": 0, "neumann": 1, "plane": 2}
_TAG_TO_BC = {v: k for k, v in _BC_TO_TAG.items()}
_HEADER = struct.Struct("<II4d BB")


class FormatError(ValueError):
    """Malformed .afd payload."""


def write_field(field: ScalarField | ComplexField, path: str | Path) -> None:
    g = field.grid
    complex_kind = isinstance(field, ComplexField)
    head = MAGIC + _HEADER.pack(g.nx, g.ny, g.x0, g.y0, g.hx, g.hy,
                                _BC_TO_TAG[g.bc], int(complex_kind))
    vals = np.ascontiguousarray(field.values.reshape(-1))
    if complex_kind:
        payload = vals.astype("<c16").view("<f8").tobytes()
    else:
        payload = vals.astype("<f8").tobytes()
    Path(path).write_bytes(head + payload)


def read_field(path: str | Path) -> ScalarField | ComplexField:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: not an .afd dump (bad magic)")
    nx, ny, x0, y0, hx, hy, bc_tag, kind = _HEADER.unpack_from(raw, 4)
    if bc_tag not in _TAG_TO_BC or kind not in (0, 1):
        raise FormatError(f"{path}: unknown bc/kind tags {bc_tag}/{kind}")
    g = GridSpec(nx, ny, x0, y0, hx, hy, _TAG_TO_BC[bc_tag])
    body = raw[4 + _HEADER.size:]
    count = nx * ny * (2 if kind else 1)
    expected = count * 8
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    flat = np.frombuffer(body, dtype="<f8")
    if kind:
        vals = flat.view("<c16").reshape(ny, nx)
        return ComplexField(g, vals.astype(np.complex128), is_state=False)
    return ScalarField(g, flat.reshape(ny, nx).astype(np.float64))


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    s = str(x)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path: str | Path, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\r\n".join(lines) + "\r\n", encoding="utf-8")


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")
