"""CSV helpers shared by the file formats.

Artifact files may start with ``#`` metadata lines (config hash and seed);
readers skip them and hand back their key=value pairs. Floats are written
with ``repr`` so a write/read round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError


def format_meta(meta: dict | None) -> str:
    if not meta:
        return ""
    body = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
    return f"# bias-probe {body}\n"


def parse_meta(line: str) -> dict[str, str]:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence],
               meta: dict | None = None) -> None:
    buf = io.StringIO()
    buf.write(format_meta(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_rows(path: str | Path) -> tuple[list[str], list[tuple[int, list[str]]], dict[str, str]]:
    """Return (header, [(line_number, fields)], metadata)."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[tuple[int, list[str]]] = []
    with path.open(encoding="utf-8", newline="") as fh:
        lines = [(i + 1, ln) for i, ln in enumerate(fh)]
    body = []
    for lineno, ln in lines:
        if ln.startswith("#"):
            meta.update(parse_meta(ln))
        elif ln.strip():
            body.append((lineno, ln))
    if not body:
        raise ParseError(f"{path}: no header row")
    reader = csv.reader([ln for _, ln in body])
    for (lineno, _), fields in zip(body, reader):
        if header is None:
            header = [f.strip() for f in fields]
        else:
            rows.append((lineno, fields))
    return header, rows, meta


def to_float(value: str, path, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"{path}: not a number: {value!r}", row=lineno) from None
