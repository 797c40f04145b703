"""Text trace format: ``#`` metadata lines, a ``freq_hz,re,im`` header, CSV rows."""
from __future__ import annotations

import io
import math
import os

import numpy as np

from ..data import MIN_TRACE_POINTS, ComplexTrace
from ..errors import ParseError, UnitError
from ..serialize import format_float

HEADER = ("freq_hz", "re", "im")
SUPPORTED_UNIT_KEYS = {"freq_unit": "hz", "power_unit": "dbm"}
FLOAT_META = ("power_dbm", "attenuation_db")


def _parse_float(text, line, column, path):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text.strip()!r}", line, column, path) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value: {text.strip()!r}", line, column, path)
    return value


def ingest_trace(source, path: str | None = None) -> ComplexTrace:
    """Read a trace from a path, a file object or a string of file contents.

    Raises
    ------
    ParseError
        With the 1-based line and column of the first problem.
    UnitError
        When the header names columns or units other than Hz and dBm.
    """
    if hasattr(source, "read"):
        text = source.read()
        path = path or getattr(source, "name", None)
    elif isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        path = path or os.fspath(source)
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = str(source)

    meta = {}
    rows = []
    header_seen = False
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = (s.strip() for s in body.split("=", 1))
            if key in SUPPORTED_UNIT_KEYS:
                if value.lower() != SUPPORTED_UNIT_KEYS[key]:
                    raise UnitError(f"unsupported {key} {value!r}", lineno, 1, path)
            elif key in FLOAT_META:
                meta[key] = _parse_float(value, lineno, raw.index("=") + 2, path)
            else:
                meta[key] = value
            continue
        cells = line.split(",")
        if not header_seen:
            names = tuple(c.strip().lower() for c in cells)
            if names != HEADER:
                if len(names) == 3 and names[0].startswith("freq"):
                    raise UnitError(f"unsupported columns {','.join(names)}; expected "
                                    f"{','.join(HEADER)}", lineno, 1, path)
                raise ParseError(f"expected header {','.join(HEADER)}", lineno, 1, path)
            header_seen = True
            continue
        if len(cells) != 3:
            raise ParseError(f"expected 3 columns, found {len(cells)}", lineno, 1, path)
        values = []
        col = 1
        for cell in cells:
            values.append(_parse_float(cell, lineno, col, path))
            col += len(cell) + 1
        if rows and values[0] <= rows[-1][0]:
            raise ParseError("frequency is not strictly increasing", lineno, 1, path)
        rows.append(values)
    if not header_seen:
        raise ParseError("missing header line", 1, 1, path)
    if len(rows) < MIN_TRACE_POINTS:
        raise ParseError(f"a trace needs at least {MIN_TRACE_POINTS} rows", lineno, 1, path)
    arr = np.array(rows)
    power = meta.pop("power_dbm", None)
    attenuation = meta.pop("attenuation_db", 0.0)
    return ComplexTrace(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], power, attenuation, meta)


def format_trace(trace: ComplexTrace, extra_meta: dict | None = None) -> str:
    lines = []
    if trace.power_dbm is not None:
        lines.append(f"# power_dbm={format_float(trace.power_dbm)}")
    lines.append(f"# attenuation_db={format_float(trace.attenuation_db)}")
    for key, value in (extra_meta or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(HEADER))
    for f, s in zip(trace.freqs.tolist(), trace.samples.tolist()):
        lines.append(f"{format_float(f)},{format_float(s.real)},{format_float(s.imag)}")
    return "\n".join(lines) + "\n"


def write_trace(trace: ComplexTrace, path, extra_meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace, extra_meta))
