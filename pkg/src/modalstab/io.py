"""CSV tables that round-trip floats exactly."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def format_csv(columns: Mapping[str, np.ndarray]) -> str:
    """Columns of equal length as CSV text; floats use ``repr``."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*(c.tolist() for c in cols)):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Mapping[str, np.ndarray]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_csv(columns))
    return p


def parse_csv(text: str) -> dict[str, np.ndarray]:
    """Inverse of :func:`format_csv`.

    Columns whose entries are all integers come back as ``int64``.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return {}
    names, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(names):
        raw = [r[i] for r in body]
        if all(_is_int(s) for s in raw):
            out[name] = np.array([int(s) for s in raw], dtype=np.int64)
        else:
            out[name] = np.array([float(s) for s in raw], dtype=float)
    return out


def read_csv(path) -> dict[str, np.ndarray]:
    return parse_csv(Path(path).read_text())


def _is_int(s: str) -> bool:
    return s.lstrip("-").isdigit()
