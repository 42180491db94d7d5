"""CSV emission and parsing for run records.

Numbers are written with 15 significant digits (``%.15g``), rows end in
CRLF as RFC 4180 specifies, and an empty cell stands for a missing value.
The sidecar ``<path>.meta`` holds the spec, seed and package version as
key=value lines.
"""

import csv
import io
import math
from pathlib import Path

from .. import __version__
from .runner import RunRecord

__all__ = ["format_cell", "emit_csv", "read_csv", "read_meta"]


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value} cannot be written")
        return "%.15g" % value
    return str(value)


def _csv_text(record):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([format_cell(row[c]) for c in record.columns])
    return buf.getvalue()


def _meta_text(record):
    lines = [
        f"version={__version__}",
        f"spec_hash={record.spec_hash}",
        f"seed={record.master_seed}",
        f"rows={len(record.rows)}",
        f"wall_time_seconds={record.wall_time_seconds:.3f}",
    ]
    lines += [f"spec.{line}" for line in record.spec_text.splitlines()]
    return "\n".join(lines) + "\n"


def emit_csv(record, path):
    """Write ``record`` to ``path`` and its metadata to ``path + '.meta'``.

    The CSV bytes depend only on the columns and rows; wall time lives in
    the sidecar.
    """
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(_csv_text(record))
        with open(f"{path}.meta", "w", encoding="utf-8") as fh:
            fh.write(_meta_text(record))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_meta(path):
    """Key=value mapping of a ``.meta`` sidecar."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def read_csv(path):
    """Parse a CSV written by :func:`emit_csv` back into a :class:`RunRecord`.

    Integers and floats are recovered from their text; the sidecar, when
    present, supplies the hash and seed.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file, expected a header row")
    columns, body = rows[0], rows[1:]
    meta_path = Path(f"{path}.meta")
    meta = read_meta(meta_path) if meta_path.exists() else {}
    spec_text = "".join(f"{k[5:]}={v}\n" for k, v in meta.items() if k.startswith("spec."))
    return RunRecord(
        spec_hash=meta.get("spec_hash", ""),
        columns=columns,
        rows=[dict(zip(columns, (_parse_cell(c) for c in r))) for r in body],
        wall_time_seconds=float(meta.get("wall_time_seconds", 0.0)),
        spec_text=spec_text,
        master_seed=int(meta.get("seed", 0)),
    )
