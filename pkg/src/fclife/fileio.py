"""Canonical file formats: spectrum/manifest/feature CSVs and JSON.

All writers are deterministic (sorted JSON keys, floats rendered with 17
significant digits, atomic temp-file-plus-rename) so re-running a command
with identical inputs yields byte-identical outputs. CSV files may carry
leading ``#`` comment lines that embed the run configuration; readers
skip them.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .features import feature_names
from .regression import Dataset
from .spectra import ImpedanceSpectrum, validate_spectrum

SPECTRUM_HEADER = ["freq_hz", "re_ohm", "im_ohm"]
MANIFEST_HEADER = ["file", "age_hours", "cell_id"]


def fmt_float(x: float) -> str:
    """17-significant-digit rendering; round-trips float64 exactly."""
    return format(float(x), ".17g")


def dumps_canonical(obj, indent: int = 0) -> str:
    """Canonical JSON: sorted keys, fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError("non-finite value in JSON output")
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [dumps_canonical(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {dumps_canonical(v, indent + 1)}"
            for k, v in sorted(obj.items())
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, dumps_canonical(obj) + "\n")


def config_comment(run_config: dict | None) -> str:
    if run_config is None:
        return ""
    blob = json.dumps(run_config, sort_keys=True, default=str)
    return f"# run_config: {blob}\n"


def write_csv(path: Path, header: list[str], rows, run_config: dict | None = None) -> None:
    """Rows are sequences; floats are canonically formatted."""
    text = config_comment(run_config) + ",".join(header) + "\n"
    body = []
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v) if math.isfinite(v) else "nan")
            else:
                cells.append(str(v))
        body.append(",".join(cells))
    atomic_write_text(path, text + "\n".join(body) + ("\n" if body else ""))


def _read_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in raw.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header != expected_header:
        raise FormatError(f"{path}: expected header {expected_header}, got {header}")
    rows = []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(expected_header):
            raise FormatError(f"{path}: row has {len(cells)} cells, expected {len(expected_header)}")
        rows.append(cells)
    return rows


def _parse_float(cell: str, path, what: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise FormatError(f"{path}: bad {what} value {cell!r}") from exc


def read_spectrum_csv(path: Path, age_hours: float = 0.0, cell_id: str = "") -> ImpedanceSpectrum:
    rows = _read_rows(path, SPECTRUM_HEADER)
    data = np.array(
        [[_parse_float(c, path, name) for c, name in zip(r, SPECTRUM_HEADER)] for r in rows]
    )
    return validate_spectrum(
        ImpedanceSpectrum(
            freqs_hz=data[:, 0],
            re_ohm=data[:, 1],
            im_ohm=data[:, 2],
            age_hours=age_hours,
            cell_id=cell_id or Path(path).stem,
        )
    )


def write_spectrum_csv(path: Path, s: ImpedanceSpectrum, run_config: dict | None = None) -> None:
    rows = zip(s.freqs_hz, s.re_ohm, s.im_ohm)
    write_csv(path, SPECTRUM_HEADER, rows, run_config)


@dataclass(frozen=True)
class ManifestEntry:
    spectrum_file: Path
    age_hours: float
    cell_id: str


def read_manifest(path: Path) -> list[ManifestEntry]:
    """Manifest rows; spectrum paths are resolved relative to the
    manifest's directory."""
    base = Path(path).parent
    entries = []
    for r in _read_rows(path, MANIFEST_HEADER):
        age = _parse_float(r[1], path, "age_hours")
        if age < 0:
            raise FormatError(f"{path}: negative age_hours {age}")
        entries.append(ManifestEntry(base / r[0], age, r[2]))
    if not entries:
        raise FormatError(f"{path}: manifest has no entries")
    return entries


def write_manifest(path: Path, entries, run_config: dict | None = None) -> None:
    rows = [(e.spectrum_file.name, e.age_hours, e.cell_id) for e in entries]
    write_csv(path, MANIFEST_HEADER, rows, run_config)


FEATURES_HEADER = feature_names() + ["age_hours", "cell_id", "flags"]


def write_features_csv(path: Path, rows, run_config: dict | None = None) -> None:
    """Each row: (values 18-vector or None, age_hours, cell_id, flag)."""
    out = []
    for values, age, cell, flag in rows:
        vals = np.full(18, np.nan) if values is None else np.asarray(values, dtype=float)
        out.append(list(vals) + [age, cell, flag])
    write_csv(path, FEATURES_HEADER, out, run_config)


def read_features_csv(path: Path, allow_flagged: bool = False):
    """Returns (Dataset, n_dropped_flagged). Flagged rows are rejected
    unless allow_flagged, in which case they are dropped."""
    rows = _read_rows(path, FEATURES_HEADER)
    X, y, cells, flagged = [], [], [], 0
    for r in rows:
        flag = r[-1]
        if flag:
            if not allow_flagged:
                raise FormatError(
                    f"{path}: flagged row for {r[-2]!r} ({flag}); rerun with --allow-flagged to drop"
                )
            flagged += 1
            continue
        X.append([_parse_float(c, path, name) for c, name in zip(r[:18], FEATURES_HEADER)])
        y.append(_parse_float(r[18], path, "age_hours"))
        cells.append(r[19])
    if len(X) < 3:
        raise FormatError(f"{path}: need at least 3 clean feature rows, got {len(X)}")
    data = Dataset(
        X=np.asarray(X), y=np.asarray(y), names=tuple(feature_names()), cell_ids=tuple(cells)
    )
    return data, flagged
