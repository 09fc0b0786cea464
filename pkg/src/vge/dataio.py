"""Prediction-file ingest and report serialization.

Two input layouts are supported:

* JSON lines, one object per sample:
  ``{"id": "s0", "probs": [[...C floats...] x M], "label": 3}`` (label optional);
* CSV with header ``id,member,class_0,...,class_{C-1}[,label]``, one row per
  (sample, member).

Every member row is validated as a simplex point with tolerance 1e-5 on
ingest. Floats in reports are emitted with 6 significant digits.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import INGEST_TOL, EnsembleBatch, validate_simplex
from .errors import InconsistentShape, ParseError, VgeError
from .uncertainty import ABSTAIN, UncertaintyReport

REPORT_FIELDS = (
    "id",
    "tu",
    "au",
    "eu",
    "tu_gated",
    "au_gated",
    "eu_gated",
    "epkl",
    "epjs",
    "snr",
    "vgmu",
    "decision",
    "region",
)

DECOMPOSE_FIELDS = ("id", "tu", "au", "eu", "tu_gated", "au_gated", "eu_gated")


@dataclass(frozen=True)
class PredictionFile:
    """Parsed prediction file: ids, (B, M, C) batch, optional labels."""

    ids: list[str]
    batch: EnsembleBatch
    labels: list[int | None]


def fmt_float(x: float) -> float:
    """Round to 6 significant digits for stable, diffable output."""
    return float(f"{x:.6g}")


def _validated_members(rows, where: str) -> list[np.ndarray]:
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(validate_simplex(row, tol=INGEST_TOL).values)
        except VgeError as exc:
            raise ParseError(f"{where}, member {i}: {exc}") from exc
    return out


def read_jsonl(path) -> PredictionFile:
    """Parse a JSON-lines prediction file."""
    ids: list[str] = []
    labels: list[int | None] = []
    samples: list[np.ndarray] = []
    shape: tuple[int, int] | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "probs" not in obj:
                raise ParseError(f"line {lineno}: expected an object with 'id' and 'probs'")
            probs = obj["probs"]
            if not isinstance(probs, list) or not probs or not isinstance(probs[0], list):
                raise ParseError(f"line {lineno}: 'probs' must be an M x C nested list")
            members = _validated_members(probs, f"line {lineno}")
            mc = (len(members), len(members[0]))
            if any(m.shape[0] != mc[1] for m in members):
                raise ParseError(f"line {lineno}: member rows have unequal class counts")
            if shape is None:
                shape = mc
            elif mc != shape:
                raise InconsistentShape(
                    f"line {lineno}: sample has shape {mc}, earlier samples {shape}"
                )
            label = obj.get("label")
            if label is not None and not isinstance(label, int):
                raise ParseError(f"line {lineno}: 'label' must be an integer when present")
            ids.append(str(obj["id"]))
            labels.append(label)
            samples.append(np.stack(members))
    if not samples:
        raise ParseError(f"{path}: file contains no samples")
    return PredictionFile(ids=ids, batch=EnsembleBatch(np.stack(samples), tol=INGEST_TOL), labels=labels)


def read_csv(path) -> PredictionFile:
    """Parse a CSV prediction file (one row per sample/member pair)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        cols = [h.strip() for h in header]
        if cols[:2] != ["id", "member"]:
            raise ParseError("line 1: header must start with 'id,member'")
        has_label = cols[-1] == "label"
        class_cols = cols[2 : -1 if has_label else len(cols)]
        expected = [f"class_{i}" for i in range(len(class_cols))]
        if not class_cols or class_cols != expected:
            raise ParseError("line 1: class columns must be class_0..class_{C-1}")
        n_classes = len(class_cols)

        order: list[str] = []
        rows_by_id: dict[str, dict[int, np.ndarray]] = {}
        label_by_id: dict[str, int | None] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(cols):
                raise ParseError(f"line {lineno}: expected {len(cols)} fields, got {len(row)}")
            sid = row[0]
            try:
                member = int(row[1])
                values = [float(x) for x in row[2 : 2 + n_classes]]
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            vec = _validated_members([values], f"line {lineno}")[0]
            label: int | None = None
            if has_label and row[-1] != "":
                try:
                    label = int(row[-1])
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: label must be an integer") from exc
            if sid not in rows_by_id:
                order.append(sid)
                rows_by_id[sid] = {}
                label_by_id[sid] = label
            elif label is not None and label_by_id[sid] is None:
                label_by_id[sid] = label
            if member in rows_by_id[sid]:
                raise InconsistentShape(f"line {lineno}: duplicate member {member} for id {sid!r}")
            rows_by_id[sid][member] = vec

    if not order:
        raise ParseError(f"{path}: file contains no samples")
    n_members = len(rows_by_id[order[0]])
    samples = []
    for sid in order:
        members = rows_by_id[sid]
        if len(members) != n_members or sorted(members) != list(range(n_members)):
            raise InconsistentShape(
                f"sample {sid!r}: members must be 0..{n_members - 1}, got {sorted(members)}"
            )
        samples.append(np.stack([members[i] for i in range(n_members)]))
    return PredictionFile(
        ids=order,
        batch=EnsembleBatch(np.stack(samples), tol=INGEST_TOL),
        labels=[label_by_id[sid] for sid in order],
    )


def read_predictions(path) -> PredictionFile:
    """Dispatch on file extension: .csv goes to the CSV reader, else JSONL."""
    suffix = Path(path).suffix.lower()
    return read_csv(path) if suffix == ".csv" else read_jsonl(path)


def report_to_dict(report: UncertaintyReport, fields=REPORT_FIELDS) -> dict:
    out = {}
    for name in fields:
        value = getattr(report, name)
        if name == "decision":
            out[name] = "abstain" if value == ABSTAIN else int(value)
        elif isinstance(value, float):
            out[name] = fmt_float(value)
        else:
            out[name] = value
    return out


def write_reports_jsonl(reports, fh, fields=REPORT_FIELDS) -> None:
    for report in reports:
        fh.write(json.dumps(report_to_dict(report, fields)) + "\n")


def write_reports_csv(reports, fh, fields=REPORT_FIELDS) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(fields)
    for report in reports:
        row = report_to_dict(report, fields)
        writer.writerow([row[name] for name in fields])


def write_curve_csv(fh, header: tuple[str, str], xs, ys) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for x, y in zip(xs, ys):
        writer.writerow([fmt_float(float(x)), fmt_float(float(y))])
