"""CSV datasets and JSON documents on disk.

CSV dialect: comma separated, one header row of column labels, one
observation per line, plain decimal numbers (``1.5``, ``-2e-3``); no
thousands separators, quoting of numbers or missing values.
"""
from __future__ import annotations

import csv
import json
import logging
import re

import numpy as np

from .errors import InputError
from .sem import Dataset

log = logging.getLogger(__name__)

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class CsvFormatError(InputError):
    """A CSV cell or row could not be parsed; ``line`` and ``column`` are 1-based."""

    def __init__(self, message, *, line=None, column=None, label=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}" + (f" ({label!r})" if label else ""))
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line, self.column, self.label = line, column, label


def parse_number(text: str) -> float:
    s = text.strip()
    if not _NUMBER.fullmatch(s):
        raise ValueError(f"not a plain decimal number: {text!r}")
    return float(s)


def read_csv(path) -> tuple:
    """Load a dataset; returns ``(dataset, warnings)``.

    Raises
    ------
    CsvFormatError
        On a missing header, ragged row or non-numeric cell.
    """
    warnings = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("file is empty; a header row is required", line=1) from None
        labels = [h.strip() for h in header]
        if not labels or any(not h for h in labels):
            raise CsvFormatError("header has empty column names", line=1)
        if all(_NUMBER.fullmatch(h) for h in labels):
            raise CsvFormatError("first row looks numeric; a header row is required", line=1)
        if len(set(labels)) != len(labels):
            warnings.append("duplicate column labels in header")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(labels):
                raise CsvFormatError(f"expected {len(labels)} fields, found {len(row)}", line=line)
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    vals.append(parse_number(cell))
                except ValueError:
                    raise CsvFormatError(f"non-numeric value {cell!r}", line=line, column=col,
                                         label=labels[col - 1]) from None
            rows.append(vals)
    if not rows:
        raise CsvFormatError("no data rows after the header", line=2)
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise CsvFormatError("values overflow to infinity")
    const = [labels[j] for j in range(values.shape[1]) if np.all(values[:, j] == values[0, j])]
    if const and values.shape[0] > 1:
        warnings.append(f"constant columns: {', '.join(const)}")
    for w in warnings:
        log.warning("%s: %s", path, w)
    return Dataset(values, tuple(labels)), warnings


def write_csv(dataset: Dataset, path) -> None:
    """Write with shortest round-trip float formatting, so reloads are exact."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(dataset.labels) + "\n")
        for row in dataset.values:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
