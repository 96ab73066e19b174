"""Text formats for matrices, datasets and run metadata.

Matrices are comma-separated rows of 17-significant-digit floats under a
``# rows=<m> cols=<k>`` header line; datasets are the same without the
header.  All files are UTF-8 with LF line endings.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .model import Dataset, InputError

_HEADER = re.compile(r"#\s*rows=(\d+)\s+cols=(\d+)\s*$")
FLOAT_FMT = "%.17g"


def _write_rows(fh, A):
    for row in A:
        fh.write(",".join(FLOAT_FMT % v for v in row))
        fh.write("\n")


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise InputError(f"expected a 2-d array for {path}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# rows={M.shape[0]} cols={M.shape[1]}\n")
        _write_rows(fh, M)


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            m = _HEADER.match(first.strip())
            if m is None:
                raise InputError(f"{path}: missing '# rows=<m> cols=<k>' header")
            rows, cols = int(m.group(1)), int(m.group(2))
            A = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if rows == 0:
        A = np.zeros((0, cols))
    if A.shape != (rows, cols):
        raise InputError(f"{path}: header says {rows}x{cols}, body is {A.shape[0]}x{A.shape[1]}")
    return A


def write_dataset(path, data) -> None:
    X = data.samples if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        _write_rows(fh, X)


def read_dataset(path) -> Dataset:
    path = Path(path)
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return Dataset(X)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc
