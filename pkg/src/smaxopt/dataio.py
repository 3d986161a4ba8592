"""File formats: Matrix Market / CSV matrices, plain vectors, svmlight data.

Matrices load from Matrix Market (coordinate or array) by extension .mtx/.mm,
otherwise from delimited text with an optional header line. Vectors are one
value per line. SVM data uses the svmlight text format `label idx:val ...`
with 1-based indices, densified on load.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.io

from .linalg import as_matrix, as_vector


def load_matrix(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(f"matrix file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext in (".mtx", ".mm"):
        mat = scipy.io.mmread(path)
        arr = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
        return as_matrix(arr, f"matrix {path}")
    with open(path) as fh:
        first = fh.readline()
    delim = "," if "," in first else None
    arr = np.loadtxt(path, delimiter=delim, skiprows=1 if _is_header(first) else 0,
                     ndmin=2)
    return as_matrix(arr, f"matrix {path}")


def _is_header(line: str) -> bool:
    tokens = line.replace(",", " ").split()
    for tok in tokens:
        try:
            float(tok)
        except ValueError:
            return True
    return False


def save_matrix(path: str, matrix: np.ndarray) -> None:
    matrix = as_matrix(matrix)
    ext = os.path.splitext(path)[1].lower()
    if ext in (".mtx", ".mm"):
        scipy.io.mmwrite(path, matrix)
    else:
        np.savetxt(path, matrix, fmt="%.17g", delimiter=",")


def load_vector(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(f"vector file not found: {path}")
    arr = np.loadtxt(path, ndmin=1)
    return as_vector(arr, name=f"vector {path}")


def save_vector(path: str, vec: np.ndarray) -> None:
    np.savetxt(path, as_vector(vec), fmt="%.17g")


def load_svmlight(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse svmlight text into dense (points, labels)."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"svm data file not found: {path}")
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    width = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
                feats = {}
                for token in parts[1:]:
                    idx, val = token.split(":", 1)
                    feats[int(idx)] = float(val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed svmlight line") from exc
            if feats and min(feats) < 1:
                raise ValueError(f"{path}:{lineno}: svmlight indices are 1-based")
            width = max(width, max(feats, default=0))
            rows.append(feats)
    if not rows or width == 0:
        raise ValueError(f"{path}: no usable svmlight rows")
    points = np.zeros((len(rows), width))
    for i, feats in enumerate(rows):
        for idx, val in feats.items():
            points[i, idx - 1] = val
    return as_matrix(points, "points"), as_vector(np.array(labels), name="labels")


def save_svmlight(path: str, points: np.ndarray, labels: np.ndarray) -> None:
    points = as_matrix(points)
    labels = as_vector(labels, points.shape[0])
    with open(path, "w") as fh:
        for label, row in zip(labels, points):
            feats = " ".join(f"{j + 1}:{v:.17g}" for j, v in enumerate(row))
            fh.write(f"{label:g} {feats}\n")
