"""Synthetic instance generators, byte-reproducible from a single seed."""

from __future__ import annotations

import json
import os

import numpy as np

from .dataio import save_matrix, save_svmlight, save_vector
from .errors import NotPositiveDefinite
from .linalg import NormMatrix

_MIN_PLANT_MARGIN = 0.3  # resample rows nearly orthogonal to the planted normal


def gen_linf_random(m: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray, dict]:
    """Standard normal (A, b); A redrawn until A^T A is positive definite."""
    if m < d or d < 1:
        raise ValueError(f"need m >= d >= 1, got m={m}, d={d}")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        a = rng.standard_normal((m, d))
        try:
            NormMatrix.gram(a)
        except NotPositiveDefinite:
            continue
        break
    else:
        raise RuntimeError("could not draw a full-rank matrix in 100 attempts")
    b = rng.standard_normal(m)
    return a, b, {"kind": "linf-random", "seed": seed, "m": m, "d": d}


def gen_linf_interp(d: int, seed: int) -> tuple[np.ndarray, np.ndarray, dict]:
    """Square identity system: the optimum interpolates b exactly, f* = 0."""
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(d)
    meta = {"kind": "linf-interp", "seed": seed, "m": d, "d": d, "fstar": 0.0}
    return np.eye(d), b, meta


def gen_svm_separable(m: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray, dict]:
    """Plant a hyperplane with unit margins: b_i <a_i, x_plant> = 1 for all i."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be at least 1")
    rng = np.random.default_rng(seed)
    x_plant = rng.standard_normal(d)
    x_plant /= np.linalg.norm(x_plant)
    points = np.empty((m, d))
    labels = np.empty(m)
    for i in range(m):
        while True:
            a = rng.standard_normal(d)
            margin = float(a @ x_plant)
            if abs(margin) >= _MIN_PLANT_MARGIN:
                break
        labels[i] = np.sign(margin)
        points[i] = a / abs(margin)
    meta = {"kind": "svm-separable", "seed": seed, "m": m, "d": d,
            "x_plant": x_plant.tolist()}
    return points, labels, meta


def gen_svm_noisy(m: int, d: int, seed: int, flip: float = 0.1):
    """Separable instance with a fraction of labels flipped."""
    if not 0.0 <= flip <= 1.0:
        raise ValueError("flip must be in [0, 1]")
    points, labels, meta = gen_svm_separable(m, d, seed)
    rng = np.random.default_rng(seed + 1)
    flips = rng.random(m) < flip
    labels = np.where(flips, -labels, labels)
    meta.update({"kind": "svm-noisy", "flip": flip, "n_flipped": int(flips.sum())})
    meta.pop("x_plant")
    return points, labels, meta


def write_instance(out_dir: str, kind: str, **params) -> dict:
    """Generate and write one instance; returns the metadata written."""
    os.makedirs(out_dir, exist_ok=True)
    if kind == "linf-random":
        a, b, meta = gen_linf_random(params["m"], params["d"], params["seed"])
    elif kind == "linf-interp":
        a, b, meta = gen_linf_interp(params["d"], params["seed"])
    elif kind == "svm-separable":
        points, labels, meta = gen_svm_separable(params["m"], params["d"], params["seed"])
    elif kind == "svm-noisy":
        points, labels, meta = gen_svm_noisy(params["m"], params["d"], params["seed"],
                                             params.get("flip", 0.1))
    else:
        raise ValueError(f"unknown instance kind {kind!r}")

    if kind.startswith("linf"):
        meta["matrix"] = "A.mtx"
        meta["rhs"] = "b.txt"
        save_matrix(os.path.join(out_dir, "A.mtx"), a)
        save_vector(os.path.join(out_dir, "b.txt"), b)
    else:
        meta["data"] = "data.svmlight"
        save_svmlight(os.path.join(out_dir, "data.svmlight"), points, labels)
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta
