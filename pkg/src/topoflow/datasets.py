"""Synthetic point-cloud generators for experiments and tests."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .rips import PointCloud

SHAPES = ("circle", "sphere", "uniform-box")


def generate(shape: str, n: int, noise_std: float = 0.0, seed: int = 0,
             dim: Optional[int] = None) -> PointCloud:
    """Sample n points on a unit circle / unit sphere / [-1,1]^d box,
    plus isotropic Gaussian noise. Deterministic per seed."""
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    if shape == "circle":
        if dim not in (None, 2):
            raise ValueError("circle lives in R^2")
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
    elif shape == "sphere":
        if dim not in (None, 3):
            raise ValueError("sphere lives in R^3")
        g = rng.normal(size=(n, 3))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        d = 2 if dim is None else int(dim)
        if d < 1:
            raise ValueError("dim must be >= 1")
        pts = rng.uniform(-1.0, 1.0, size=(n, d))
    if noise_std > 0:
        pts = pts + rng.normal(0.0, noise_std, size=pts.shape)
    return PointCloud(pts)
