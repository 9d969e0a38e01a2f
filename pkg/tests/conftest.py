"""Shared helpers: generic random clouds and brute-force oracles."""
import numpy as np
import pytest

from topoflow import PointCloud


def random_cloud(rng, n, d, min_gap=1e-3, scale=1.0):
    """A cloud whose pairwise distances are pairwise separated by > min_gap,
    so the critical-pair structure is stable under small perturbations."""
    for _ in range(200):
        pts = rng.normal(size=(n, d)) * scale
        dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        iu = np.triu_indices(n, 1)
        vals = np.sort(dist[iu])
        if vals[0] > min_gap and np.min(np.diff(vals)) > min_gap:
            return PointCloud(pts)
    raise AssertionError("could not sample a distance-generic cloud")


def noisy_circle(n, noise, seed):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, n)
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    return PointCloud(pts + rng.normal(0, noise, pts.shape))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
