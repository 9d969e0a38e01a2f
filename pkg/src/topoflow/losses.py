"""Topological loss functionals on persistence diagrams.

Every loss returns its value together with a cotangent: the partial
derivatives (dl/db_i, dl/dd_i) at each selected diagram point, indexed into
the diagram it was computed from. Infinite-death points never enter a loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rips import Diagram, as_point_cloud

FAMILIES = ("simplify", "simplify-death", "augment", "augment-death", "register")

REGISTRATION_MAX_POINTS = 64


@dataclass(frozen=True)
class LossSpec:
    """Which loss to evaluate, on which part of the diagram.

    top_k = None sums over all finite points of the requested dimensions;
    top_k = k restricts to the k most persistent (ties: smaller birth, then
    smaller index). `box` is an optional (lower, upper) corner pair whose
    squared-distance regularizer is added with weight box_weight by the
    optimizer pipeline.
    """

    family: str = "simplify"
    hom_dims: tuple[int, ...] = (1,)
    top_k: Optional[int] = None
    target: Optional[Diagram] = None
    box: Optional[tuple] = None
    box_weight: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}")
        hd = tuple(int(p) for p in self.hom_dims)
        if not hd or any(p < 0 for p in hd):
            raise ValueError("hom_dims must be non-empty, non-negative")
        object.__setattr__(self, "hom_dims", hd)
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if (self.target is not None) != (self.family == "register"):
            raise ValueError("target diagram is required iff family is 'register'")
        if self.box is not None:
            lo, hi = (np.asarray(b, dtype=np.float64) for b in self.box)
            if not np.all(lo < hi):
                raise ValueError("box lower corner must be strictly below upper")
            object.__setattr__(self, "box", (lo, hi))


@dataclass
class Cotangent:
    """dl/db and dl/dd per referenced diagram point."""

    indices: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    d_birth: np.ndarray = field(default_factory=lambda: np.empty(0))
    d_death: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def empty(cls) -> "Cotangent":
        return cls()


def select_points(D: Diagram, spec: LossSpec) -> np.ndarray:
    """Indices of the finite points the loss sums over, in selection order."""
    idx = D.finite_indices(spec.hom_dims)
    if len(idx) == 0:
        return idx
    pers = D.deaths[idx] - D.births[idx]
    order = np.lexsort((idx, D.births[idx], -pers))
    idx = idx[order]
    if spec.top_k is not None:
        idx = idx[: spec.top_k]
    return idx


def simplification_loss(D: Diagram, spec: LossSpec) -> tuple[float, Cotangent]:
    """simplify: sum (b-d)^2; simplify-death: sum d^2 (over selected points)."""
    if spec.family not in ("simplify", "simplify-death"):
        raise ValueError(f"not a simplification family: {spec.family}")
    idx = select_points(D, spec)
    if len(idx) == 0:
        return 0.0, Cotangent.empty()
    b = D.births[idx]
    d = D.deaths[idx]
    if spec.family == "simplify":
        gap = b - d
        value = float(np.sum(gap ** 2))
        return value, Cotangent(idx, 2.0 * gap, -2.0 * gap)
    value = float(np.sum(d ** 2))
    return value, Cotangent(idx, np.zeros_like(d), 2.0 * d)


def augmentation_loss(D: Diagram, spec: LossSpec) -> tuple[float, Cotangent]:
    """augment: -sum (b-d)^2; augment-death: -sum d^2 (over selected points).

    The common single-feature form is top_k = 1 on the most persistent point.
    """
    if spec.family not in ("augment", "augment-death"):
        raise ValueError(f"not an augmentation family: {spec.family}")
    idx = select_points(D, spec)
    if len(idx) == 0:
        return 0.0, Cotangent.empty()
    b = D.births[idx]
    d = D.deaths[idx]
    if spec.family == "augment":
        gap = b - d
        value = -float(np.sum(gap ** 2))
        return value, Cotangent(idx, -2.0 * gap, 2.0 * gap)
    value = -float(np.sum(d ** 2))
    return value, Cotangent(idx, np.zeros_like(d), -2.0 * d)


def _diag_cost(b: np.ndarray, d: np.ndarray) -> np.ndarray:
    # squared distance to the diagonal projection ((b+d)/2, (b+d)/2)
    return (d - b) ** 2 / 2.0


def registration_loss(D: Diagram, target: Diagram,
                      spec: LossSpec) -> tuple[float, Cotangent]:
    """Exact squared-2-Wasserstein matching cost against a target diagram.

    Matched per homology dimension on the diagonal-augmented cost matrix;
    unmatched points pay their squared distance to the diagonal. The
    cotangent covers D's points only (the target is fixed).
    """
    total = 0.0
    cot_idx: list[int] = []
    cot_db: list[float] = []
    cot_dd: list[float] = []
    for p in spec.hom_dims:
        di = D.finite_indices([p])
        ti = target.finite_indices([p])
        m, k = len(di), len(ti)
        if m > REGISTRATION_MAX_POINTS or k > REGISTRATION_MAX_POINTS:
            raise ValueError(
                f"registration matching budget is {REGISTRATION_MAX_POINTS} points "
                f"per dimension; got {m} vs {k} in H{p}")
        if m == 0 and k == 0:
            continue
        b, d = D.births[di], D.deaths[di]
        tb, td = target.births[ti], target.deaths[ti]
        cost = np.zeros((m + k, k + m))
        if m and k:
            cost[:m, :k] = (b[:, None] - tb[None, :]) ** 2 + (d[:, None] - td[None, :]) ** 2
        if m:
            cost[:m, k:] = _diag_cost(b, d)[:, None]
        if k:
            cost[m:, :k] = _diag_cost(tb, td)[None, :]
        rows, cols = linear_sum_assignment(cost)
        total += float(cost[rows, cols].sum())
        for r, c in zip(rows, cols):
            if r >= m:
                continue
            cot_idx.append(int(di[r]))
            if c < k:
                cot_db.append(2.0 * (b[r] - tb[c]))
                cot_dd.append(2.0 * (d[r] - td[c]))
            else:
                cot_db.append(b[r] - d[r])
                cot_dd.append(d[r] - b[r])
    if not cot_idx:
        return total, Cotangent.empty()
    return total, Cotangent(np.asarray(cot_idx, np.int64),
                            np.asarray(cot_db), np.asarray(cot_dd))


def topological_loss(D: Diagram, spec: LossSpec) -> tuple[float, Cotangent]:
    """Dispatch on the loss family."""
    if spec.family in ("simplify", "simplify-death"):
        return simplification_loss(D, spec)
    if spec.family in ("augment", "augment-death"):
        return augmentation_loss(D, spec)
    return registration_loss(D, spec.target, spec)


def box_regularization(X, box) -> tuple[float, np.ndarray]:
    """Sum of squared distances to an axis-aligned box, with its gradient.

    Zero inside the box; gradient is 2 (x - clamp(x, box)) per point.
    """
    X = as_point_cloud(X)
    lo, hi = (np.asarray(b, dtype=np.float64) for b in box)
    if not np.all(lo < hi):
        raise ValueError("box lower corner must be strictly below upper")
    clamped = np.clip(X.coords, lo, hi)
    diff = X.coords - clamped
    return float(np.sum(diff ** 2)), 2.0 * diff


def pers_k(D: Diagram, k: int) -> float:
    """Sum of the k largest |death - birth| over finite points."""
    if k < 1:
        raise ValueError("k must be >= 1")
    idx = D.finite_indices()
    if len(idx) == 0:
        return 0.0
    gaps = np.abs(D.deaths[idx] - D.births[idx])
    gaps.sort()
    return float(gaps[-k:].sum())
