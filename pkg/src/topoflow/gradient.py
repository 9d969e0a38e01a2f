"""Chain rule from diagram space back to point coordinates.

A diagram point's birth/death each come from one edge; perturbing an edge
length moves its two endpoints along the unit edge direction. Summing those
contributions over the cotangent gives the sparse topological gradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import Cotangent
from .rips import Diagram, as_point_cloud

MIN_EDGE_LENGTH = 1e-12
CONSOLIDATE_TOL = 1e-9


class DegenerateEdgeError(RuntimeError):
    """A critical edge is too short to define a direction."""


@dataclass(frozen=True)
class SparseGradient:
    """Gradient vectors on the support indices of an n x d cloud."""

    indices: np.ndarray    # sorted point indices, shape (m,)
    vectors: np.ndarray    # shape (m, d)
    n: int
    d: int

    def __len__(self) -> int:
        return len(self.indices)

    def densify(self) -> np.ndarray:
        out = np.zeros((self.n, self.d))
        out[self.indices] = self.vectors
        return out

    def norm_squared(self) -> float:
        return float(np.sum(self.vectors ** 2))

    @classmethod
    def empty(cls, n: int, d: int) -> "SparseGradient":
        return cls(np.empty(0, np.int64), np.empty((0, d)), n, d)


def _accumulate_edge(acc, coords, edge, weight):
    i, j = int(edge[0]), int(edge[1])
    u = coords[i] - coords[j]
    length = float(np.linalg.norm(u))
    if length < MIN_EDGE_LENGTH:
        raise DegenerateEdgeError(
            f"edge ({i}, {j}) has length {length:.2e}; direction undefined")
    direction = u / length
    acc[i] += weight * direction
    acc[j] -= weight * direction


def pullback(D: Diagram, cot: Cotangent, X) -> SparseGradient:
    """Pull a diagram-space cotangent back through the critical edges.

    For each entry, dl/db flows through the birth edge and dl/dd through the
    death edge, +/- the unit edge direction at the two endpoints. H0 births
    carry no edge and contribute nothing. Exact-zero result vectors are
    dropped from the support.
    """
    X = as_point_cloud(X)
    acc = np.zeros((X.n, X.d))
    for pos in range(len(cot)):
        i = int(cot.indices[pos])
        db = float(cot.d_birth[pos])
        dd = float(cot.d_death[pos])
        if db != 0.0 and D.birth_edges[i, 0] >= 0:
            _accumulate_edge(acc, X.coords, D.birth_edges[i], db)
        if dd != 0.0 and D.death_edges[i, 0] >= 0:
            _accumulate_edge(acc, X.coords, D.death_edges[i], dd)
    support = np.nonzero(np.any(acc != 0.0, axis=1))[0]
    return SparseGradient(support.astype(np.int64), acc[support], X.n, X.d)


def consolidate(g: SparseGradient, X, tol: float = CONSOLIDATE_TOL
                ) -> tuple[np.ndarray, np.ndarray]:
    """Merge support points that coincide within tol into single constraints.

    Returns (centers, vectors) with pairwise-distinct centers and summed
    vectors; exact-zero sums are dropped. This is what the kernel solve needs:
    duplicate centers make the Gram matrix singular.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    X = as_point_cloud(X)
    m = len(g)
    if m == 0:
        return np.empty((0, X.d)), np.empty((0, X.d))
    pts = X.coords[g.indices]
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(m):
        for b in range(a + 1, m):
            if np.linalg.norm(pts[a] - pts[b]) <= tol:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for a in range(m):
        groups.setdefault(find(a), []).append(a)
    centers = []
    vectors = []
    for root in sorted(groups):
        members = groups[root]
        total = g.vectors[members].sum(axis=0)
        if not np.any(total != 0.0):
            continue
        centers.append(pts[root])
        vectors.append(total)
    if not centers:
        return np.empty((0, X.d)), np.empty((0, X.d))
    return np.asarray(centers), np.asarray(vectors)
