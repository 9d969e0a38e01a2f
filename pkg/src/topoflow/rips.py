"""Vietoris-Rips filtrations and persistence diagrams over point clouds.

A filtration stores, per dimension, the simplices sorted by
(filtration value, lexicographic vertices); the global filtration order is the
refinement by (value, dimension, lexicographic vertices). Every simplex of
dimension >= 1 carries the edge realizing its filtration value (ties broken by
the lexicographically smallest pair), which is what gradients flow through.

Persistence is computed over Z/2. Dimension zero uses union-find with the
elder rule; higher dimensions reduce the anti-transposed boundary block of
each dimension with clearing fed upward, which yields the same pairing as the
textbook left-to-right reduction (`reduce_oracle` keeps that reference
implementation for cross-validation).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from . import _reduction as _red

DEFAULT_SIMPLEX_BUDGET = 50_000_000
BUDGET_ENV_VAR = "TOPOFLOW_SIMPLEX_BUDGET"


class SimplexBudgetError(RuntimeError):
    """Raised when a filtration would exceed the simplex budget."""


@dataclass(frozen=True)
class PointCloud:
    """n points in R^d, the optimization variable."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.ascontiguousarray(np.asarray(self.coords, dtype=np.float64))
        if coords.ndim != 2:
            raise ValueError("coords must be a 2-d array of shape (n, d)")
        n, d = coords.shape
        if n < 1 or d < 1:
            raise ValueError("need n >= 1 points and d >= 1 coordinates")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]


def as_point_cloud(X) -> PointCloud:
    return X if isinstance(X, PointCloud) else PointCloud(np.asarray(X, dtype=np.float64))


@dataclass(frozen=True)
class Simplex:
    """A simplex with its filtration value and the edge achieving it."""

    vertices: tuple[int, ...]
    value: float
    critical_edge: Optional[tuple[int, int]]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.vertices, self.vertices[1:])):
            raise ValueError("vertices must be strictly increasing")
        if len(self.vertices) == 1 and self.critical_edge is not None:
            raise ValueError("a vertex has no critical edge")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class FilteredComplex:
    """All Rips simplices up to max_dim with value <= max_radius."""

    def __init__(self, n_points: int, max_dim: int, max_radius: float,
                 verts: list[np.ndarray], values: list[np.ndarray],
                 crit: list[np.ndarray]):
        self.n_points = n_points
        self.max_dim = max_dim
        self.max_radius = max_radius
        self._verts = verts
        self._values = values
        self._crit = crit

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self._values)

    def __len__(self) -> int:
        return sum(self.counts)

    def dim_arrays(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(vertices, values, critical edges) of the k-simplices, filtration order."""
        return self._verts[k], self._values[k], self._crit[k]

    def simplex(self, k: int, idx: int) -> Simplex:
        vs = tuple(int(v) for v in self._verts[k][idx])
        val = float(self._values[k][idx])
        if k == 0:
            return Simplex(vs, val, None)
        ce = self._crit[k][idx]
        return Simplex(vs, val, (int(ce[0]), int(ce[1])))

    def _global_order(self) -> list[tuple[int, int]]:
        keys_dim = []
        keys_val = []
        pad_cols = [[] for _ in range(self.max_dim + 1)]
        for k in range(self.max_dim + 1):
            m = len(self._values[k])
            keys_dim.append(np.full(m, k, np.int32))
            keys_val.append(self._values[k])
            for c in range(self.max_dim + 1):
                col = self._verts[k][:, c] if c <= k else np.full(m, -1, np.int32)
                pad_cols[c].append(col)
        val = np.concatenate(keys_val)
        dim = np.concatenate(keys_dim)
        cols = [np.concatenate(pc) for pc in pad_cols]
        order = np.lexsort(tuple(reversed(cols)) + (dim, val))
        offsets = np.cumsum([0] + [len(v) for v in self._values])
        out = []
        for g in order:
            k = int(np.searchsorted(offsets, g, side="right") - 1)
            out.append((k, int(g - offsets[k])))
        return out

    def __iter__(self) -> Iterator[Simplex]:
        for k, i in self._global_order():
            yield self.simplex(k, i)

    @property
    def simplices(self) -> list[Simplex]:
        """Materialized simplex list in global filtration order (small complexes)."""
        return list(self)


class DiagramPoint(NamedTuple):
    hom_dim: int
    birth: float
    death: float
    birth_edge: Optional[tuple[int, int]]
    death_edge: Optional[tuple[int, int]]

    @property
    def persistence(self) -> float:
        return self.death - self.birth


def _edge_or_none(e) -> Optional[tuple[int, int]]:
    return None if e[0] < 0 else (int(e[0]), int(e[1]))


class Diagram:
    """Persistence points with birth/death edge attributions.

    Stored as parallel arrays; `points` materializes DiagramPoint tuples.
    Edge columns hold -1 for "none"; deaths may be +inf.
    """

    def __init__(self, hom_dims, births, deaths, birth_edges, death_edges):
        self.hom_dims = np.asarray(hom_dims, dtype=np.int32)
        self.births = np.asarray(births, dtype=np.float64)
        self.deaths = np.asarray(deaths, dtype=np.float64)
        m = len(self.births)
        if birth_edges is None:
            birth_edges = np.full((m, 2), -1, np.int32)
        if death_edges is None:
            death_edges = np.full((m, 2), -1, np.int32)
        self.birth_edges = np.asarray(birth_edges, dtype=np.int32).reshape(m, 2)
        self.death_edges = np.asarray(death_edges, dtype=np.int32).reshape(m, 2)

    @classmethod
    def empty(cls) -> "Diagram":
        return cls(np.empty(0, np.int32), np.empty(0), np.empty(0),
                   np.empty((0, 2), np.int32), np.empty((0, 2), np.int32))

    def __len__(self) -> int:
        return len(self.births)

    @property
    def points(self) -> list[DiagramPoint]:
        return [
            DiagramPoint(int(p), float(b), float(d), _edge_or_none(be), _edge_or_none(de))
            for p, b, d, be, de in zip(self.hom_dims, self.births, self.deaths,
                                       self.birth_edges, self.death_edges)
        ]

    def finite_indices(self, hom_dims: Optional[Iterable[int]] = None) -> np.ndarray:
        """Indices of finite-death points, optionally restricted to hom_dims."""
        mask = np.isfinite(self.deaths)
        if hom_dims is not None:
            mask &= np.isin(self.hom_dims, np.fromiter(hom_dims, dtype=np.int32))
        return np.nonzero(mask)[0]

    def take(self, idx: np.ndarray) -> "Diagram":
        return Diagram(self.hom_dims[idx], self.births[idx], self.deaths[idx],
                       self.birth_edges[idx], self.death_edges[idx])

    def triples(self) -> list[tuple[int, float, float]]:
        return [(int(p), float(b), float(d))
                for p, b, d in zip(self.hom_dims, self.births, self.deaths)]


def _sorted_diagram(hom_dims, births, deaths, birth_edges, death_edges) -> Diagram:
    hom_dims = np.asarray(hom_dims, np.int32)
    births = np.asarray(births, np.float64)
    deaths = np.asarray(deaths, np.float64)
    birth_edges = np.asarray(birth_edges, np.int32).reshape(-1, 2)
    death_edges = np.asarray(death_edges, np.int32).reshape(-1, 2)
    order = np.lexsort((death_edges[:, 1], death_edges[:, 0],
                        birth_edges[:, 1], birth_edges[:, 0],
                        deaths, births, hom_dims))
    return Diagram(hom_dims[order], births[order], deaths[order],
                   birth_edges[order], death_edges[order])


def filtration_value(vertices: Sequence[int], X) -> tuple[float, Optional[tuple[int, int]]]:
    """Rips filtration value of a simplex: the longest pairwise distance and
    the achieving pair (lexicographically smallest on ties)."""
    X = as_point_cloud(X)
    vs = sorted(int(v) for v in vertices)
    if len(set(vs)) != len(vs):
        raise ValueError("vertices must be distinct")
    if vs[0] < 0 or vs[-1] >= X.n:
        raise IndexError("vertex index out of range")
    if len(vs) == 1:
        return 0.0, None
    best = -1.0
    best_pair = None
    for a in range(len(vs)):
        for b in range(a + 1, len(vs)):
            dist = float(np.linalg.norm(X.coords[vs[a]] - X.coords[vs[b]]))
            if dist > best:
                best = dist
                best_pair = (vs[a], vs[b])
    return best, best_pair


def simplex_budget(budget: Optional[int] = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get(BUDGET_ENV_VAR)
    return int(env) if env else DEFAULT_SIMPLEX_BUDGET


def enclosing_radius(X) -> float:
    """min_i max_j d(i, j); the Rips complex is a cone beyond this radius."""
    X = as_point_cloud(X)
    dist = _red.distance_matrix(X.coords)
    return float(np.min(np.max(dist, axis=1)))


def build_filtration(X, max_dim: int, max_radius: Optional[float] = None,
                     budget: Optional[int] = None) -> FilteredComplex:
    """Enumerate all Rips simplices of dimension <= max_dim and value <= max_radius.

    Raises SimplexBudgetError when the simplex count would exceed the budget
    (default 5e7, overridable via TOPOFLOW_SIMPLEX_BUDGET or `budget`).
    """
    X = as_point_cloud(X)
    if not 0 <= max_dim <= 3:
        raise ValueError("max_dim must be between 0 and 3")
    if max_radius is not None and not max_radius > 0:
        raise ValueError("max_radius must be positive")
    n = X.n
    cap = simplex_budget(budget)
    full = max_radius is None
    r = np.inf if full else float(max_radius)

    if full:
        total = sum(math.comb(n, k + 1) for k in range(max_dim + 1))
        if total > cap:
            raise SimplexBudgetError(
                f"full Rips complex has {total} simplices, over the budget of {cap}; "
                f"subsample the cloud, lower max_dim, or raise {BUDGET_ENV_VAR}")

    dist = _red.distance_matrix(X.coords)
    flat, starts = _red.neighbor_lists(dist, r)

    verts = [np.arange(n, dtype=np.int32).reshape(n, 1)]
    values = [np.zeros(n, np.float64)]
    crit = [np.full((n, 2), -1, np.int32)]
    running = n

    def check(count):
        nonlocal running
        running += count
        if running > cap:
            raise SimplexBudgetError(
                f"filtration exceeds the simplex budget of {cap} "
                f"({running}+ simplices); subsample the cloud or raise {BUDGET_ENV_VAR}")

    if max_dim >= 1:
        e_verts, e_vals = _red.enum_edges(dist, flat, starts)
        check(len(e_vals))
        order = np.argsort(e_vals, kind="stable")
        e_verts, e_vals = e_verts[order], e_vals[order]
        verts.append(e_verts)
        values.append(e_vals)
        crit.append(e_verts.copy())

    if max_dim >= 2:
        nt = math.comb(n, 3) if full else _red.count_triangles(flat, starts)
        check(nt)
        t_verts, t_vals, t_crit = _red.enum_triangles(dist, flat, starts, nt)
        order = np.argsort(t_vals, kind="stable")
        t_verts, t_vals, t_crit = _red.gather_sorted(t_verts, t_vals, t_crit, order)
        verts.append(t_verts)
        values.append(t_vals)
        crit.append(t_crit)

    if max_dim >= 3:
        ntt = math.comb(n, 4) if full else _red.count_tetrahedra(verts[2], flat, starts)
        check(ntt)
        q_verts, q_vals, q_crit = _red.enum_tetrahedra(dist, verts[2], flat, starts, ntt)
        order = np.argsort(q_vals, kind="stable")
        q_verts, q_vals, q_crit = _red.gather_sorted(q_verts, q_vals, q_crit, order)
        verts.append(q_verts)
        values.append(q_vals)
        crit.append(q_crit)

    return FilteredComplex(n, max_dim, r, verts, values, crit)


def _binom_table(n: int, kmax: int) -> np.ndarray:
    table = np.zeros((n + 1, kmax + 1), np.int64)
    table[:, 0] = 1
    for k in range(1, kmax + 1):
        table[1:, k] = np.cumsum(table[:-1, k - 1])
    return table


def compute_persistence(C: FilteredComplex, dims: Iterable[int],
                        include_zero: bool = False) -> Diagram:
    """Persistence diagram of the filtration for the requested dimensions.

    Zero-persistence pairs (birth == death) are dropped unless include_zero.
    Essential classes are reported with death = +inf and no death edge.
    """
    dims = sorted(set(int(p) for p in dims))
    if any(p < 0 or p > C.max_dim - 1 for p in dims):
        raise ValueError(f"dims must lie in [0, {C.max_dim - 1}] for this complex")
    if not dims:
        return Diagram.empty()

    out_dim, out_b, out_d, out_be, out_de = [], [], [], [], []

    def emit(p, b, d, be, de):
        out_dim.append(p)
        out_b.append(b)
        out_d.append(d)
        out_be.append(be)
        out_de.append(de)

    none_edge = (-1, -1)
    e_verts, e_vals, e_crit = (C.dim_arrays(1) if C.max_dim >= 1
                               else (np.empty((0, 2), np.int32), np.empty(0), None))
    dying, ess0 = _red.h0_elder_pairs(e_verts, C.n_points)

    if 0 in dims:
        for e in np.nonzero(dying >= 0)[0]:
            d = float(e_vals[e])
            if d == 0.0 and not include_zero:
                continue
            emit(0, 0.0, d, none_edge, (int(e_verts[e, 0]), int(e_verts[e, 1])))
        for _ in range(len(ess0)):
            emit(0, 0.0, np.inf, none_edge, none_edge)

    p_max = max(dims)
    if p_max >= 1:
        binom = _binom_table(C.n_points, C.max_dim + 1)
        neg_mask = dying >= 0  # negative edges clear the dim-1 dual block
        for p in range(1, p_max + 1):
            sig_verts, sig_vals, sig_crit = C.dim_arrays(p)
            cof_verts, cof_vals, cof_crit = C.dim_arrays(p + 1)
            ns, nc = len(sig_vals), len(cof_vals)
            ranks = _red.colex_ranks(sig_verts, binom)
            rank_space = math.comb(C.n_points, p + 1)
            if rank_space <= 30_000_000:
                rank_to_pos = np.full(rank_space, -1, np.int32)
                rank_to_pos[ranks] = np.arange(ns, dtype=np.int32)
                face_rows = _red.locate_faces_direct(cof_verts, binom, rank_to_pos)
            else:
                pos = np.argsort(ranks, kind="stable").astype(np.int32)
                rank_sorted = ranks[pos.astype(np.int64)]
                face_rows = _red.locate_faces(cof_verts, binom, rank_sorted, pos)
            indptr, indices = _red.transpose_reversed(face_rows, ns)
            cleared = neg_mask[::-1].copy()
            pair = _red.reduce_columns(indptr, indices, nc, cleared)
            dual_cols = np.nonzero(pair >= 0)[0]
            sig_ids = ns - 1 - dual_cols
            cof_ids = nc - 1 - pair[dual_cols]
            if p in dims:
                for s, c in zip(sig_ids, cof_ids):
                    b = float(sig_vals[s])
                    d = float(cof_vals[c])
                    if b == d and not include_zero:
                        continue
                    emit(p, b, d,
                         (int(sig_crit[s, 0]), int(sig_crit[s, 1])),
                         (int(cof_crit[c, 0]), int(cof_crit[c, 1])))
                ess_cols = np.nonzero((pair < 0) & ~cleared)[0]
                for j in ess_cols:
                    s = ns - 1 - j
                    emit(p, float(sig_vals[s]), np.inf,
                         (int(sig_crit[s, 0]), int(sig_crit[s, 1])), none_edge)
            neg_mask = np.zeros(nc, bool)
            neg_mask[cof_ids] = True

    if not out_dim:
        return Diagram.empty()
    return _sorted_diagram(out_dim, out_b, out_d, out_be, out_de)


def reduce_oracle(C: FilteredComplex, dims: Iterable[int],
                  include_zero: bool = False) -> Diagram:
    """Textbook left-to-right Z/2 reduction of the full boundary matrix.

    Same contract as compute_persistence, no optimizations; cross-validation
    oracle for small complexes.
    """
    dims = sorted(set(int(p) for p in dims))
    if any(p < 0 or p > C.max_dim - 1 for p in dims):
        raise ValueError(f"dims must lie in [0, {C.max_dim - 1}] for this complex")
    if not dims:
        return Diagram.empty()

    ordered = C._global_order()
    index = {}
    for g, (k, i) in enumerate(ordered):
        vs = tuple(int(v) for v in C.dim_arrays(k)[0][i])
        index[vs] = g
    columns: list[set[int]] = []
    for k, i in ordered:
        vs = tuple(int(v) for v in C.dim_arrays(k)[0][i])
        if k == 0:
            columns.append(set())
        else:
            faces = {index[vs[:t] + vs[t + 1:]] for t in range(len(vs))}
            columns.append(faces)

    pivot_of_row: dict[int, int] = {}
    pair_of_col: dict[int, int] = {}
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            other = pivot_of_row.get(low)
            if other is None:
                pivot_of_row[low] = j
                pair_of_col[j] = low
                break
            col ^= columns[other]

    killed = set(pair_of_col.values())
    out_dim, out_b, out_d, out_be, out_de = [], [], [], [], []
    none_edge = (-1, -1)

    def info(g):
        k, i = ordered[g]
        _, vals, crit = C.dim_arrays(k)
        edge = none_edge if k == 0 else (int(crit[i, 0]), int(crit[i, 1]))
        return k, float(vals[i]), edge

    for j, low in pair_of_col.items():
        k_b, b, be = info(low)
        if k_b not in dims:
            continue
        _, d, de = info(j)
        if b == d and not include_zero:
            continue
        out_dim.append(k_b)
        out_b.append(b)
        out_d.append(d)
        out_be.append(be)
        out_de.append(de)
    for j, col in enumerate(columns):
        if col or j in killed:
            continue
        k_b, b, be = info(j)
        if k_b in dims:
            out_dim.append(k_b)
            out_b.append(b)
            out_d.append(np.inf)
            out_be.append(be)
            out_de.append(none_edge)

    if not out_dim:
        return Diagram.empty()
    return _sorted_diagram(out_dim, out_b, out_d, out_be, out_de)
