"""Numba kernels behind the Vietoris-Rips pipeline.

Everything here works on plain arrays so the hot loops (simplex enumeration,
boundary transposition, Z/2 column reduction, union-find) compile once and get
cached. The public API lives in `rips`.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def distance_matrix(coords):
    n, d = coords.shape
    out = np.zeros((n, n), np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(d):
                t = coords[i, c] - coords[j, c]
                s += t * t
            v = np.sqrt(s)
            out[i, j] = v
            out[j, i] = v
    return out


@njit(cache=True)
def neighbor_lists(dist, radius):
    """Upper adjacency: for each i, the sorted j > i with d(i, j) <= radius."""
    n = dist.shape[0]
    counts = np.zeros(n, np.int64)
    for i in range(n):
        c = 0
        for j in range(i + 1, n):
            if dist[i, j] <= radius:
                c += 1
        counts[i] = c
    starts = np.zeros(n + 1, np.int64)
    for i in range(n):
        starts[i + 1] = starts[i] + counts[i]
    flat = np.empty(starts[n], np.int32)
    for i in range(n):
        k = starts[i]
        for j in range(i + 1, n):
            if dist[i, j] <= radius:
                flat[k] = j
                k += 1
    return flat, starts


@njit(cache=True)
def enum_edges(dist, flat, starts):
    n = starts.shape[0] - 1
    m = flat.shape[0]
    verts = np.empty((m, 2), np.int32)
    vals = np.empty(m, np.float64)
    k = 0
    for i in range(n):
        for p in range(starts[i], starts[i + 1]):
            j = flat[p]
            verts[k, 0] = i
            verts[k, 1] = j
            vals[k] = dist[i, j]
            k += 1
    return verts, vals


@njit(cache=True)
def count_triangles(flat, starts):
    n = starts.shape[0] - 1
    total = 0
    for i in range(n):
        for p in range(starts[i], starts[i + 1]):
            j = flat[p]
            a = starts[i]
            ae = starts[i + 1]
            b = starts[j]
            be = starts[j + 1]
            while a < ae and b < be:
                u = flat[a]
                v = flat[b]
                if u < v:
                    a += 1
                elif v < u:
                    b += 1
                else:
                    if u > j:
                        total += 1
                    a += 1
                    b += 1
    return total


@njit(cache=True)
def enum_triangles(dist, flat, starts, total):
    """Triangles i<j<k with all edges in the neighbor graph, with filtration
    value (longest edge) and its lexicographically smallest achieving pair."""
    n = starts.shape[0] - 1
    verts = np.empty((total, 3), np.int32)
    vals = np.empty(total, np.float64)
    crit = np.empty((total, 2), np.int32)
    q = 0
    for i in range(n):
        for p in range(starts[i], starts[i + 1]):
            j = flat[p]
            dij = dist[i, j]
            a = starts[i]
            ae = starts[i + 1]
            b = starts[j]
            be = starts[j + 1]
            while a < ae and b < be:
                u = flat[a]
                v = flat[b]
                if u < v:
                    a += 1
                elif v < u:
                    b += 1
                else:
                    if u > j:
                        verts[q, 0] = i
                        verts[q, 1] = j
                        verts[q, 2] = u
                        # pairs visited in lex order keep the first argmax
                        mv = dij
                        c0 = i
                        c1 = j
                        if dist[i, u] > mv:
                            mv = dist[i, u]
                            c0 = i
                            c1 = u
                        if dist[j, u] > mv:
                            mv = dist[j, u]
                            c0 = j
                            c1 = u
                        vals[q] = mv
                        crit[q, 0] = c0
                        crit[q, 1] = c1
                        q += 1
                    a += 1
                    b += 1
    return verts, vals, crit


@njit(cache=True)
def count_tetrahedra(tri_verts, flat, starts):
    total = 0
    for t in range(tri_verts.shape[0]):
        i = tri_verts[t, 0]
        j = tri_verts[t, 1]
        k = tri_verts[t, 2]
        a = starts[i]
        ae = starts[i + 1]
        b = starts[j]
        be = starts[j + 1]
        c = starts[k]
        ce = starts[k + 1]
        while a < ae and b < be and c < ce:
            u = flat[a]
            v = flat[b]
            w = flat[c]
            m = max(u, max(v, w))
            if u < m:
                a += 1
                continue
            if v < m:
                b += 1
                continue
            if w < m:
                c += 1
                continue
            if u > k:
                total += 1
            a += 1
            b += 1
            c += 1
    return total


@njit(cache=True)
def enum_tetrahedra(dist, tri_verts, flat, starts, total):
    verts = np.empty((total, 4), np.int32)
    vals = np.empty(total, np.float64)
    crit = np.empty((total, 2), np.int32)
    q = 0
    for t in range(tri_verts.shape[0]):
        i = tri_verts[t, 0]
        j = tri_verts[t, 1]
        k = tri_verts[t, 2]
        a = starts[i]
        ae = starts[i + 1]
        b = starts[j]
        be = starts[j + 1]
        c = starts[k]
        ce = starts[k + 1]
        while a < ae and b < be and c < ce:
            u = flat[a]
            v = flat[b]
            w = flat[c]
            m = max(u, max(v, w))
            if u < m:
                a += 1
                continue
            if v < m:
                b += 1
                continue
            if w < m:
                c += 1
                continue
            if u > k:
                verts[q, 0] = i
                verts[q, 1] = j
                verts[q, 2] = k
                verts[q, 3] = u
                mv = dist[i, j]
                c0 = i
                c1 = j
                if dist[i, k] > mv:
                    mv = dist[i, k]
                    c0 = i
                    c1 = k
                if dist[i, u] > mv:
                    mv = dist[i, u]
                    c0 = i
                    c1 = u
                if dist[j, k] > mv:
                    mv = dist[j, k]
                    c0 = j
                    c1 = k
                if dist[j, u] > mv:
                    mv = dist[j, u]
                    c0 = j
                    c1 = u
                if dist[k, u] > mv:
                    mv = dist[k, u]
                    c0 = k
                    c1 = u
                vals[q] = mv
                crit[q, 0] = c0
                crit[q, 1] = c1
                q += 1
            a += 1
            b += 1
            c += 1
    return verts, vals, crit


@njit(cache=True)
def colex_ranks(verts, binom):
    """Rank of each sorted vertex tuple in the combinatorial number system."""
    m, k = verts.shape
    out = np.empty(m, np.int64)
    for c in range(m):
        r = np.int64(0)
        for t in range(k):
            r += binom[verts[c, t], t + 1]
        out[c] = r
    return out


@njit(cache=True)
def gather_sorted(verts, vals, crit, order):
    """Apply a sort order to (vertices, values, critical edges) in one pass."""
    m, k = verts.shape
    overts = np.empty_like(verts)
    ovals = np.empty_like(vals)
    ocrit = np.empty_like(crit)
    for t in range(m):
        s = order[t]
        for c in range(k):
            overts[t, c] = verts[s, c]
        ovals[t] = vals[s]
        ocrit[t, 0] = crit[s, 0]
        ocrit[t, 1] = crit[s, 1]
    return overts, ovals, ocrit


@njit(cache=True)
def locate_faces_direct(verts, binom, rank_to_pos):
    """Face rows via a direct-address colex-rank table (small rank spaces)."""
    m, kp1 = verts.shape
    rows = np.empty((m, kp1), np.int32)
    for c in range(m):
        for drop in range(kp1):
            r = np.int64(0)
            idx = 0
            for t in range(kp1):
                if t == drop:
                    continue
                r += binom[verts[c, t], idx + 1]
                idx += 1
            rows[c, drop] = rank_to_pos[r]
        for a in range(1, kp1):
            key = rows[c, a]
            b = a - 1
            while b >= 0 and rows[c, b] > key:
                rows[c, b + 1] = rows[c, b]
                b -= 1
            rows[c, b + 1] = key
    return rows


@njit(cache=True)
def locate_faces(verts, binom, face_rank_sorted, face_pos):
    """Row index (filtration position among faces) of every facet of every
    simplex. Rows come out sorted ascending per simplex."""
    m, kp1 = verts.shape
    nf = face_rank_sorted.shape[0]
    rows = np.empty((m, kp1), np.int32)
    for c in range(m):
        for drop in range(kp1):
            r = np.int64(0)
            idx = 0
            for t in range(kp1):
                if t == drop:
                    continue
                r += binom[verts[c, t], idx + 1]
                idx += 1
            lo = 0
            hi = nf
            while lo < hi:
                mid = (lo + hi) >> 1
                if face_rank_sorted[mid] < r:
                    lo = mid + 1
                else:
                    hi = mid
            rows[c, drop] = face_pos[lo]
        # insertion sort, kp1 <= 4
        for a in range(1, kp1):
            key = rows[c, a]
            b = a - 1
            while b >= 0 and rows[c, b] > key:
                rows[c, b + 1] = rows[c, b]
                b -= 1
            rows[c, b + 1] = key
    return rows


@njit(cache=True)
def transpose_reversed(rows, n_faces):
    """Anti-transpose of a boundary block given as per-column face rows.

    Dual column j holds the cofacets of face (n_faces-1-j), as reversed cofacet
    indices in ascending order.
    """
    m, kp1 = rows.shape
    counts = np.zeros(n_faces, np.int64)
    for c in range(m):
        for t in range(kp1):
            counts[rows[c, t]] += 1
    indptr = np.zeros(n_faces + 1, np.int64)
    for j in range(n_faces):
        indptr[j + 1] = indptr[j] + counts[n_faces - 1 - j]
    fill = indptr[:n_faces].copy()
    out = np.empty(indptr[n_faces], np.int32)
    for c in range(m - 1, -1, -1):
        rr = m - 1 - c
        for t in range(kp1):
            j = n_faces - 1 - rows[c, t]
            out[fill[j]] = rr
            fill[j] += 1
    return indptr, out


@njit(cache=True)
def _heap_push(heap, size, v):
    heap[size] = v
    i = size
    while i > 0:
        p = (i - 1) >> 1
        if heap[p] < heap[i]:
            tmp = heap[p]
            heap[p] = heap[i]
            heap[i] = tmp
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(heap, size):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        r = l + 1
        big = l
        if r < size and heap[r] > heap[l]:
            big = r
        if heap[big] > heap[i]:
            tmp = heap[big]
            heap[big] = heap[i]
            heap[i] = tmp
            i = big
        else:
            break
    return top, size


@njit(cache=True)
def reduce_columns(indptr, indices, n_rows, cleared):
    """Left-to-right Z/2 column reduction of a CSR-style matrix.

    Returns per-column pivot row (-1 for zero/cleared columns). Columns whose
    initial low is unclaimed are claimed by reference (no work). Colliding
    columns are reduced in a max-heap with lazy mod-2 cancellation, and pivot
    columns are stored factored, as the list of original columns that were
    added, so long reduced columns are never materialized.
    """
    m = indptr.shape[0] - 1
    pair = np.full(m, -1, np.int64)
    claimed = np.zeros(n_rows, np.uint8)
    piv_col = np.full(n_rows, -1, np.int64)     # original column id of the claim
    v_start = np.zeros(n_rows, np.int64)        # factored storage slice
    v_len = np.zeros(n_rows, np.int64)          # 0 means raw (unreduced) claim
    vpool = np.empty(1024, np.int32)
    vpool_top = 0
    heap = np.empty(4096, np.int32)
    vcur = np.empty(1024, np.int32)
    for c in range(m):
        if cleared[c]:
            continue
        s = indptr[c]
        lw = indptr[c + 1] - s
        if lw == 0:
            continue
        low0 = indices[s + lw - 1]
        if claimed[low0] == 0:
            claimed[low0] = 1
            pair[c] = low0
            piv_col[low0] = c
            continue
        # heap-based reduction of the colliding column
        if lw > heap.shape[0]:
            heap = np.empty(2 * lw, np.int32)
        hs = 0
        for t in range(lw):
            hs = _heap_push(heap, hs, indices[s + t])
        nv = 1
        vcur[0] = c
        while True:
            # pop the max with mod-2 cancellation
            low = np.int32(-1)
            while hs > 0:
                v, hs = _heap_pop(heap, hs)
                cnt = 1
                while hs > 0 and heap[0] == v:
                    _, hs = _heap_pop(heap, hs)
                    cnt += 1
                if cnt & 1:
                    low = v
                    break
            if low < 0:
                break  # column reduced to zero: creator
            if claimed[low] == 0:
                claimed[low] = 1
                pair[c] = low
                piv_col[low] = c
                if vpool_top + nv > vpool.shape[0]:
                    newcap = max(2 * vpool.shape[0], vpool_top + nv)
                    npool = np.empty(newcap, np.int32)
                    npool[:vpool_top] = vpool[:vpool_top]
                    vpool = npool
                v_start[low] = vpool_top
                v_len[low] = nv
                for t in range(nv):
                    vpool[vpool_top + t] = vcur[t]
                vpool_top += nv
                break
            # add the pivot claiming `low`: push its raw constituents
            if v_len[low] == 0:
                pc = piv_col[low]
                ps = indptr[pc]
                pl = indptr[pc + 1] - ps - 1  # drop its top entry (== low)
                need = hs + pl
                if need > heap.shape[0]:
                    nh = np.empty(2 * need, np.int32)
                    nh[:hs] = heap[:hs]
                    heap = nh
                for t in range(pl):
                    hs = _heap_push(heap, hs, indices[ps + t])
                if nv + 1 > vcur.shape[0]:
                    nvc = np.empty(2 * (nv + 1), np.int32)
                    nvc[:nv] = vcur[:nv]
                    vcur = nvc
                vcur[nv] = pc
                nv += 1
            else:
                vs = v_start[low]
                vl = v_len[low]
                total = np.int64(1)
                for t in range(vl):
                    cid = vpool[vs + t]
                    total += indptr[cid + 1] - indptr[cid]
                need = hs + total
                if need > heap.shape[0]:
                    nh = np.empty(2 * need, np.int32)
                    nh[:hs] = heap[:hs]
                    heap = nh
                for t in range(vl):
                    cid = vpool[vs + t]
                    for q in range(indptr[cid], indptr[cid + 1]):
                        hs = _heap_push(heap, hs, indices[q])
                hs = _heap_push(heap, hs, low)  # cancels low inside the sum
                if nv + vl > vcur.shape[0]:
                    nvc = np.empty(2 * (nv + vl), np.int32)
                    nvc[:nv] = vcur[:nv]
                    vcur = nvc
                for t in range(vl):
                    vcur[nv + t] = vpool[vs + t]
                nv += vl
    return pair


@njit(cache=True)
def h0_elder_pairs(edge_verts, n):
    """Union-find over edges in filtration order.

    Per edge, the creator vertex of the component that dies there (-1 when the
    edge closes a cycle), plus the creator vertex of each surviving component.
    """
    parent = np.arange(n, dtype=np.int32)
    creator = np.arange(n, dtype=np.int32)
    dying = np.full(edge_verts.shape[0], -1, np.int32)
    for e in range(edge_verts.shape[0]):
        i = edge_verts[e, 0]
        j = edge_verts[e, 1]
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        if i == j:
            continue
        c1 = creator[i]
        c2 = creator[j]
        parent[i] = j
        if c1 < c2:
            creator[j] = c1
            dying[e] = c2
        else:
            creator[j] = c2
            dying[e] = c1
    n_roots = 0
    for v in range(n):
        if parent[v] == v:
            n_roots += 1
    ess = np.empty(n_roots, np.int32)
    k = 0
    for v in range(n):
        if parent[v] == v:
            ess[k] = creator[v]
            k += 1
    return dying, ess
