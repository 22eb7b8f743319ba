"""Exact triangle-triangle distances and mesh proximity queries.

The kernels operate on batches: ``tri_tri_distance(A, B)`` takes two
``(M, 3, 3)`` arrays and returns the ``M`` pairwise distances.  Mesh queries
come in a brute-force form (all pairs) and an accelerated form that discards
pairs whose cheap lower bounds (bounding boxes, separating planes) already
exceed the best distance found; both run the same kernel on the surviving
pairs, so they agree exactly on the minimum.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyGeometry
from .geometry import TriMesh

_CHUNK = 200_000


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def point_segment_distance(p, a, b):
    ab = b - a
    denom = _dot(ab, ab)
    t = np.where(denom > 0, _dot(p - a, ab) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[..., None] * ab), axis=-1)


def segment_segment_distance(p1, q1, p2, q2):
    """Closest distance between segments ``p1q1`` and ``p2q2`` (batched)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b
    tiny = 1e-300
    # parallel or degenerate: pick s = 0 and solve for t
    s = np.where(denom > 1e-14 * np.maximum(a * e, tiny), (b * f - c * e) / np.where(denom != 0, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = (b * s + f) / np.where(e > tiny, e, 1.0)
    t = np.where(e > tiny, t, 0.0)
    t_lo = t < 0.0
    t_hi = t > 1.0
    s = np.where(t_lo, np.clip(-c / np.where(a > tiny, a, 1.0), 0.0, 1.0), s)
    s = np.where(t_hi, np.clip((b - c) / np.where(a > tiny, a, 1.0), 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    s = np.where(e > tiny, s, np.clip(-c / np.where(a > tiny, a, 1.0), 0.0, 1.0))
    s = np.where(a > tiny, s, 0.0)
    c1 = p1 + s[..., None] * d1
    c2 = p2 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1)


def point_triangle_distance(p, tri):
    """Distance from points ``p (..., 3)`` to triangles ``tri (..., 3, 3)``."""
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    n = np.cross(b - a, c - a)
    nn = _dot(n, n)
    w = p - a
    dist_plane = _dot(w, n) / np.sqrt(nn)
    # barycentric coordinates of the projection
    ab, ac = b - a, c - a
    d00, d01, d11 = _dot(ab, ab), _dot(ab, ac), _dot(ac, ac)
    d20, d21 = _dot(w, ab), _dot(w, ac)
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    u = (d00 * d21 - d01 * d20) / den
    inside = (v >= 0.0) & (u >= 0.0) & (u + v <= 1.0)
    edge = np.minimum(
        np.minimum(point_segment_distance(p, a, b), point_segment_distance(p, b, c)),
        point_segment_distance(p, c, a),
    )
    return np.where(inside, np.abs(dist_plane), edge)


def segment_crosses_triangle(p, q, tri, tol=1e-12):
    """True where segment ``pq`` pierces triangle ``tri`` (boundary inclusive).

    Segments lying in the triangle's plane return False; those contacts are
    caught by the edge/vertex distance terms instead.
    """
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    n = np.cross(b - a, c - a)
    scale = np.sqrt(_dot(n, n))
    dp = _dot(p - a, n) / scale
    dq = _dot(q - a, n) / scale
    straddle = (dp * dq <= 0.0) & ~((np.abs(dp) <= tol) & (np.abs(dq) <= tol))
    denom = np.where(straddle, dp - dq, 1.0)
    t = np.where(straddle, dp / denom, 0.0)
    x = p + t[..., None] * (q - p)
    ab, ac, w = b - a, c - a, x - a
    d00, d01, d11 = _dot(ab, ab), _dot(ab, ac), _dot(ac, ac)
    d20, d21 = _dot(w, ab), _dot(w, ac)
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    u = (d00 * d21 - d01 * d20) / den
    eps = 1e-12
    return straddle & (v >= -eps) & (u >= -eps) & (u + v <= 1.0 + eps)


def tri_tri_distance(A, B):
    """Exact distance between triangle pairs ``A[i]``, ``B[i]``; 0 if they touch.

    The minimum of two triangles' distance is attained either between a pair
    of edges or between a vertex and the other triangle, unless they
    intersect, in which case some edge of one pierces the other.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 2:
        return float(tri_tri_distance(A[None], B[None])[0])
    m = len(A)
    out = np.empty(m)
    for s in range(0, m, _CHUNK):
        out[s:s + _CHUNK] = _tri_tri_chunk(A[s:s + _CHUNK], B[s:s + _CHUNK])
    return out


def _tri_tri_chunk(A, B):
    best = np.full(len(A), np.inf)
    for i in range(3):
        pa, qa = A[:, i], A[:, (i + 1) % 3]
        for j in range(3):
            pb, qb = B[:, j], B[:, (j + 1) % 3]
            best = np.minimum(best, segment_segment_distance(pa, qa, pb, qb))
    for i in range(3):
        best = np.minimum(best, point_triangle_distance(A[:, i], B))
        best = np.minimum(best, point_triangle_distance(B[:, i], A))
    hit = np.zeros(len(A), dtype=bool)
    for i in range(3):
        hit |= segment_crosses_triangle(A[:, i], A[:, (i + 1) % 3], B)
        hit |= segment_crosses_triangle(B[:, i], B[:, (i + 1) % 3], A)
    best[hit] = 0.0
    return best


# ---------------------------------------------------------------------------
# Mesh-level queries
# ---------------------------------------------------------------------------


def _check(a: TriMesh, b: TriMesh):
    if a.is_empty or b.is_empty:
        raise EmptyGeometry("mesh distance needs two non-empty meshes")


def _spheres(tris):
    c = tris.mean(axis=1)
    r = np.linalg.norm(tris - c[:, None, :], axis=2).max(axis=1)
    return c, r


def mesh_min_distance_brute(a: TriMesh, b: TriMesh) -> float:
    """Minimum over all triangle pairs (reference path)."""
    _check(a, b)
    ta, tb = a.triangles, b.triangles
    ia, ib = np.meshgrid(np.arange(len(ta)), np.arange(len(tb)), indexing="ij")
    return float(tri_tri_distance(ta[ia.ravel()], tb[ib.ravel()]).min())


def _candidate_pairs(ta, tb, bound, budget=4_000_000):
    """Triangle pairs whose axis-aligned bounds come within ``bound`` of each other.

    Triangles far from the other mesh's overall bounds are culled first; the
    rest are paired by bounds overlap, or through a k-d tree over bounding
    spheres when too many remain for an all-pairs check.
    """
    loA, hiA = ta.min(axis=1), ta.max(axis=1)
    loB, hiB = tb.min(axis=1), tb.max(axis=1)
    ka = np.flatnonzero(np.all((loA <= hiB.max(axis=0) + bound) & (hiA >= loB.min(axis=0) - bound), axis=1))
    kb = np.flatnonzero(np.all((loB <= hiA.max(axis=0) + bound) & (hiB >= loA.min(axis=0) - bound), axis=1))
    if len(ka) == 0 or len(kb) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if len(ka) * len(kb) > budget:
        ca, ra = _spheres(ta[ka])
        cb, rb = _spheres(tb[kb])
        lists = cKDTree(cb).query_ball_point(ca, ra + rb.max() + bound)
        ia = np.repeat(np.arange(len(ca)), [len(x) for x in lists])
        ib = np.fromiter(itertools.chain.from_iterable(lists), dtype=np.int64, count=len(ia))
        ia, ib = ka[ia], kb[ib]
    else:
        step = max(1, budget // len(kb))
        ias, ibs = [], []
        for s in range(0, len(ka), step):
            a = ka[s:s + step]
            m = np.all((loA[a, None] <= hiB[kb][None] + bound) & (hiA[a, None] >= loB[kb][None] - bound), axis=2)
            i, j = np.nonzero(m)
            ias.append(a[i])
            ibs.append(kb[j])
        ia, ib = np.concatenate(ias), np.concatenate(ibs)
    return ia, ib


def _lower_bound(A, B):
    """Cheap lower bound on the distance of each triangle pair.

    Takes the larger of the axis-aligned box gap and the separation of one
    triangle from the other's supporting plane (when it lies wholly on one
    side).
    """
    gap = np.maximum(A.min(axis=1) - B.max(axis=1), B.min(axis=1) - A.max(axis=1)).max(axis=1)
    best = np.maximum(gap, 0.0)
    for P, Q in ((A, B), (B, A)):
        n = np.cross(Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        h = np.einsum("mkj,mj->mk", P - Q[:, :1], n)
        sep = np.maximum(h.min(axis=1), -h.max(axis=1))
        best = np.maximum(best, sep)
    return best


def _prune(ta, tb, ia, ib, bound):
    if len(ia) == 0:
        return ia, ib
    keep = _lower_bound(ta[ia], tb[ib]) <= bound
    return ia[keep], ib[keep]


def mesh_min_distance(a: TriMesh, b: TriMesh, method: str = "accelerated") -> float:
    """Minimum triangle-triangle distance between two meshes (0 if they touch)."""
    if method == "brute":
        return mesh_min_distance_brute(a, b)
    _check(a, b)
    ta, tb = a.triangles, b.triangles
    # upper bound from each A triangle's nearest B centroid
    _, nn = cKDTree(tb.mean(axis=1)).query(ta.mean(axis=1), k=1)
    upper = float(tri_tri_distance(ta, tb[nn]).min())
    if upper == 0.0:
        return 0.0
    ia, ib = _candidate_pairs(ta, tb, upper)
    ia, ib = _prune(ta, tb, ia, ib, upper)
    if len(ia) == 0:
        return upper
    return float(min(upper, tri_tri_distance(ta[ia], tb[ib]).min()))


def meshes_collide(a: TriMesh, b: TriMesh, margin: float = 0.0) -> bool:
    """True iff ``mesh_min_distance(a, b) <= margin``."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    _check(a, b)
    ta, tb = a.triangles, b.triangles
    ia, ib = _candidate_pairs(ta, tb, margin)
    ia, ib = _prune(ta, tb, ia, ib, margin)
    if len(ia) == 0:
        return False
    return bool(tri_tri_distance(ta[ia], tb[ib]).min() <= margin)
