"""3D quickhull with explicit degeneracy handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_HULL = 1e-9


@dataclass(frozen=True)
class Degenerate:
    """Point set whose affine rank is below 3 (point, segment or plane)."""

    rank: int


@dataclass(frozen=True, eq=False)
class ConvexHull3:
    """Triangulated convex polyhedron.

    Attributes
    ----------
    points : ndarray (V, 3)
        Hull vertex coordinates.
    facets : ndarray (K, 3) of int
        Vertex indices of each triangle, counter-clockwise seen from outside.
    normals : ndarray (K, 3)
        Outward unit normals.
    """

    points: np.ndarray
    facets: np.ndarray
    normals: np.ndarray

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def interior_point(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def facet_areas(self) -> np.ndarray:
        a, b, c = (self.points[self.facets[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def facet_centroids(self) -> np.ndarray:
        return self.points[self.facets].mean(axis=1)

    def facet_distances(self, origin=None) -> np.ndarray:
        """Perpendicular distance from ``origin`` to each facet plane, signed
        positive when the origin lies on the inner side."""
        origin = self.interior_point if origin is None else np.asarray(origin, float)
        return np.einsum("ij,ij->i", self.normals, self.facet_centroids() - origin)

    def volume(self, origin=None) -> float:
        """Sum of facet pyramids, ``(1/3) * sum(area_k * dist_k)``.

        With the default origin (vertex centroid, strictly interior) every
        term is positive.
        """
        return float(np.dot(self.facet_areas(), self.facet_distances(origin)) / 3.0)

    def contains(self, x, tol: float = EPS_HULL) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        offsets = np.einsum("ij,ij->i", self.normals, self.points[self.facets[:, 0]])
        return np.all(x @ self.normals.T - offsets <= tol, axis=1)


def convex_hull(points, eps: float = EPS_HULL) -> ConvexHull3 | Degenerate:
    """Convex hull of a 3D point set.

    Returns :class:`Degenerate` when every point lies within ``eps`` of a
    common plane (rank 2), line (rank 1) or point (rank 0).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(pts)):
        raise ValueError("invalid coordinate")

    simplex = _initial_simplex(pts, eps)
    if isinstance(simplex, Degenerate):
        return simplex

    P = pts.tolist()
    # per-face state, indexed by face id; a face is dead once replaced
    verts: list[tuple[int, int, int]] = []
    normal: list[tuple[float, float, float]] = []
    offset: list[float] = []
    outside: list = []
    alive: list[bool] = []
    edge_face: dict[tuple[int, int], int] = {}

    def add_face(a, b, c):
        ax, ay, az = P[a]
        ux, uy, uz = P[b][0] - ax, P[b][1] - ay, P[b][2] - az
        vx, vy, vz = P[c][0] - ax, P[c][1] - ay, P[c][2] - az
        nx, ny, nz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
        norm = (nx * nx + ny * ny + nz * nz) ** 0.5
        nx, ny, nz = nx / norm, ny / norm, nz / norm
        idx = len(verts)
        verts.append((a, b, c))
        normal.append((nx, ny, nz))
        offset.append(nx * ax + ny * ay + nz * az)
        outside.append(None)
        alive.append(True)
        edge_face[(a, b)] = idx
        edge_face[(b, c)] = idx
        edge_face[(c, a)] = idx
        return idx

    i0, i1, i2, i3 = simplex
    interior = pts[list(simplex)].mean(axis=0)
    for a, b, c in ((i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)):
        n = np.cross(pts[b] - pts[a], pts[c] - pts[a])
        if n @ (interior - pts[a]) > 0:
            b, c = c, b
        add_face(a, b, c)

    def assign(candidates, face_ids):
        # each candidate goes to the face it is farthest above; others are interior
        if len(candidates) == 0:
            return
        nrm = np.array([normal[i] for i in face_ids])
        off = np.array([offset[i] for i in face_ids])
        d = pts[candidates] @ nrm.T - off
        best = np.argmax(d, axis=1)
        keep = d[np.arange(len(candidates)), best] > eps
        cand, best = candidates[keep], best[keep]
        if len(cand) == 0:
            return
        order = np.argsort(best, kind="stable")
        cand, best = cand[order], best[order]
        cuts = np.searchsorted(best, np.arange(len(face_ids) + 1))
        for j, fi in enumerate(face_ids):
            if cuts[j + 1] > cuts[j]:
                outside[fi] = cand[cuts[j] : cuts[j + 1]]

    assign(np.setdiff1d(np.arange(len(pts)), simplex), [0, 1, 2, 3])

    pending = [i for i in range(4) if outside[i] is not None]
    while pending:
        fi = pending.pop()
        if not alive[fi] or outside[fi] is None:
            continue
        cand = outside[fi]
        nx, ny, nz = normal[fi]
        eye = int(cand[np.argmax(pts[cand] @ np.array((nx, ny, nz)))])
        ex, ey, ez = P[eye]

        visible = {fi}
        stack = [fi]
        horizon = []
        while stack:
            a, b, c = verts[stack.pop()]
            for e0, e1 in ((a, b), (b, c), (c, a)):
                nb = edge_face[(e1, e0)]
                if nb in visible:
                    continue
                gx, gy, gz = normal[nb]
                if gx * ex + gy * ey + gz * ez - offset[nb] > eps:
                    visible.add(nb)
                    stack.append(nb)
                else:
                    horizon.append((e0, e1))

        orphans = []
        for vi in visible:
            alive[vi] = False
            if outside[vi] is not None:
                orphans.append(outside[vi])
                outside[vi] = None
            a, b, c = verts[vi]
            for e in ((a, b), (b, c), (c, a)):
                if edge_face.get(e) == vi:
                    del edge_face[e]

        new = [add_face(a, b, eye) for a, b in horizon]
        if orphans:
            cand = np.concatenate(orphans)
            assign(cand[cand != eye], new)
        pending.extend(i for i in new if outside[i] is not None)

    live = [i for i in range(len(verts)) if alive[i]]
    tri = np.array([verts[i] for i in live], dtype=int)
    used, inverse = np.unique(tri, return_inverse=True)
    return ConvexHull3(
        points=pts[used],
        facets=inverse.reshape(-1, 3),
        normals=np.array([normal[i] for i in live]),
    )


def _initial_simplex(pts, eps):
    """Four affinely independent extreme points, or the detected rank."""
    lo, hi = pts.argmin(axis=0), pts.argmax(axis=0)
    extremes = np.unique(np.concatenate([lo, hi]))
    best, pair = -1.0, None
    for i in extremes:
        d = np.linalg.norm(pts[extremes] - pts[i], axis=1)
        j = int(np.argmax(d))
        if d[j] > best:
            best, pair = d[j], (int(i), int(extremes[j]))
    if best <= eps:
        return Degenerate(0)
    a, b = pair
    u = (pts[b] - pts[a]) / best
    rel = pts - pts[a]
    dist_line = np.linalg.norm(rel - np.outer(rel @ u, u), axis=1)
    c = int(np.argmax(dist_line))
    if dist_line[c] <= eps:
        return Degenerate(1)
    n = np.cross(pts[b] - pts[a], pts[c] - pts[a])
    n /= np.linalg.norm(n)
    dist_plane = np.abs(rel @ n)
    d = int(np.argmax(dist_plane))
    if dist_plane[d] <= eps:
        return Degenerate(2)
    return (a, b, c, d)
