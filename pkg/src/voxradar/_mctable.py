"""Marching-cubes case table, generated rather than transcribed.

Corner ``c`` of a cell sits at offset ``(c & 1, (c >> 1) & 1, (c >> 2) & 1)``. For
each of the 256 inside/outside corner patterns the isosurface's trace on the six cell
faces is built face by face, then the traces are chained into closed loops and fanned
into triangles. Face traces depend only on the four corner flags of that face (an
ambiguous face always separates its inside corners), so two cells sharing a face emit
the same segments on it and the assembled surface has no cracks.

Loops keep the inside region on their left when the face is viewed from outside the
cell, which gives every triangle a consistent winding.
"""

from __future__ import annotations

CORNERS = [(c & 1, (c >> 1) & 1, (c >> 2) & 1) for c in range(8)]

# 12 edges as (corner_a, corner_b) with a < b; axis = the differing bit.
EDGES = [(a, b) for a in range(8) for b in range(a + 1, 8) if bin(a ^ b).count("1") == 1]
_EDGE_ID = {e: i for i, e in enumerate(EDGES)}


def _edge(a: int, b: int) -> int:
    return _EDGE_ID[(min(a, b), max(a, b))]


def _faces() -> list[list[int]]:
    """Six faces as corner cycles, counter-clockwise seen from outside the cell."""
    faces = []
    for axis in range(3):
        u, w = [a for a in range(3) if a != axis]
        for side in (0, 1):
            ring = []
            for du, dw in ((0, 0), (1, 0), (1, 1), (0, 1)):
                bits = [0, 0, 0]
                bits[axis], bits[u], bits[w] = side, du, dw
                ring.append(bits[0] | bits[1] << 1 | bits[2] << 2)
            p0, p1, p2 = (CORNERS[c] for c in ring[:3])
            e1 = [p1[i] - p0[i] for i in range(3)]
            e2 = [p2[i] - p1[i] for i in range(3)]
            normal_axis = e1[(axis + 1) % 3] * e2[(axis + 2) % 3] - e1[(axis + 2) % 3] * e2[(axis + 1) % 3]
            outward = 1 if side == 1 else -1
            if normal_axis * outward < 0:
                ring.reverse()
            faces.append(ring)
    return faces


FACES = _faces()


def _case_triangles(mask: int) -> list[tuple[int, int, int]]:
    inside = [bool(mask >> c & 1) for c in range(8)]
    nxt: dict[int, int] = {}
    for ring in FACES:
        for i in range(4):
            a, b = ring[i], ring[(i + 1) % 4]
            if inside[a] and not inside[b]:
                # walk back over the inside arc ending at a
                j = i
                while inside[ring[(j - 1) % 4]]:
                    j -= 1
                start = _edge(a, b)
                end = _edge(ring[(j - 1) % 4], ring[j % 4])
                nxt[start] = end
    tris = []
    seen: set[int] = set()
    for first in sorted(nxt):
        if first in seen:
            continue
        loop = [first]
        seen.add(first)
        cur = nxt[first]
        while cur != first:
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        tri = _triangulate(loop)
        if tri is None:
            raise RuntimeError(f"no crack-free triangulation for case {mask}")
        tris.extend(tri)
    return tris


def _share_face(e1: int, e2: int) -> bool:
    return any(set(EDGES[e1]) <= set(f) and set(EDGES[e2]) <= set(f) for f in FACES)


def _triangulate(loop: list[int]) -> list[tuple[int, int, int]]:
    """Triangulate a loop without any diagonal joining two points on one cell face.

    Such a diagonal could coincide with one made by the neighbouring cell and leave
    an edge used by four triangles.
    """
    n = len(loop)
    if n == 3:
        return [tuple(loop)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _share_face(loop[i], loop[j]):
                continue
            left = _triangulate(loop[i:j + 1]) if j - i >= 2 else None
            right = _triangulate(loop[j:] + loop[:i + 1]) if n - (j - i) >= 2 else None
            if left is not None and right is not None:
                return left + right
    return None


TRI_TABLE: list[list[tuple[int, int, int]]] = [_case_triangles(m) for m in range(256)]
