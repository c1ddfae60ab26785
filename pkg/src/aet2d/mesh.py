"""Triangulations of the unit disk with boundary-arc labeling.

The generator builds a deterministic, structured concentric-ring mesh: ring k
carries 6k vertices, so consecutive rings triangulate into near-equilateral
strips and the outermost triangles stay non-obtuse (which the discrete maximum
principle relies on). No external mesher is involved, so identical inputs give
identical meshes on every platform.

Angles are canonicalized to (-pi, pi] throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError, ParameterError

TWO_PI = 2.0 * math.pi

# Boundary edge tags.
NEUMANN = 0
DIRICHLET = 1


def canonical_angle(t):
    """Map angles (scalar or array) to the interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(t, dtype=float), TWO_PI)


# ---------------------------------------------------------------------------
# Boundary arc specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundarySpec:
    """The controlled boundary arc as half-open angle intervals [a, b).

    Intervals are read counterclockwise; b may exceed 2*pi to express arcs
    crossing the positive x-axis. Intervals must be non-empty, pairwise
    disjoint modulo 2*pi, and cover at most the full circle.
    """

    arcs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.arcs:
            raise ParameterError("BoundarySpec needs at least one arc")
        arcs = tuple((float(a), float(b)) for a, b in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        segments = []
        for a, b in arcs:
            width = b - a
            if not (0.0 < width <= TWO_PI + 1e-12):
                raise ParameterError(f"arc [{a}, {b}) must have width in (0, 2*pi]")
            start = math.fmod(a, TWO_PI)
            if start < 0.0:
                start += TWO_PI
            end = start + min(width, TWO_PI)
            if end <= TWO_PI + 1e-12:
                segments.append((start, end))
            else:
                segments.append((start, TWO_PI))
                segments.append((0.0, end - TWO_PI))
        segments.sort()
        for (_, e0), (s1, _) in zip(segments, segments[1:]):
            if s1 < e0 - 1e-12:
                raise ParameterError("arcs overlap modulo 2*pi")
        if self.measure() > TWO_PI + 1e-12:
            raise ParameterError("total arc measure exceeds 2*pi")

    def measure(self) -> float:
        """Total angular measure of the arcs."""
        return sum(min(b - a, TWO_PI) for a, b in self.arcs)

    def contains(self, t) -> np.ndarray:
        """Vectorized membership test for angles t (any canonical branch)."""
        t = np.asarray(t, dtype=float)
        inside = np.zeros(t.shape, dtype=bool)
        for a, b in self.arcs:
            width = min(b - a, TWO_PI)
            if width >= TWO_PI - 1e-15:
                inside |= True
            else:
                inside |= np.mod(t - a, TWO_PI) < width
        return inside


GAMMA_FULL = BoundarySpec(((0.0, TWO_PI),))
GAMMA_LARGE = BoundarySpec(((3 * math.pi / 8, 17 * math.pi / 8),))
GAMMA_MEDIUM = BoundarySpec(((3 * math.pi / 4, 7 * math.pi / 4),))
GAMMA_SMALL = BoundarySpec(((9 * math.pi / 8, 11 * math.pi / 8),))

GAMMA_PRESETS = {
    "full": GAMMA_FULL,
    "large": GAMMA_LARGE,
    "medium": GAMMA_MEDIUM,
    "small": GAMMA_SMALL,
}


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation of the unit disk.

    vertices        (N, 2) float coordinates
    triangles       (T, 3) vertex indices, counterclockwise
    boundary_edges  (K, 2) vertex pairs walking the boundary counterclockwise
    boundary_tags   (K,)   DIRICHLET/NEUMANN per edge

    Derived per-edge geometry (midpoint angle, outward normal, tangent) is
    computed on construction. All arrays are read-only; operations return new
    meshes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    edge_angles: np.ndarray = None
    edge_normals: np.ndarray = None
    edge_tangents: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        be = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        tags = np.asarray(self.boundary_tags, dtype=np.uint8).reshape(-1)
        self._validate(v, t, be, tags)

        mid = 0.5 * (v[be[:, 0]] + v[be[:, 1]])
        angles = canonical_angle(np.arctan2(mid[:, 1], mid[:, 0]))
        evec = v[be[:, 1]] - v[be[:, 0]]
        elen = np.hypot(evec[:, 0], evec[:, 1])
        # CCW walk: outward normal is the edge direction rotated by -90 deg.
        normals = np.column_stack((evec[:, 1], -evec[:, 0])) / elen[:, None]
        tangents = np.column_stack((-normals[:, 1], normals[:, 0]))  # J @ nu

        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "triangles", _frozen(t))
        object.__setattr__(self, "boundary_edges", _frozen(be))
        object.__setattr__(self, "boundary_tags", _frozen(tags))
        object.__setattr__(self, "edge_angles", _frozen(angles))
        object.__setattr__(self, "edge_normals", _frozen(normals))
        object.__setattr__(self, "edge_tangents", _frozen(tangents))

    @staticmethod
    def _validate(v, t, be, tags):
        if tags.shape[0] != be.shape[0]:
            raise ContractError("one tag per boundary edge required")
        if tags.size and not np.all((tags == NEUMANN) | (tags == DIRICHLET)):
            raise ContractError("tags must be DIRICHLET or NEUMANN")
        if t.min(initial=0) < 0 or t.max(initial=-1) >= len(v):
            raise ContractError("triangle indices out of range")
        areas = signed_areas(v, t)
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise ContractError(f"triangle {bad} is not counterclockwise (area {areas[bad]:g})")
        # Boundary edges must close into a single CCW loop.
        if np.any(be[:, 1] != np.roll(be[:, 0], -1)):
            raise ContractError("boundary edges do not form a closed loop")
        r = np.hypot(v[be[:, 0], 0], v[be[:, 0], 1])
        if np.any(np.abs(r - 1.0) > 1e-12):
            bad = int(np.argmax(np.abs(r - 1.0)))
            raise ContractError(f"boundary vertex {be[bad, 0]} is off the unit circle")
        # Each boundary edge belongs to exactly one triangle, and no interior
        # edge was mislabeled as boundary.
        pairs = t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        keys = np.sort(pairs, axis=1)
        keys = keys[:, 0] * len(v) + keys[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        rim = np.sort(be, axis=1)
        rim = rim[:, 0] * len(v) + rim[:, 1]
        pos = np.searchsorted(uniq, rim)
        if np.any(pos >= len(uniq)) or np.any(uniq[np.minimum(pos, len(uniq) - 1)] != rim):
            raise ContractError("boundary edge missing from triangulation")
        if np.any(counts[pos] != 1):
            raise ContractError("boundary edge shared by more than one triangle")
        if np.sum(counts == 1) != len(rim):
            raise ContractError("triangulation has untagged boundary edges")

    # -- simple accessors ---------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def boundary_loop(self) -> np.ndarray:
        """Boundary vertex indices in counterclockwise walk order."""
        return self.boundary_edges[:, 0]

    @property
    def boundary_nodes(self) -> np.ndarray:
        """Sorted unique boundary vertex indices."""
        return np.unique(self.boundary_edges)

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        """Sorted endpoints of DIRICHLET-tagged edges."""
        return np.unique(self.boundary_edges[self.boundary_tags == DIRICHLET])


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Signed area of each triangle (positive for counterclockwise)."""
    p = vertices[triangles]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def triangle_areas(mesh: Mesh) -> np.ndarray:
    return signed_areas(mesh.vertices, mesh.triangles)


def triangle_quality(mesh: Mesh) -> np.ndarray:
    """Aspect quality 2*inradius/circumradius per triangle (equilateral -> 1)."""
    p = mesh.vertices[mesh.triangles]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    area = triangle_areas(mesh)
    s = 0.5 * (a + b + c)
    return 8.0 * area**2 / (s * a * b * c)


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------

def _ring_start(k: int) -> int:
    # center vertex is index 0; ring k (k >= 1) holds 6k vertices
    return 1 + 3 * k * (k - 1)


def build_disk_mesh(target_h: float) -> Mesh:
    """Build a structured concentric-ring triangulation of the unit disk.

    Parameters
    ----------
    target_h : float
        Mesh size parameter in (0, 1). The ring count is max(2, round(2.5/h)),
        which keeps every triangle diameter below 1.5*target_h and places
        target_h = 0.03 near twenty thousand vertices.

    Returns
    -------
    Mesh
        All boundary edges tagged NEUMANN; apply `tag_boundary` to mark the
        controlled arc.
    """
    if not (0.0 < target_h < 1.0):
        raise ParameterError(f"target_h must lie in (0, 1), got {target_h!r}")
    n = max(2, round(2.5 / target_h))

    verts = [np.zeros((1, 2))]
    for k in range(1, n + 1):
        phi = np.arange(6 * k) * (math.pi / (3 * k))
        r = k / n
        verts.append(np.column_stack((r * np.cos(phi), r * np.sin(phi))))
    vertices = np.vstack(verts)

    tris: list[tuple[int, int, int]] = []
    for i in range(6):
        tris.append((0, 1 + i, 1 + (i + 1) % 6))
    for k in range(1, n):
        si, so = _ring_start(k), _ring_start(k + 1)
        mi, mo = 6 * k, 6 * (k + 1)
        for s in range(6):
            ji, jo = 0, 0
            while ji < k or jo < k + 1:
                inner = si + (s * k + ji) % mi
                outer = so + (s * (k + 1) + jo) % mo
                # advance along the ring whose next node comes first in angle;
                # exact integer ties (sector ends) go to the inner ring, which
                # avoids the obtuse kite at radially aligned node pairs
                if jo < k + 1 and (ji >= k or (jo + 1) * k < (ji + 1) * (k + 1)):
                    tris.append((inner, outer, so + (s * (k + 1) + jo + 1) % mo))
                    jo += 1
                else:
                    tris.append((inner, outer, si + (s * k + ji + 1) % mi))
                    ji += 1
    triangles = np.array(tris, dtype=np.int64)

    sb = _ring_start(n)
    idx = sb + np.arange(6 * n)
    boundary_edges = np.column_stack((idx, sb + (np.arange(6 * n) + 1) % (6 * n)))
    tags = np.full(6 * n, NEUMANN, dtype=np.uint8)
    return Mesh(vertices, triangles, boundary_edges, tags)


def tag_boundary(mesh: Mesh, gamma: BoundarySpec) -> Mesh:
    """Return a copy of `mesh` with edges tagged DIRICHLET iff their midpoint
    angle lies in `gamma`. The input mesh is untouched."""
    inside = gamma.contains(mesh.edge_angles)
    tags = np.where(inside, DIRICHLET, NEUMANN).astype(np.uint8)
    return replace(mesh, boundary_tags=tags)


def refine(mesh: Mesh) -> Mesh:
    """Uniform midpoint refinement: every triangle splits into four.

    New boundary vertices are projected onto the unit circle; boundary tags
    are inherited by both child edges.
    """
    v, t = mesh.vertices, mesh.triangles
    nv = len(v)

    pairs = t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    flat = keys[:, 0] * nv + keys[:, 1]
    uniq, inverse = np.unique(flat, return_inverse=True)
    ea, eb = uniq // nv, uniq % nv
    mids = 0.5 * (v[ea] + v[eb])

    rim = np.sort(mesh.boundary_edges, axis=1)
    rim_flat = rim[:, 0] * nv + rim[:, 1]
    rim_pos = np.searchsorted(uniq, rim_flat)
    norms = np.hypot(mids[rim_pos, 0], mids[rim_pos, 1])
    mids[rim_pos] /= norms[:, None]

    vertices = np.vstack((v, mids))
    m01, m12, m20 = (nv + inverse.reshape(-1, 3)[:, i] for i in range(3))
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    triangles = np.concatenate((
        np.column_stack((a, m01, m20)),
        np.column_stack((b, m12, m01)),
        np.column_stack((c, m20, m12)),
        np.column_stack((m01, m12, m20)),
    ))

    mid_idx = nv + rim_pos
    ba, bb = mesh.boundary_edges[:, 0], mesh.boundary_edges[:, 1]
    boundary_edges = np.empty((2 * len(ba), 2), dtype=np.int64)
    boundary_edges[0::2, 0], boundary_edges[0::2, 1] = ba, mid_idx
    boundary_edges[1::2, 0], boundary_edges[1::2, 1] = mid_idx, bb
    tags = np.repeat(mesh.boundary_tags, 2)
    return Mesh(vertices, triangles, boundary_edges, tags)


# ---------------------------------------------------------------------------
# Plain-text serialization
# ---------------------------------------------------------------------------

def write_mesh(mesh: Mesh, path) -> None:
    """Write a mesh in the plain-text exchange format (17 significant digits)."""
    with open(path, "w", encoding="ascii") as f:
        f.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        f.write(f"triangles {mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{i} {j} {k}\n")
        f.write(f"boundary_edges {len(mesh.boundary_edges)}\n")
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            f.write(f"{a} {b} {tag}\n")


def read_mesh(path) -> Mesh:
    """Read a mesh written by `write_mesh`."""
    with open(path, "r", encoding="ascii") as f:
        tokens = f.read().split()
    pos = 0

    def expect(word: str) -> int:
        nonlocal pos
        if pos + 1 >= len(tokens) + 1 or tokens[pos] != word:
            raise ContractError(f"malformed mesh file: expected '{word}' header")
        count = int(tokens[pos + 1])
        pos += 2
        return count

    nv = expect("vertices")
    vertices = np.array(tokens[pos:pos + 2 * nv], dtype=np.float64).reshape(nv, 2)
    pos += 2 * nv
    nt = expect("triangles")
    triangles = np.array(tokens[pos:pos + 3 * nt], dtype=np.int64).reshape(nt, 3)
    pos += 3 * nt
    nb = expect("boundary_edges")
    rows = np.array(tokens[pos:pos + 3 * nb], dtype=np.int64).reshape(nb, 3)
    pos += 3 * nb
    if pos != len(tokens):
        raise ContractError("trailing data in mesh file")
    return Mesh(vertices, triangles, rows[:, :2], rows[:, 2].astype(np.uint8))
