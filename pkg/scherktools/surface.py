#
# See the LICENSE file
#

#
# Triangle meshes of graph pieces, Schwarz reflection about vertical lines
# and periodic assembly.
#
# Every vertex remembers the copy it belongs to. A copy is the planar map
# p -> epsilon * p + translation applied to the fundamental piece (z is
# untouched), together with the word of reflections that produced it.
#

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import MeshError
from .geometry import PlanarDomain, ScalarField

log = logging.getLogger(__name__)

SCHERK = "scherk"
SCHERKENOID = "scherkenoid"
HELICOID = "helicoid-like"
PITCHFORK = "pitchfork"
FAMILIES = (SCHERK, SCHERKENOID, HELICOID, PITCHFORK)

@dataclass(frozen=True)
class MeshCopy:
    epsilon: int
    translation: Tuple[float, float]
    word: str = ""

    def reflected(self, axis_point):
        # R_a(eps p + t) = 2a - eps p - t
        ax, ay = axis_point
        tx, ty = self.translation
        word = self.word + "R(%.17g,%.17g)" % (ax, ay)
        return MeshCopy(-self.epsilon, (2.0 * ax - tx, 2.0 * ay - ty), word)

    def shifted(self, dx, dy, word=""):
        tx, ty = self.translation
        return MeshCopy(self.epsilon, (tx + dx, ty + dy), self.word + word)

    def apply(self, xy):
        xy = np.asarray(xy, dtype=float)
        return self.epsilon * xy + np.asarray(self.translation)

@dataclass(eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    periods: List[Tuple[float, float, float]] = field(default_factory=list)
    provenance: Optional[np.ndarray] = None
    copies: List[MeshCopy] = field(default_factory=lambda: [MeshCopy(1, (0.0, 0.0))])
    family: Optional[str] = None
    boundary: Optional[np.ndarray] = None
    axis: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise MeshError("triangle indices must refer to existing vertices")
        if self.provenance is None:
            self.provenance = np.zeros(len(self.vertices), dtype=np.int64)
        if self.family is not None and self.family not in FAMILIES:
            raise MeshError("unknown surface family <" + str(self.family) + ">")

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def triangle_count(self):
        return len(self.triangles)

    def copy_vertices(self, index):
        return self.vertices[self.provenance == index]

    def triangle_normals(self):
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return np.cross(b - a, c - a)

#
# Graph of a field. Each cell is split along its shorter 3-d diagonal;
# triangles are counter-clockwise seen from above.
#
def graph_to_mesh(u, family=None):
    x, y = u.xy
    vertices = np.column_stack((x.ravel(), y.ravel(), u.values.ravel()))
    n_t = u.n_t
    I, J = np.meshgrid(np.arange(u.n_s - 1), np.arange(n_t - 1), indexing="ij")
    a = (I * n_t + J).ravel()
    b = ((I + 1) * n_t + J).ravel()
    c = ((I + 1) * n_t + J + 1).ravel()
    d = (I * n_t + J + 1).ravel()
    ac = np.linalg.norm(vertices[a] - vertices[c], axis=1)
    bd = np.linalg.norm(vertices[b] - vertices[d], axis=1)
    use_ac = (ac <= bd)[:, None]
    first = np.where(use_ac, np.column_stack((a, b, c)), np.column_stack((a, b, d)))
    second = np.where(use_ac, np.column_stack((a, c, d)), np.column_stack((b, c, d)))
    triangles = np.stack((first, second), axis=1).reshape(-1, 3)
    return SurfaceMesh(vertices, triangles, family=family, boundary=np.array(u.domain.corners, dtype=float))

def _distance_to_polygon(polygon, point):
    p = np.asarray(point, dtype=float)
    best = math.inf
    for k in range(len(polygon)):
        a = polygon[k]
        b = polygon[(k + 1) % len(polygon)]
        ab = b - a
        lam = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p - (a + lam * ab))))
    return best

def axis_on_boundary(piece, axis_point, tol=1e-9):
    if piece.boundary is None:
        raise MeshError("piece carries no boundary polygon; cannot place the reflection axis")
    scale = max(1.0, float(np.max(np.abs(piece.boundary))))
    return _distance_to_polygon(piece.boundary, axis_point) <= tol * scale

#
# Rotation by pi about the vertical line through axis_point. Orientation is
# preserved, so triangles keep their vertex order.
#
def schwarz_reflect(piece, axis_point, tol=1e-9):
    axis_point = (float(axis_point[0]), float(axis_point[1]))
    if not axis_on_boundary(piece, axis_point, tol):
        raise MeshError("axis (%g, %g) does not lie on the piece boundary" % axis_point)
    x0, y0 = axis_point
    v = piece.vertices
    vertices = np.column_stack((2.0 * x0 - v[:, 0], 2.0 * y0 - v[:, 1], v[:, 2]))
    boundary = np.column_stack((2.0 * x0 - piece.boundary[:, 0], 2.0 * y0 - piece.boundary[:, 1]))
    copies = [c.reflected(axis_point) for c in piece.copies]
    return SurfaceMesh(vertices, piece.triangles.copy(), list(piece.periods), piece.provenance.copy(),
                       copies, piece.family, boundary, axis=axis_point)

def reflect_field(u, axis_point):
    x0, y0 = axis_point
    top_right = u.domain.corners[2]
    domain = PlanarDomain(u.domain.kind, u.domain.alpha, u.domain.w, u.domain.L,
                          (2.0 * x0 - top_right[0], 2.0 * y0 - top_right[1]))
    return ScalarField(domain, u.values[::-1, ::-1])

def _transformed(piece, copy, word):
    xy = copy.apply(piece.vertices[:, :2])
    return np.column_stack((xy, piece.vertices[:, 2])), MeshCopy(copy.epsilon, copy.translation, word)

def merge_copies(piece, copies, family, periods):
    vertices, triangles, provenance, records = [], [], [], []
    offset = 0
    for index, (copy, word) in enumerate(copies):
        v, record = _transformed(piece, copy, word)
        vertices.append(v)
        triangles.append(piece.triangles + offset)
        provenance.append(np.full(len(v), index, dtype=np.int64))
        records.append(record)
        offset += len(v)
    return SurfaceMesh(np.vstack(vertices), np.vstack(triangles), periods, np.concatenate(provenance),
                       records, family, piece.boundary)

def _rotation(point):
    return MeshCopy(-1, (2.0 * point[0], 2.0 * point[1]))

def assemble_periodic(piece, family, copies=(1, 1), x_hat=None):
    if family not in FAMILIES:
        raise MeshError("unknown surface family <" + str(family) + ">")
    if piece.family != family:
        raise MeshError("piece belongs to family <%s>, not <%s>" % (piece.family, family))
    if piece.boundary is None or len(piece.boundary) != 4:
        raise MeshError("piece needs its quadrilateral boundary to assemble")
    n1, n2 = int(copies[0]), int(copies[1])
    if n1 < 1 or n2 < 1:
        raise MeshError("copy counts must be at least 1")
    p0, p1, p2, p3 = (np.asarray(p, dtype=float) for p in piece.boundary)
    parts = []

    if family == SCHERK:
        e1 = 2.0 * (p1 - p0)
        e2 = 2.0 * (p3 - p0)
        for a in range(n1):
            for b in range(n2):
                t = a * e1 + b * e2
                parts.append((MeshCopy(1, (t[0], t[1])), "T(%d,%d)" % (a, b)))
        rot = _rotation(p0)
        for a in range(n1 + 1):
            for b in range(n2 + 1):
                t = a * e1 + b * e2
                parts.append((rot.shifted(t[0], t[1]), "R(p0)T(%d,%d)" % (a, b)))
        periods = [(float(e1[0]), float(e1[1]), 0.0), (float(e2[0]), float(e2[1]), 0.0)]
    elif family == PITCHFORK:
        origin = (0.0, 0.0)
        if not axis_on_boundary(piece, origin):
            raise MeshError("pitchfork piece must contain the z-axis on its boundary")
        parts = [(MeshCopy(1, (0.0, 0.0)), "I"), (_rotation(origin), "R(0,0)")]
        periods = []
    else:
        if family == SCHERKENOID:
            q0, q1 = p0, p3
        else:
            if x_hat is None:
                raise MeshError("helicoid-like assembly needs the axis offset x_hat")
            q0 = np.array([0.0, p0[1]])
            q1 = np.array([float(x_hat), p3[1]])
        for q in (q0, q1):
            if not axis_on_boundary(piece, q):
                raise MeshError("axis (%g, %g) does not lie on the piece boundary" % (q[0], q[1]))
        period = 2.0 * (q1 - q0)
        rot = _rotation(q0)
        for k in range(n1):
            t = k * period
            parts.append((MeshCopy(1, (t[0], t[1])), "T(%d)" % k))
            parts.append((rot.shifted(t[0], t[1]), "R(q0)T(%d)" % k))
        periods = [(float(period[0]), float(period[1]), 0.0)]

    mesh = merge_copies(piece, parts, family, periods)
    log.info("assembled %s surface: %d copies, %d vertices, %d triangles",
             family, len(parts), mesh.vertex_count, mesh.triangle_count)
    return mesh

#
# Largest vertex mismatch between copies that the period translation maps
# onto each other. Returns (defect, matched pairs).
#
def period_defect(mesh, period, tol=1e-9):
    px, py = period[0], period[1]
    scale = max(1.0, abs(px), abs(py))
    worst = 0.0
    matched = 0
    for i, a in enumerate(mesh.copies):
        for j, b in enumerate(mesh.copies):
            if a.epsilon != b.epsilon:
                continue
            if (abs(a.translation[0] + px - b.translation[0]) <= tol * scale
                    and abs(a.translation[1] + py - b.translation[1]) <= tol * scale):
                va = mesh.copy_vertices(i) + np.array([px, py, period[2] if len(period) > 2 else 0.0])
                vb = mesh.copy_vertices(j)
                worst = max(worst, float(np.max(np.abs(va - vb))))
                matched += 1
    return worst, matched

#
# Vertices of different copies at the same (x, y) must agree in z.
#
def seam_conflicts(mesh, xy_tol=1e-9, z_tol=1e-9):
    tree = cKDTree(mesh.vertices[:, :2])
    conflicts = 0
    for i, j in tree.query_pairs(xy_tol, output_type="ndarray"):
        if mesh.provenance[i] != mesh.provenance[j] and abs(mesh.vertices[i, 2] - mesh.vertices[j, 2]) > z_tol:
            conflicts += 1
    return conflicts

def export_mesh(mesh, path, fmt="obj"):
    from .formatter import export_mesh as write
    write(mesh, path, fmt)
    log.info("wrote %s mesh with %d triangles to %s", fmt, mesh.triangle_count, path)

def read_obj(path):
    from .formatter import read_obj as read
    return read(path)
