#
# See the LICENSE file
#

#
# Polygonal domains, sheared structured grids and boundary data.
#
# A domain is a parallelogram with horizontal bottom/top edges:
#
#        (x0 + w cot a, y0 + w) ---- top ---- (x0 + L + w cot a, y0 + w)
#               /                                   /
#             left                               right
#             /                                   /
#        (x0, y0) -------- bottom -------- (x0 + L, y0)
#
# Nodes live on a uniform (s, t) chart, s in [0, L], t in [0, w], mapped by
# (s, t) -> (x0 + s + t cot a, y0 + t). The shear has unit Jacobian, so cell
# areas in the chart equal areas in the plane.
#

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import GeometryError, GridError, ParameterError

PARALLELOGRAM = "parallelogram"
TRUNCATED_STRIP = "truncated-strip"
DOMAIN_KINDS = (PARALLELOGRAM, TRUNCATED_STRIP)

BOTTOM = "bottom"
RIGHT = "right"
TOP = "top"
LEFT = "left"
EDGE_LABELS = (BOTTOM, RIGHT, TOP, LEFT)

PLUS_INF = "+INF"
MINUS_INF = "-INF"

def cotangent(alpha):
    # cos(pi/2) is not exactly zero in floating point
    if abs(alpha - math.pi / 2) < 1e-15:
        return 0.0
    return math.cos(alpha) / math.sin(alpha)

@dataclass(frozen=True)
class Edge:
    label: str
    start: Tuple[float, float]
    end: Tuple[float, float]

    @property
    def length(self):
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    def inward_normal(self):
        # edges run counter-clockwise, so the interior is on the left
        dx = self.end[0] - self.start[0]
        dy = self.end[1] - self.start[1]
        n = math.hypot(dx, dy)
        return (-dy / n, dx / n)

@dataclass(frozen=True)
class PlanarDomain:
    kind: str
    alpha: float
    w: float
    L: float
    offset: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ParameterError("unknown domain kind <" + str(self.kind) + ">")
        if not 0.0 < self.alpha < math.pi:
            raise ParameterError("corner angle alpha must lie in (0, pi), got %r" % (self.alpha,))
        if not self.w > 0.0:
            raise ParameterError("width w must be positive, got %r" % (self.w,))
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ParameterError("length L must be positive and finite, got %r" % (self.L,))

    @property
    def cot(self):
        return cotangent(self.alpha)

    @property
    def x_range(self):
        x0 = self.offset[0]
        return (x0 + min(0.0, self.w * self.cot), x0 + self.L + max(0.0, self.w * self.cot))

    @property
    def y_range(self):
        return (self.offset[1], self.offset[1] + self.w)

    @property
    def area(self):
        return self.L * self.w

    @property
    def corners(self):
        x0, y0 = self.offset
        shift = self.w * self.cot
        return ((x0, y0),
                (x0 + self.L, y0),
                (x0 + self.L + shift, y0 + self.w),
                (x0 + shift, y0 + self.w))

    @property
    def edges(self):
        c = self.corners
        return (Edge(BOTTOM, c[0], c[1]),
                Edge(RIGHT, c[1], c[2]),
                Edge(TOP, c[2], c[3]),
                Edge(LEFT, c[3], c[0]))

    def edge(self, label):
        for e in self.edges:
            if e.label == label:
                return e
        raise ParameterError("unknown edge label <" + str(label) + ">")

    @property
    def center(self):
        c = self.corners
        return ((c[0][0] + c[2][0]) / 2.0, (c[0][1] + c[2][1]) / 2.0)

    def translated(self, dx, dy):
        return PlanarDomain(self.kind, self.alpha, self.w, self.L,
                            (self.offset[0] + dx, self.offset[1] + dy))

    def to_chart(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        t = y - self.offset[1]
        s = x - self.offset[0] - t * self.cot
        return s, t

    def from_chart(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return self.offset[0] + s + t * self.cot, self.offset[1] + t

    def contains(self, x, y, tol=1e-12):
        s, t = self.to_chart(x, y)
        scale = max(self.L, self.w)
        eps = tol * scale
        return (s >= -eps) & (s <= self.L + eps) & (t >= -eps) & (t <= self.w + eps)

    def contains_domain(self, other, tol=1e-9):
        xs = np.array([p[0] for p in other.corners])
        ys = np.array([p[1] for p in other.corners])
        return bool(np.all(self.contains(xs, ys, tol=tol)))

def make_parallelogram(alpha, w, L, center_at_origin=False):
    domain = PlanarDomain(PARALLELOGRAM, alpha, w, L)
    if center_at_origin:
        domain = domain.translated(-(L / 2.0 + w * domain.cot / 2.0), -w / 2.0)
    return domain

def make_truncated_strip(x_lo, x_hi, w, alpha=math.pi / 2, y_lo=0.0):
    if not x_hi > x_lo:
        raise ParameterError("truncated strip needs x_hi > x_lo, got [%r, %r]" % (x_lo, x_hi))
    return PlanarDomain(TRUNCATED_STRIP, alpha, w, x_hi - x_lo, (x_lo, y_lo))

def make_rectangle(x_lo, x_hi, y_lo, y_hi):
    if not y_hi > y_lo:
        raise ParameterError("rectangle needs y_hi > y_lo, got [%r, %r]" % (y_lo, y_hi))
    return make_truncated_strip(x_lo, x_hi, y_hi - y_lo, y_lo=y_lo)

@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: PlanarDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise GridError("field values must be a 2-d array over (s, t) nodes")
        if values.shape[0] < 3 or values.shape[1] < 3:
            raise GridError("grid needs at least 3 nodes per direction, got %dx%d" % values.shape)
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite at every node")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_s(self):
        return self.values.shape[0]

    @property
    def n_t(self):
        return self.values.shape[1]

    @property
    def ds(self):
        return self.domain.L / (self.n_s - 1)

    @property
    def dt(self):
        return self.domain.w / (self.n_t - 1)

    @property
    def s(self):
        return np.linspace(0.0, self.domain.L, self.n_s)

    @property
    def t(self):
        return np.linspace(0.0, self.domain.w, self.n_t)

    @property
    def xy(self):
        S, T = np.meshgrid(self.s, self.t, indexing="ij")
        return self.domain.from_chart(S, T)

    @property
    def x(self):
        return self.xy[0]

    @property
    def y(self):
        return self.xy[1]

    def with_values(self, values):
        return ScalarField(self.domain, values)

    @classmethod
    def from_function(cls, domain, n_s, n_t, fn):
        grid = build_grid(domain, n_s, n_t)
        x, y = grid.xy
        return cls(domain, np.broadcast_to(fn(x, y), grid.shape))

    #
    # Node classification
    #
    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def corner_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, 0] = mask[-1, 0] = mask[-1, -1] = mask[0, -1] = True
        return mask

    def interior_mask(self):
        return ~self.boundary_mask()

    def edge_mask(self, label):
        # corner nodes carry no single-edge label
        mask = np.zeros(self.shape, dtype=bool)
        if label == BOTTOM:
            mask[1:-1, 0] = True
        elif label == TOP:
            mask[1:-1, -1] = True
        elif label == LEFT:
            mask[0, 1:-1] = True
        elif label == RIGHT:
            mask[-1, 1:-1] = True
        else:
            raise ParameterError("unknown edge label <" + str(label) + ">")
        return mask

    def node_labels(self):
        labels = np.full(self.shape, "interior", dtype=object)
        for label in EDGE_LABELS:
            labels[self.edge_mask(label)] = label
        labels[self.corner_mask()] = "corner"
        return labels

    def corner_ring_mask(self, ring=1):
        mask = np.zeros(self.shape, dtype=bool)
        for i in (0, self.n_s - 1):
            for j in (0, self.n_t - 1):
                mask[max(0, i - ring):i + ring + 1, max(0, j - ring):j + ring + 1] = True
        return mask

    def norm_mask(self, ring=1):
        return self.interior_mask() & ~self.corner_ring_mask(ring)

    #
    # Derivatives. Second order everywhere; one-sided second-order stencils
    # on the boundary rows.
    #
    def chart_gradient(self):
        v_s, v_t = np.gradient(self.values, self.ds, self.dt, edge_order=2)
        return v_s, v_t

    def gradient(self):
        v_s, v_t = self.chart_gradient()
        return v_s, v_t - self.domain.cot * v_s

    def value_at(self, x, y, method="linear"):
        s, t = self.domain.to_chart(x, y)
        interp = RegularGridInterpolator((self.s, self.t), self.values, method=method,
                                         bounds_error=False, fill_value=None)
        pts = np.stack(np.broadcast_arrays(s, t), axis=-1)
        out = interp(pts.reshape(-1, 2)).reshape(pts.shape[:-1])
        return out if out.ndim else float(out)

    def gradient_interpolators(self, method="linear"):
        gx, gy = self.gradient()
        axes = (self.s, self.t)
        return (RegularGridInterpolator(axes, gx, method=method, bounds_error=False, fill_value=None),
                RegularGridInterpolator(axes, gy, method=method, bounds_error=False, fill_value=None))

def build_grid(domain, n_s, n_t):
    if int(n_s) != n_s or int(n_t) != n_t:
        raise GridError("grid dimensions must be integers")
    if n_s < 3 or n_t < 3:
        raise GridError("grid needs at least 3 nodes per direction, got %dx%d" % (n_s, n_t))
    return ScalarField(domain, np.zeros((int(n_s), int(n_t))))

#
# Boundary data. Each edge holds exactly one assignment: a finite number, one
# of the symbols +INF/-INF (replaced by +H/-H on resolve), or a profile
# callable evaluated at the edge's node positions.
#
@dataclass(frozen=True)
class BoundarySpec:
    values: Dict[str, object] = field(default_factory=dict)
    profiles: Dict[str, Callable] = field(default_factory=dict)
    H: Optional[float] = None

    def __post_init__(self):
        for label in list(self.values) + list(self.profiles):
            if label not in EDGE_LABELS:
                raise ParameterError("unknown edge label <" + str(label) + ">")
        for label in EDGE_LABELS:
            assigned = (label in self.values) + (label in self.profiles)
            if assigned != 1:
                raise ParameterError("edge <" + label + "> must have exactly one assignment, has %d" % assigned)
        for label, value in self.values.items():
            if value in (PLUS_INF, MINUS_INF):
                continue
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError("edge <" + label + "> value must be finite or a symbolic infinity, got %r" % (value,))
        if self.has_symbols() and not (self.H is not None and self.H > 0):
            raise ParameterError("symbolic boundary values need a surrogate magnitude H > 0")

    @classmethod
    def constant(cls, bottom, right, top, left, H=None):
        return cls(values={BOTTOM: bottom, RIGHT: right, TOP: top, LEFT: left}, H=H)

    def has_symbols(self):
        return any(v in (PLUS_INF, MINUS_INF) for v in self.values.values())

    def resolved(self, H=None):
        H = self.H if H is None else H
        values = {}
        for label, value in self.values.items():
            if value == PLUS_INF:
                values[label] = float(H)
            elif value == MINUS_INF:
                values[label] = -float(H)
            else:
                values[label] = float(value)
        return BoundarySpec(values=values, profiles=dict(self.profiles), H=H)

    def shifted(self, c):
        if self.has_symbols():
            raise ParameterError("resolve symbolic boundary values before shifting")
        values = {k: v + c for k, v in self.values.items()}
        profiles = {k: (lambda x, y, f=f: f(x, y) + c) for k, f in self.profiles.items()}
        return BoundarySpec(values=values, profiles=profiles, H=self.H)

    def edge_values(self, label, x, y):
        if label in self.profiles:
            return np.broadcast_to(np.asarray(self.profiles[label](x, y), dtype=float), np.shape(x)).copy()
        value = self.values[label]
        if value in (PLUS_INF, MINUS_INF):
            raise ParameterError("boundary value on <" + label + "> is symbolic; resolve it with a surrogate H first")
        return np.full(np.shape(x), float(value))

    #
    # Nodal boundary values on a grid. Corner nodes take the average of the
    # two adjacent edges evaluated at the corner.
    #
    def nodal_values(self, grid):
        x, y = grid.xy
        out = np.zeros(grid.shape)
        for label in EDGE_LABELS:
            mask = grid.edge_mask(label)
            out[mask] = self.edge_values(label, x[mask], y[mask])
        corner_edges = {(0, 0): (BOTTOM, LEFT),
                        (-1, 0): (BOTTOM, RIGHT),
                        (-1, -1): (TOP, RIGHT),
                        (0, -1): (TOP, LEFT)}
        for (i, j), (a, b) in corner_edges.items():
            px = np.array([x[i, j]])
            py = np.array([y[i, j]])
            out[i, j] = 0.5 * (self.edge_values(a, px, py)[0] + self.edge_values(b, px, py)[0])
        if not np.all(np.isfinite(out[grid.boundary_mask()])):
            raise ParameterError("boundary data must be finite at every boundary node")
        return out

#
# Piecewise edge data helpers. The jump is blended across one cell so that the
# data moves continuously with the jump location.
#
def step_profile(x_jump, left_value, right_value, width):
    def profile(x, y):
        x = np.asarray(x, dtype=float)
        if width <= 0:
            return np.where(x < x_jump, left_value, np.where(x > x_jump, right_value, 0.5 * (left_value + right_value)))
        lam = np.clip((x - x_jump) / width + 0.5, 0.0, 1.0)
        return left_value + (right_value - left_value) * lam
    return profile

def ramp_profile(y_lo, value_lo, y_hi, value_hi):
    def profile(x, y):
        lam = (np.asarray(y, dtype=float) - y_lo) / (y_hi - y_lo)
        return value_lo + (value_hi - value_lo) * lam
    return profile

def point_in_convex_polygon(polygon, x, y, tol=1e-12):
    pts = np.asarray(polygon, dtype=float)
    if len(pts) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
    area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    orient = 1.0 if area > 0 else -1.0
    for k in range(len(pts)):
        ax, ay = pts[k]
        bx, by = pts[(k + 1) % len(pts)]
        cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        inside &= orient * cross >= -tol * math.hypot(bx - ax, by - ay)
    return inside

def circle_polygon(center, radius, n=256):
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.column_stack((center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)))
