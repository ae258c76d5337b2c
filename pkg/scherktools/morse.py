#
# See the LICENSE file
#

#
# Critical points by gradient winding and the boundary counting identity
#
#     N = c0 - c1 - chi + m
#
# N   saddle critical points counted with multiplicity
# c0  boundary minima of F restricted to the boundary that are minima on the patch
# c1  boundary maxima of F restricted to the boundary that are not maxima on the patch
# chi Euler characteristic of the sublevel set
# m   interior extrema (none for differences of translators)
#

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage

from .analytic import tilted_reaper
from .errors import NonRegularLevel, UnresolvedCritical
from .geometry import ScalarField, point_in_convex_polygon

log = logging.getLogger(__name__)

SADDLE = "saddle"
MINIMUM = "minimum"
MAXIMUM = "maximum"

GRADIENT_FLOOR = 1e-10
LOOP_SAMPLES = 64
LEVEL_GAP = 1e-8
CORNER_TURN = math.radians(20.0)
# facet ripple on sampled polygons stays below this fraction of the value range
BOUNDARY_PROMINENCE = 1e-3

@dataclass(frozen=True)
class CriticalPoint:
    location: Tuple[float, float]
    multiplicity: Optional[int]
    cell: Tuple[int, int]
    kind: str
    xy: Tuple[float, float] = (0.0, 0.0)

    @property
    def is_saddle(self):
        return self.kind == SADDLE

#
# Closed loop of node indices around the node box [i0, i1] x [j0, j1],
# counter-clockwise in the chart.
#
def _box_loop(i0, i1, j0, j1):
    loop = [(i, j0) for i in range(i0, i1)]
    loop += [(i1, j) for j in range(j0, j1)]
    loop += [(i, j1) for i in range(i1, i0, -1)]
    loop += [(i0, j) for j in range(j1, j0, -1)]
    return loop

def winding_degree(gx, gy, loop, samples=LOOP_SAMPLES):
    per_segment = max(2, int(math.ceil(samples / len(loop))))
    lam = np.arange(per_segment) / per_segment
    vx, vy = [], []
    for k, (i, j) in enumerate(loop):
        ni, nj = loop[(k + 1) % len(loop)]
        vx.append(gx[i, j] + lam * (gx[ni, nj] - gx[i, j]))
        vy.append(gy[i, j] + lam * (gy[ni, nj] - gy[i, j]))
    vx = np.concatenate(vx)
    vy = np.concatenate(vy)
    if np.min(np.hypot(vx, vy)) < GRADIENT_FLOOR:
        raise UnresolvedCritical("gradient vanishes on the winding loop; refine the grid")
    angle = np.arctan2(vy, vx)
    turns = np.diff(np.append(angle, angle[0]))
    turns = (turns + math.pi) % (2.0 * math.pi) - math.pi
    return int(round(np.sum(turns) / (2.0 * math.pi)))

def _candidate_cells(gx, gy, floor):
    def straddles(g):
        corners = np.stack((g[:-1, :-1], g[1:, :-1], g[:-1, 1:], g[1:, 1:]))
        return (corners.min(axis=0) <= floor) & (corners.max(axis=0) >= -floor)
    mag = np.hypot(gx, gy)
    corners = np.stack((mag[:-1, :-1], mag[1:, :-1], mag[:-1, 1:], mag[1:, 1:]))
    return straddles(gx) & straddles(gy) & (corners.max(axis=0) > floor)

def _refine_location(f, gx, gy, i, j):
    # one Newton step on the cell-averaged gradient, clipped to the cell
    ds, dt = f.ds, f.dt
    g = np.array([gx[i:i + 2, j:j + 2].mean(), gy[i:i + 2, j:j + 2].mean()])
    jac = np.array([[(gx[i + 1, j:j + 2].mean() - gx[i, j:j + 2].mean()) / ds,
                     (gx[i:i + 2, j + 1].mean() - gx[i:i + 2, j].mean()) / dt],
                    [(gy[i + 1, j:j + 2].mean() - gy[i, j:j + 2].mean()) / ds,
                     (gy[i:i + 2, j + 1].mean() - gy[i:i + 2, j].mean()) / dt]])
    s = f.s[i] + 0.5 * ds
    t = f.t[j] + 0.5 * dt
    if abs(np.linalg.det(jac)) > 1e-12 * max(1.0, np.max(np.abs(jac)) ** 2):
        step = np.linalg.solve(jac, -g)
        s = float(np.clip(s + step[0], f.s[i], f.s[i + 1]))
        t = float(np.clip(t + step[1], f.t[j], f.t[j + 1]))
    return s, t

def critical_points(f, mask=None):
    gx, gy = f.gradient()
    peak = float(np.max(np.hypot(gx, gy)))
    floor = max(GRADIENT_FLOOR, 1e-9 * peak)
    candidates = _candidate_cells(gx, gy, floor)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        candidates &= mask[:-1, :-1] & mask[1:, :-1] & mask[:-1, 1:] & mask[1:, 1:]
    labels, count = ndimage.label(candidates, structure=np.ones((3, 3), dtype=int))
    points = []
    for box in ndimage.find_objects(labels):
        ci, cj = box
        i0 = max(0, ci.start - 1)
        j0 = max(0, cj.start - 1)
        i1 = min(f.n_s - 1, ci.stop + 1)
        j1 = min(f.n_t - 1, cj.stop + 1)
        degree = winding_degree(gx, gy, _box_loop(i0, i1, j0, j1))
        if degree == 0:
            continue
        cells = [(i, j) for i in range(ci.start, ci.stop) for j in range(cj.start, cj.stop) if candidates[i, j]]
        i, j = min(cells, key=lambda c: np.hypot(gx[c[0]:c[0] + 2, c[1]:c[1] + 2],
                                                 gy[c[0]:c[0] + 2, c[1]:c[1] + 2]).mean())
        s, t = _refine_location(f, gx, gy, i, j)
        x, y = f.domain.from_chart(s, t)
        if degree < 0:
            kind, multiplicity = SADDLE, -degree
        else:
            inner = f.values[ci.start:ci.stop + 1, cj.start:cj.stop + 1].mean()
            ring = np.mean([f.values[p] for p in _box_loop(i0, i1, j0, j1)])
            kind, multiplicity = (MINIMUM if inner < ring else MAXIMUM), None
        points.append(CriticalPoint((s, t), multiplicity, (i, j), kind, (float(x), float(y))))
        log.debug("critical point %s at (%.6g, %.6g), degree %d", kind, x, y, degree)
    return points

def saddle_count(points):
    return sum(p.multiplicity for p in points if p.is_saddle)

#
# Boundary sampling of a polygonal patch: vertices plus dense points along
# each edge. Inward normals and turning angles are per sample.
#
class BoundarySamples(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    normal: np.ndarray
    corner: np.ndarray

def sample_boundary(polygon, spacing):
    pts = np.asarray(polygon, dtype=float)
    area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    if area < 0:
        pts = pts[::-1]
    n = len(pts)
    xs, ys, normals, corners = [], [], [], []
    for k in range(n):
        a = pts[k]
        b = pts[(k + 1) % n]
        prev = pts[k - 1]
        edge = b - a
        length = float(np.hypot(*edge))
        inward = np.array([-edge[1], edge[0]]) / length
        before = a - prev
        before_inward = np.array([-before[1], before[0]]) / float(np.hypot(*before))
        turn = math.atan2(before[0] * edge[1] - before[1] * edge[0], float(np.dot(before, edge)))
        count = max(1, int(math.ceil(length / spacing)))
        lam = np.arange(count) / count
        xs.append(a[0] + lam * edge[0])
        ys.append(a[1] + lam * edge[1])
        vertex_normal = before_inward + inward
        vertex_normal /= np.hypot(*vertex_normal)
        normals.append(np.vstack([vertex_normal] + [inward] * (count - 1)))
        corners.append(np.array([abs(turn) > CORNER_TURN] + [False] * (count - 1)))
    return BoundarySamples(np.concatenate(xs), np.concatenate(ys), np.vstack(normals), np.concatenate(corners))

#
# Alternating boundary extrema of a closed sample loop. A flat run counts as
# one extremum at its middle sample. Adjacent min/max pairs closer than
# prominence are cancelled, smallest first, down to the global pair.
#
def boundary_extrema(values, tol=0.0, prominence=0.0):
    v = np.asarray(values, dtype=float)
    n = len(v)
    d = np.roll(v, -1) - v
    sgn = np.where(np.abs(d) > tol, np.sign(d), 0.0)
    nonzero = np.flatnonzero(sgn)
    if len(nonzero) == 0:
        return [], []
    k0 = int(nonzero[0])
    prev, prev_at = sgn[k0], k0
    turns = []
    for step in range(1, n + 1):
        m = (k0 + step) % n
        if sgn[m] == 0:
            continue
        if sgn[m] != prev:
            span = (m - prev_at) % n
            turns.append(((prev_at + 1 + (span - 1) // 2) % n, prev > 0))
            prev = sgn[m]
        prev_at = m
    while prominence > 0 and len(turns) > 2:
        gaps = [abs(v[turns[i][0]] - v[turns[(i + 1) % len(turns)][0]]) for i in range(len(turns))]
        i = int(np.argmin(gaps))
        if gaps[i] >= prominence:
            break
        for k in sorted((i, (i + 1) % len(turns)), reverse=True):
            del turns[k]
    minima = sorted(k for k, is_max in turns if not is_max)
    maxima = sorted(k for k, is_max in turns if is_max)
    return minima, maxima

#
# Euler characteristic of the sublevel set, from the triangulation of the
# grid that splits each cell along its (i, j)-(i+1, j+1) diagonal.
#
def sublevel_euler_characteristic(included):
    inc = np.asarray(included, dtype=bool)
    V = int(np.sum(inc))
    E = int(np.sum(inc[:-1, :] & inc[1:, :]) + np.sum(inc[:, :-1] & inc[:, 1:])
            + np.sum(inc[:-1, :-1] & inc[1:, 1:]))
    diag = inc[:-1, :-1] & inc[1:, 1:]
    T = int(np.sum(diag & inc[1:, :-1]) + np.sum(diag & inc[:-1, 1:]))
    return V - E + T

class MorseCount(NamedTuple):
    N: int
    c0: int
    c1: int
    chi: int
    identity_holds: bool
    extrema: int

def morse_count_check(F, a=math.inf, patch=None):
    polygon = np.asarray(patch if patch is not None else F.domain.corners, dtype=float)
    x, y = F.xy
    in_patch = point_in_convex_polygon(polygon, x, y)
    if math.isfinite(a) and np.any(np.abs(F.values[in_patch] - a) < LEVEL_GAP):
        raise NonRegularLevel("level %.17g is within %g of a node value; pick a regular value" % (a, LEVEL_GAP))
    included = in_patch & (F.values <= a)

    points = critical_points(F, included)
    N = saddle_count(points)
    m = sum(1 for p in points if not p.is_saddle)

    method = "cubic" if min(F.shape) >= 4 else "linear"
    samples = sample_boundary(polygon, 0.25 * min(F.ds, F.dt))
    values = np.asarray(F.value_at(samples.x, samples.y, method=method))
    gx_interp, gy_interp = F.gradient_interpolators()
    s, t = F.domain.to_chart(samples.x, samples.y)
    st = np.column_stack((s, t))
    slope_in = gx_interp(st) * samples.normal[:, 0] + gy_interp(st) * samples.normal[:, 1]
    scale = max(1.0, float(np.max(np.abs(values))))
    prominence = BOUNDARY_PROMINENCE * float(np.max(values) - np.min(values))
    minima, maxima = boundary_extrema(values, tol=1e-12 * scale, prominence=prominence)

    c0 = c1 = 0
    for k in minima:
        if values[k] <= a and (samples.corner[k] or slope_in[k] > 0):
            c0 += 1
    for k in maxima:
        if values[k] <= a and not samples.corner[k] and slope_in[k] > 0:
            c1 += 1
    chi = sublevel_euler_characteristic(included)
    holds = N == c0 - c1 - chi + m
    log.info("morse count at level %s: N=%d c0=%d c1=%d chi=%d m=%d identity %s",
             a, N, c0, c1, chi, m, "holds" if holds else "fails")
    return MorseCount(N, c0, c1, chi, bool(holds), m)

#
# Critical points of (tilted reaper - u) on the part of the cell covered by
# the reaper's strip.
#
def reaper_difference_count(u, reaper):
    x, y = u.xy
    inside = (y > reaper.y0) & (y < reaper.y0 + reaper.w)
    if not np.any(inside):
        return 0
    g = np.zeros(u.shape)
    g[inside] = tilted_reaper(reaper, x[inside], y[inside])
    difference = ScalarField(u.domain, np.where(inside, g - u.values, 0.0))
    mask = ndimage.binary_erosion(inside, structure=np.ones((3, 3), dtype=bool), iterations=2)
    mask &= u.norm_mask()
    if not np.any(mask):
        return 0
    return len(critical_points(difference, mask))
