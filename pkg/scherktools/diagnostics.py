#
# See the LICENSE file
#

import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from . import analytic
from .errors import GridError, ParameterError, WindowTooSmall
from .morse import (CriticalPoint, MorseCount, critical_points,  # noqa: F401
                    morse_count_check, reaper_difference_count)

log = logging.getLogger(__name__)

PLANE = "plane"
TILTED_REAPER = "tilted-reaper"
SIDES = ("left", "right")

def gauss_map(u):
    gx, gy = u.gradient()
    W = np.sqrt(1.0 + gx ** 2 + gy ** 2)
    return np.stack((-gx / W, -gy / W, 1.0 / W), axis=-1)

def gauss_curvature(u):
    d = analytic.interior_derivatives(u.values, u.ds, u.dt)
    cot = u.domain.cot
    u_xx, u_xy, u_yy = analytic.cartesian_second_derivatives(d, cot)
    p = d.v_s
    q = d.v_t - cot * d.v_s
    K = np.zeros(u.shape)
    K[1:-1, 1:-1] = (u_xx * u_yy - u_xy ** 2) / (1.0 + p ** 2 + q ** 2) ** 2
    return u.with_values(K)

#
# Integral of |K| over the surface: each node outside the corner ring carries
# its dual cell of area ds*dt, scaled by W.
#
def total_curvature(u, region=None, ring=1):
    K = gauss_curvature(u).values
    gx, gy = u.gradient()
    W = np.sqrt(1.0 + gx ** 2 + gy ** 2)
    mask = u.norm_mask(ring)
    if region is not None:
        if not u.domain.contains_domain(region):
            raise GridError("integration region lies outside the grid domain")
        x, y = u.xy
        mask &= region.contains(x, y)
    return float(np.sum(np.where(mask, np.abs(K) * W, 0.0)) * u.ds * u.dt)

def negative_curvature_fraction(u, ring=1):
    K = gauss_curvature(u).values
    mask = u.norm_mask(ring)
    if not np.any(mask):
        raise GridError("no interior nodes outside the corner ring")
    return float(np.count_nonzero(K[mask] < 0.0)) / float(np.count_nonzero(mask))

def curvature_summary(u, ring=1):
    K = gauss_curvature(u).values[u.norm_mask(ring)]
    return {"negative": int(np.count_nonzero(K < 0.0)),
            "zero": int(np.count_nonzero(K == 0.0)),
            "positive": int(np.count_nonzero(K > 0.0)),
            "negative_fraction": float(np.count_nonzero(K < 0.0)) / max(1, K.size),
            "total_curvature": total_curvature(u, ring=ring)}

class GaussImageReport(NamedTuple):
    fraction: float
    max_excess: float
    passed: bool

#
# Normals of a scherkenoid lie in the part of the upper hemisphere cut off by
# the great circle x = z sqrt((w/pi)^2 - 1).
#
def gauss_image_check(u, w, slack=0.05, ring=1):
    if not w >= math.pi - analytic.WIDTH_TOLERANCE:
        raise ParameterError("gauss image region needs w >= pi, got w=%r" % (w,))
    nu = gauss_map(u)[u.norm_mask(ring)]
    tilt = math.sqrt(max(0.0, (w / math.pi) ** 2 - 1.0))
    excess = nu[:, 0] - nu[:, 2] * tilt
    inside = (excess <= slack) & (nu[:, 2] > 0.0)
    fraction = float(np.count_nonzero(inside)) / max(1, len(inside))
    return GaussImageReport(fraction, float(np.max(excess)), fraction == 1.0)

#
# Residual refinement study from a single field: the same field subsampled
# on every other node is the coarse grid.
#
class RefinementReport(NamedTuple):
    coarse: float
    fine: float
    ratio: float
    passed: bool

def residual_refinement(u, ring=1, bound=0.30):
    if (u.n_s - 1) % 2 or (u.n_t - 1) % 2:
        raise GridError("refinement study needs an even number of cells in each direction")
    coarse = u.with_values(u.values[::2, ::2])
    r_coarse = analytic.residual_norm(coarse, ring)
    r_fine = analytic.residual_norm(u, ring)
    ratio = r_fine / r_coarse if r_coarse > 0 else 0.0
    return RefinementReport(r_coarse, r_fine, ratio, ratio <= bound)

class AsymptoteFit(NamedTuple):
    model: str
    side: str
    slope: float
    offset: float
    sup_deviation: float
    window: tuple
    y_slope: Optional[float] = None
    normal_angle: Optional[float] = None
    theoretical_slope: Optional[float] = None
    increment_deviation: Optional[float] = None

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self._asdict().items()}

def _window(u, side, w, margin):
    L = u.domain.L
    if L < 4.0 * w + margin:
        raise WindowTooSmall("fit window of width %g needs a domain at least %g long, got %g"
                             % (w, 4.0 * w + margin, L))
    s = u.s
    if side == "right":
        lo, hi = L - margin - w, L - margin
    else:
        lo, hi = margin, margin + w
    columns = (s >= lo - 1e-12) & (s <= hi + 1e-12)
    mask = u.interior_mask() & columns[:, None]
    return mask, (lo, hi)

def asymptote_fit(u, side, model, w=None, margin=0.0):
    if side not in SIDES:
        raise ParameterError("side must be left or right, got <" + str(side) + ">")
    x, y = u.xy
    if model == PLANE:
        mask, window = _window(u, side, u.domain.w, margin)
        A = np.column_stack((np.ones(np.count_nonzero(mask)), x[mask], y[mask]))
        coef, _, _, _ = np.linalg.lstsq(A, u.values[mask], rcond=None)
        deviation = float(np.max(np.abs(A @ coef - u.values[mask])))
        normal = np.array([-coef[1], -coef[2], 1.0])
        normal /= np.linalg.norm(normal)
        target = 1.0 if side == "left" else -1.0
        angle = math.degrees(math.acos(max(-1.0, min(1.0, target * normal[1]))))
        return AsymptoteFit(PLANE, side, float(coef[1]), float(coef[0]), deviation, window,
                            y_slope=float(coef[2]), normal_angle=angle)
    if model != TILTED_REAPER:
        raise ParameterError("unknown asymptote model <" + str(model) + ">")
    if w is None:
        w = u.domain.w
    if not w >= math.pi - analytic.WIDTH_TOLERANCE:
        raise ParameterError("tilted-reaper model needs w >= pi, got w=%r" % (w,))
    mask, window = _window(u, side, w, margin)
    y0 = u.domain.offset[1]
    band = (y >= y0 + 0.25 * w) & (y <= y0 + 0.75 * w)
    mask &= band
    if not np.any(mask):
        raise WindowTooSmall("fit window holds no nodes in the middle band")
    profile = (w / math.pi) ** 2 * np.log(np.sin(math.pi * (y[mask] - y0) / w))
    A = np.column_stack((np.ones(np.count_nonzero(mask)), x[mask]))
    coef, _, _, _ = np.linalg.lstsq(A, u.values[mask] - profile, rcond=None)
    deviation = float(np.max(np.abs(profile + A @ coef - u.values[mask])))
    sign = -1.0 if side == "right" else 1.0
    theory = sign * math.sqrt(max(0.0, (w / math.pi) ** 2 - 1.0))

    # increments u(x, y) - u(x_ref, y) along each row against the theoretical slope
    ref = np.argmax(mask, axis=0) if side == "right" else u.n_s - 1 - np.argmax(mask[::-1], axis=0)
    worst = 0.0
    for j in np.nonzero(np.any(mask, axis=0))[0]:
        rows = mask[:, j]
        i_ref = ref[j]
        du = u.values[rows, j] - u.values[i_ref, j]
        dx = x[rows, j] - x[i_ref, j]
        worst = max(worst, float(np.max(np.abs(du - theory * dx))))
    log.debug("tilted-reaper fit on %s side: slope %.6g (theory %.6g), deviation %.3e",
              side, coef[1], theory, deviation)
    return AsymptoteFit(TILTED_REAPER, side, float(coef[1]), float(coef[0]), deviation, window,
                        theoretical_slope=theory, increment_deviation=worst)

def slope_bound_violation(u, w, x_min=1.0, slack=0.05):
    gx, _ = u.gradient()
    x, _ = u.xy
    mask = u.norm_mask() & (x > x_min)
    if not np.any(mask):
        raise GridError("no interior nodes with x > %g" % x_min)
    bound = -math.sqrt(max(0.0, (w / math.pi) ** 2 - 1.0)) + slack
    return float(np.max(gx[mask] - bound))
