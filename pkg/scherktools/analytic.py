#
# See the LICENSE file
#

#
# Closed-form translators and the functionals evaluated on discrete graphs.
#
# The translator equation for a graph z = u(x, y) is
#
#     -Div(Du / W) = 1 / W,      W = sqrt(1 + |Du|^2)
#
# which, multiplied through by W^3, is the non-divergence form
#
#     F = (1 + u_y^2) u_xx - 2 u_x u_y u_xy + (1 + u_x^2) u_yy + W^2 = 0
#

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, GridError, ParameterError
from .geometry import ScalarField

WIDTH_TOLERANCE = 1e-12

def _check_strip(y, width, name):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0.0)) or np.any(~(y < width)):
        raise DomainError("%s is defined for 0 < y < %.17g only" % (name, width))
    return y

def grim_reaper(x, y):
    y = _check_strip(y, math.pi, "grim reaper")
    out = np.log(np.sin(y)) + 0.0 * np.asarray(x, dtype=float)
    return out if out.ndim else float(out)

@dataclass(frozen=True)
class TiltedReaperParams:
    w: float
    sign: int = -1
    x0: float = 0.0
    z0: float = 0.0
    # the strip is y0 < y < y0 + w
    y0: float = 0.0

    def __post_init__(self):
        if not self.w >= math.pi - WIDTH_TOLERANCE:
            raise ParameterError("tilted grim reapers need width w >= pi, got w=%r" % (self.w,))
        if self.sign not in (1, -1):
            raise ParameterError("sign must be +1 or -1, got %r" % (self.sign,))

    @property
    def slope(self):
        return self.sign * math.sqrt(max(0.0, (self.w / math.pi) ** 2 - 1.0))

    @property
    def theta(self):
        return self.sign * math.acos(min(1.0, math.pi / self.w))

def tilted_reaper(p, x, y):
    yy = _check_strip(np.asarray(y, dtype=float) - p.y0, p.w, "tilted grim reaper")
    scale = (p.w / math.pi) ** 2
    out = scale * np.log(np.sin(yy * math.pi / p.w)) + p.slope * (np.asarray(x, dtype=float) - p.x0) + p.z0
    return out if out.ndim else float(out)

def tilted_reaper_from_angle(theta, x, y):
    if not abs(theta) < math.pi / 2:
        raise ParameterError("tilt angle must satisfy |theta| < pi/2, got %r" % (theta,))
    c = math.cos(theta)
    y = _check_strip(y, math.pi / c, "tilted grim reaper")
    out = np.log(np.sin(y * c)) / c ** 2 + np.asarray(x, dtype=float) * math.tan(theta)
    return out if out.ndim else float(out)

def g_w(w, x, y):
    return tilted_reaper(TiltedReaperParams(w, sign=-1), x, y)

def g_w_prime(w, x, y):
    return g_w(w, -np.asarray(x, dtype=float), y)

#
# Area of the part of the upper hemisphere between the equator and the great
# circle C(w) through the tilted reaper's limit normals. Total curvature of a
# scherkenoid or pitchfork of width w.
#
def gauss_region_area(w):
    if not w >= math.pi - WIDTH_TOLERANCE:
        raise ParameterError("gauss region is defined for w >= pi, got w=%r" % (w,))
    return 2.0 * math.asin(min(1.0, math.pi / w))

#
# Finite differences in the sheared chart
#
class ChartDerivatives(NamedTuple):
    v_s: np.ndarray
    v_t: np.ndarray
    v_ss: np.ndarray
    v_st: np.ndarray
    v_tt: np.ndarray

def interior_derivatives(values, ds, dt):
    v = np.asarray(values, dtype=float)
    c = v[1:-1, 1:-1]
    return ChartDerivatives(
        v_s=(v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * ds),
        v_t=(v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * dt),
        v_ss=(v[2:, 1:-1] - 2.0 * c + v[:-2, 1:-1]) / ds ** 2,
        v_st=(v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * ds * dt),
        v_tt=(v[1:-1, 2:] - 2.0 * c + v[1:-1, :-2]) / dt ** 2)

def cartesian_second_derivatives(d, cot):
    u_xx = d.v_ss
    u_xy = d.v_st - cot * d.v_ss
    u_yy = d.v_tt - 2.0 * cot * d.v_st + cot ** 2 * d.v_ss
    return u_xx, u_xy, u_yy

class OperatorTerms(NamedTuple):
    F: np.ndarray
    W: np.ndarray
    p: np.ndarray
    q: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

#
# Non-divergence translator operator written in chart derivatives:
#   F = A v_ss + B v_st + C v_tt + 1 + p^2 + q^2
# with p = u_x = v_s and q = u_y = v_t - cot v_s.
#
def translator_operator(d, cot):
    p = d.v_s
    q = d.v_t - cot * d.v_s
    A = 1.0 + q ** 2 + 2.0 * cot * p * q + cot ** 2 * (1.0 + p ** 2)
    B = -2.0 * p * q - 2.0 * cot * (1.0 + p ** 2)
    C = 1.0 + p ** 2
    W2 = 1.0 + p ** 2 + q ** 2
    F = A * d.v_ss + B * d.v_st + C * d.v_tt + W2
    return OperatorTerms(F=F, W=np.sqrt(W2), p=p, q=q, A=A, B=B, C=C)

def translator_residual(u):
    if u.n_s < 3 or u.n_t < 3:
        raise GridError("residual needs at least 3 nodes per direction")
    d = interior_derivatives(u.values, u.ds, u.dt)
    terms = translator_operator(d, u.domain.cot)
    out = np.zeros(u.shape)
    out[1:-1, 1:-1] = -terms.F / terms.W ** 3
    return u.with_values(out)

def residual_norm(u, ring=1):
    r = translator_residual(u).values
    mask = u.norm_mask(ring)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(r[mask])))

#
# Cell-midpoint quadrature. The center value of a cell is the mean of its four
# corners; gradients come from cell differences. Each chart cell has plane
# area ds*dt since the shear has unit Jacobian.
#
class CellSamples(NamedTuple):
    u: np.ndarray
    u_x: np.ndarray
    u_y: np.ndarray
    x: np.ndarray
    y: np.ndarray
    area: float

def cell_samples(u):
    v = u.values
    center = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    v_s = 0.5 * ((v[1:, :-1] - v[:-1, :-1]) + (v[1:, 1:] - v[:-1, 1:])) / u.ds
    v_t = 0.5 * ((v[:-1, 1:] - v[:-1, :-1]) + (v[1:, 1:] - v[1:, :-1])) / u.dt
    s = 0.5 * (u.s[:-1] + u.s[1:])
    t = 0.5 * (u.t[:-1] + u.t[1:])
    S, T = np.meshgrid(s, t, indexing="ij")
    x, y = u.domain.from_chart(S, T)
    return CellSamples(center, v_s, v_t - u.domain.cot * v_s, x, y, u.ds * u.dt)

def region_cells(u, region=None):
    cells = cell_samples(u)
    if region is None:
        return cells, np.ones(cells.u.shape, dtype=bool)
    if not u.domain.contains_domain(region):
        raise GridError("integration region lies outside the grid domain")
    return cells, region.contains(cells.x, cells.y)

def integrate(u, integrand, region=None):
    cells, mask = region_cells(u, region)
    values = integrand(cells)
    # fixed summation order: row-major over cells
    return float(np.sum(np.where(mask, values, 0.0)) * cells.area)

def area_element(cells):
    return np.sqrt(1.0 + cells.u_x ** 2 + cells.u_y ** 2)

def ilmanen_area(u, region=None):
    return integrate(u, lambda c: np.exp(-c.u) * area_element(c), region)

def inverse_area_integral(u, region=None):
    return integrate(u, lambda c: 1.0 / area_element(c), region)

def g_area_comparison(u, competitor, region=None):
    if u.shape != competitor.shape or u.domain != competitor.domain:
        raise GridError("competitor must live on the same grid as the solution")
    boundary = u.boundary_mask()
    if not np.allclose(u.values[boundary], competitor.values[boundary], rtol=0.0, atol=1e-12):
        raise ParameterError("competitor must share the solution's boundary values")
    return ilmanen_area(u, region), ilmanen_area(competitor, region)

def sample_exact(domain, n_s, n_t, fn):
    return ScalarField.from_function(domain, n_s, n_t, fn)
