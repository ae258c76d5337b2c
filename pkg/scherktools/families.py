#
# See the LICENSE file
#

#
# The constructions: Scherk cells with the L(h) shooting condition,
# scherkenoids, helicoid-like translators with a self-consistent axis offset,
# pitchforks, and the flux identity checks that go with them.
#

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from . import analytic
from .errors import (BracketError, FixedPointDivergence, GeometryError,
                     MonotonicityError, NonConvergence, ParameterError)
from .geometry import (BOTTOM, EDGE_LABELS, LEFT, RIGHT, TOP, TRUNCATED_STRIP,
                       BoundarySpec, PlanarDomain, ScalarField, make_rectangle,
                       ramp_profile, step_profile)
from .solver import SolverConfig, solve_dirichlet, solve_scherk_cell

log = logging.getLogger(__name__)

#
# Scherk cells
#
def center_value(u):
    return float(u.value_at(0.0, 0.0))

def default_bracket(alpha, w):
    lo = w / math.sin(alpha)
    return (lo, lo + 4.0 * w)

def _warm_start(samples, L):
    if not samples:
        return None
    nearest = min(samples, key=lambda s: abs(s[0] - L))
    return nearest[2]

@dataclass
class ShootingResult:
    L: float
    field: ScalarField
    report: object
    # (L, center value) pairs evaluated during bisection
    samples: List[Tuple[float, float]] = field(default_factory=list)

def _check_monotone(samples, h):
    ordered = sorted((L, c) for L, c, _ in samples)
    for (L1, c1), (L2, c2) in zip(ordered, ordered[1:]):
        if not c2 < c1:
            raise MonotonicityError("center value is not decreasing in L at h=%g: u(%.6g)=%.6g, u(%.6g)=%.6g"
                                    % (h, L1, c1, L2, c2))

def find_L(alpha, w, h, grid, cfg=None, bracket=None, center_tol=1e-6, length_tol=1e-9,
           max_bisections=60, initial_guess=None):
    if not 0 < w < math.pi:
        raise ParameterError("Scherk cells need 0 < w < pi, got w=%r" % (w,))
    if not h > 0:
        raise ParameterError("h must be positive, got %r" % (h,))
    lo, hi = bracket if bracket is not None else default_bracket(alpha, w)
    if not 0 < lo < hi:
        raise ParameterError("bracket must satisfy 0 < L_lo < L_hi, got [%r, %r]" % (lo, hi))
    cfg = cfg or SolverConfig()
    samples = []

    def evaluate(L, guess):
        u, report = solve_scherk_cell(alpha, w, L, h, grid, cfg, guess)
        c = center_value(u)
        samples.append((L, c, u))
        _check_monotone(samples, h)
        log.debug("shooting h=%g: L=%.12g center=%.12g target=%.12g", h, L, c, h / 2)
        return c - h / 2, u, report

    f_lo, u_lo, rep_lo = evaluate(lo, initial_guess)
    if abs(f_lo) < center_tol:
        return ShootingResult(lo, u_lo, rep_lo, [(s[0], s[1]) for s in samples])
    f_hi, u_hi, rep_hi = evaluate(hi, initial_guess)
    if abs(f_hi) < center_tol:
        return ShootingResult(hi, u_hi, rep_hi, [(s[0], s[1]) for s in samples])
    if not (f_lo > 0 > f_hi):
        raise BracketError("no sign change of u(0,0) - h/2 on [%g, %g] at h=%g (%.6g, %.6g); enlarge the bracket or raise h"
                           % (lo, hi, h, f_lo, f_hi))

    best = (lo, u_lo, rep_lo, f_lo)
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        f_mid, u_mid, rep_mid = evaluate(mid, _warm_start(samples, mid))
        if abs(f_mid) < abs(best[3]):
            best = (mid, u_mid, rep_mid, f_mid)
        if abs(f_mid) < center_tol or hi - lo < length_tol * hi:
            break
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    L, u, report, _ = best
    log.info("h=%g: L(h)=%.10g after %d solves", h, L, len(samples))
    return ShootingResult(L, u, report, [(s[0], s[1]) for s in samples])

#
# Conormal flux of Du/W through the boundary, outward normal, trapezoid rule
# along each edge with one-sided second-order gradients.
#
def edge_flux(u, label):
    gx, gy = u.gradient()
    W = np.sqrt(1.0 + gx ** 2 + gy ** 2)
    edge = u.domain.edge(label)
    nx, ny = edge.inward_normal()
    flux = -(gx * nx + gy * ny) / W
    if label == BOTTOM:
        line = flux[:, 0]
    elif label == TOP:
        line = flux[::-1, -1]
    elif label == RIGHT:
        line = flux[-1, :]
    else:
        line = flux[0, ::-1]
    return float(trapezoid(line, dx=edge.length / (len(line) - 1)))

def boundary_flux(u):
    return sum(edge_flux(u, label) for label in EDGE_LABELS)

@dataclass
class IdentityReport:
    flux_lhs: float
    flux_rhs: float
    mismatch: float
    flux_boundary: float

    def to_dict(self):
        return {"flux_lhs": self.flux_lhs, "flux_rhs": self.flux_rhs,
                "mismatch": self.mismatch, "flux_boundary": self.flux_boundary}

def identity_report(u, alpha, w, L):
    lhs = 2.0 * L - 2.0 * w / math.sin(alpha)
    rhs = analytic.inverse_area_integral(u)
    return IdentityReport(lhs, rhs, abs(lhs - rhs) / rhs, boundary_flux(u))

def js_inequality_holds(alpha, w, L):
    excess = L - w / math.sin(alpha)
    return bool(0.0 < excess < 0.5 * w * L)

@dataclass
class ScherkResult:
    alpha: float
    w: float
    L_estimate: float
    h_schedule: List[float]
    L_per_h: List[float]
    increments: List[float]
    L_extrapolated: float
    field: ScalarField
    report: IdentityReport
    mismatch_per_h: List[float]
    inequality_holds: bool

    @property
    def h(self):
        return self.h_schedule[-1]

    @property
    def normalized_field(self):
        return self.field.with_values(self.field.values - self.h / 2.0)

    def to_dict(self):
        out = {"alpha": self.alpha, "w": self.w,
               "h_schedule": list(self.h_schedule),
               "L_per_h": list(self.L_per_h),
               "L_estimate": self.L_estimate,
               "L_increment": self.increments[-1] if self.increments else None,
               "L_extrapolated": self.L_extrapolated,
               "mismatch_per_h": list(self.mismatch_per_h),
               "js_inequality": self.inequality_holds}
        out.update(self.report.to_dict())
        return out

def _check_schedule(h_schedule):
    h = [float(x) for x in h_schedule]
    if len(h) < 3:
        raise ParameterError("h schedule needs at least 3 values, got %d" % len(h))
    if any(not x > 0 for x in h) or any(b <= a for a, b in zip(h, h[1:])):
        raise ParameterError("h schedule must be positive and strictly increasing, got %r" % (h,))
    return h

#
# L(h) - L_inf is first order in 1/h; the intercept of the fit in 1/h is the
# only extrapolation reported.
#
def extrapolate_L(h_schedule, L_per_h):
    slope, intercept = np.polyfit(1.0 / np.asarray(h_schedule), np.asarray(L_per_h), 1)
    return float(intercept)

def estimate_scherk(alpha, w, h_schedule, grid, cfg=None, bracket=None, warm_start=True):
    schedule = _check_schedule(h_schedule)
    L_per_h, mismatches = [], []
    previous, previous_h = None, None
    shot = None
    for h in schedule:
        guess = None
        if warm_start and previous is not None:
            guess = previous.field.values * (h / previous_h)
        shot = find_L(alpha, w, h, grid, cfg, bracket=bracket, initial_guess=guess)
        L_per_h.append(shot.L)
        mismatches.append(identity_report(shot.field, alpha, w, shot.L).mismatch)
        previous, previous_h = shot, h
        log.info("alpha=%.6g w=%.6g h=%g: L=%.10g mismatch=%.3e", alpha, w, h, shot.L, mismatches[-1])
    increments = [abs(b - a) for a, b in zip(L_per_h, L_per_h[1:])]
    L = L_per_h[-1]
    return ScherkResult(alpha=alpha, w=w, L_estimate=L, h_schedule=schedule, L_per_h=L_per_h,
                        increments=increments, L_extrapolated=extrapolate_L(schedule, L_per_h),
                        field=shot.field, report=identity_report(shot.field, alpha, w, L),
                        mismatch_per_h=mismatches, inequality_holds=js_inequality_holds(alpha, w, L))

def scherk_symmetry_partner(result, grid, cfg=None, bracket=None):
    return estimate_scherk(math.pi - result.alpha, result.w, result.h_schedule, grid, cfg, bracket)

def symmetric_pair(alpha, w, h_schedule, grid, cfg=None, bracket=None):
    first = estimate_scherk(alpha, w, h_schedule, grid, cfg, bracket)
    return first, scherk_symmetry_partner(first, grid, cfg, bracket)

#
# Truncated problems whose far edge follows the tilted grim reaper. The
# profile is clipped against a floor so it meets the adjacent edge data.
#
def reaper_profile(w, offset, floor):
    params = analytic.TiltedReaperParams(w, sign=-1)

    def profile(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, float(floor))
        inside = (y > 0.0) & (y < w)
        xb, yb = np.broadcast_arrays(x, y)
        if np.any(inside):
            out[inside] = np.maximum(floor, analytic.tilted_reaper(params, xb[inside], yb[inside]) + offset)
        return out
    return profile

def fit_reaper_offset(u, w, inset=None, band=(0.25, 0.75)):
    inset = w if inset is None else inset
    t = u.t
    rows = (t >= band[0] * w) & (t <= band[1] * w)
    s_ref = u.domain.L - inset
    if s_ref <= 0:
        raise GeometryError("truncation too short to fit the far-field offset")
    t_ref = t[rows]
    x_ref, y_ref = u.domain.from_chart(np.full(t_ref.shape, s_ref), t_ref)
    model = analytic.g_w(w, x_ref, y_ref - u.domain.offset[1])
    return float(np.mean(u.value_at(x_ref, y_ref) - model))

@dataclass
class TruncatedSolve:
    field: ScalarField
    report: object
    offset: Optional[float]
    passes: int

def _solve_with_far_edge(domain, bc_for_offset, w, grid, cfg, fit_passes, initial_offset_bc):
    u, report = solve_dirichlet(domain, initial_offset_bc, grid, cfg)
    offset = None
    for k in range(fit_passes):
        offset = fit_reaper_offset(u, w)
        log.info("far-edge pass %d: fitted reaper offset %.8g", k + 1, offset)
        u, report = solve_dirichlet(domain, bc_for_offset(offset), grid, cfg, initial_guess=u)
    return TruncatedSolve(u, report, offset, fit_passes + 1)

def scherkenoid_domain(alpha, w, c):
    if not c > abs(w / math.tan(alpha)) + w:
        raise GeometryError("truncation c=%g too short: need c > |w cot alpha| + w = %g"
                            % (c, abs(w / math.tan(alpha)) + w))
    return PlanarDomain(TRUNCATED_STRIP, alpha, w, c)

def solve_scherkenoid(alpha, w, c, h, grid, cfg=None, right_edge="reaper", fit_passes=2, full_output=False):
    if not w >= math.pi - analytic.WIDTH_TOLERANCE:
        raise ParameterError("scherkenoids need w >= pi, got w=%r" % (w,))
    if not h > 0:
        raise ParameterError("h must be positive, got %r" % (h,))
    if right_edge not in ("reaper", "zero"):
        raise ParameterError("unknown right-edge closure <" + str(right_edge) + ">")
    domain = scherkenoid_domain(alpha, w, c)
    cfg = cfg or SolverConfig()

    def bc(offset):
        profiles = {RIGHT: reaper_profile(w, offset, 0.0)}
        return BoundarySpec(values={BOTTOM: 0.0, TOP: 0.0, LEFT: float(h)}, profiles=profiles)

    plain = BoundarySpec.constant(0.0, 0.0, 0.0, float(h))
    passes = fit_passes if right_edge == "reaper" else 0
    run = _solve_with_far_edge(domain, bc, w, grid, cfg, passes, plain)
    return run if full_output else run.field

#
# Helicoid-like translators
#
@dataclass
class HelicoidResult:
    field: ScalarField
    x_hat: float
    history: List[float]
    increments: List[float]
    end_flux_left: float
    end_flux_right: float
    report: object

    def to_dict(self):
        return {"x_hat": self.x_hat, "x_hat_history": list(self.history),
                "x_hat_increments": list(self.increments),
                "end_flux_left": self.end_flux_left, "end_flux_right": self.end_flux_right,
                "sweeps": len(self.increments)}

def helicoid_boundary(a, w, H, x_hat, width):
    profiles = {
        BOTTOM: step_profile(0.0, H, -H, width),
        TOP: step_profile(x_hat, -H, H, width),
        LEFT: ramp_profile(0.0, H, w, -H),
        RIGHT: ramp_profile(0.0, -H, w, H),
    }
    return BoundarySpec(profiles=profiles)

def end_flux(u, label):
    gx, gy = u.gradient()
    W = np.sqrt(1.0 + gx ** 2 + gy ** 2)
    column = 0 if label == LEFT else -1
    return float(trapezoid(gx[column, :] / W[column, :], dx=u.dt))

def helicoid_fixed_point(w, a, H, grid, cfg=None, max_sweeps=20, x_hat0=0.0):
    if not 0 < w < math.pi:
        raise ParameterError("helicoid-like translators need 0 < w < pi, got w=%r" % (w,))
    if not a > w:
        raise ParameterError("half-length a must exceed w, got a=%r" % (a,))
    if not H > 0:
        raise ParameterError("surrogate H must be positive, got %r" % (H,))
    domain = make_rectangle(-a, a, 0.0, w)
    cfg = cfg or SolverConfig()
    ds = 2.0 * a / (grid[0] - 1)
    history = [float(x_hat0)]
    increments = []
    u = None
    for sweep in range(max_sweeps):
        x_hat = history[-1]
        u, report = solve_dirichlet(domain, helicoid_boundary(a, w, H, x_hat, ds), grid, cfg, initial_guess=u)
        update = 0.5 * analytic.inverse_area_integral(u)
        increments.append(abs(update - x_hat))
        log.info("axis sweep %d: x_hat %.10g -> %.10g", sweep + 1, x_hat, update)
        if len(increments) >= 3 and not increments[-1] < increments[-2]:
            raise FixedPointDivergence("axis offset increments stopped decreasing: %r" % (increments,),
                                       history + [update])
        if increments[-1] < ds:
            return HelicoidResult(u, x_hat, history, increments, end_flux(u, LEFT), end_flux(u, RIGHT), report)
        history.append(update)
    raise FixedPointDivergence("axis offset did not settle within %d sweeps" % max_sweeps, history)

def solve_helicoid_like(w, a, H, grid, cfg=None, max_sweeps=20):
    result = helicoid_fixed_point(w, a, H, grid, cfg, max_sweeps)
    return result.field, result.x_hat

#
# Pitchforks
#
def solve_pitchfork(w, a, H, grid, cfg=None, fit_passes=2, full_output=False):
    if not w >= math.pi - analytic.WIDTH_TOLERANCE:
        raise ParameterError("pitchforks need w >= pi, got w=%r" % (w,))
    if not a > 2.0 * w:
        raise GeometryError("half-length a=%g too short for w=%g: need a > 2w" % (a, w))
    if not H > 0:
        raise ParameterError("surrogate H must be positive, got %r" % (H,))
    domain = make_rectangle(-a, a, 0.0, w)
    cfg = cfg or SolverConfig()
    ds = 2.0 * a / (grid[0] - 1)

    def bc(offset):
        profiles = {BOTTOM: step_profile(0.0, H, -H, ds),
                    LEFT: ramp_profile(0.0, H, w, -H),
                    RIGHT: reaper_profile(w, offset, -H)}
        return BoundarySpec(values={TOP: -float(H)}, profiles=profiles)

    plain = BoundarySpec(values={TOP: -float(H), RIGHT: -float(H)},
                         profiles={BOTTOM: step_profile(0.0, H, -H, ds),
                                   LEFT: ramp_profile(0.0, H, w, -H)})
    run = _solve_with_far_edge(domain, bc, w, grid, cfg, fit_passes, plain)
    return run if full_output else run.field

#
# Shooting-condition sweep for widths where no Scherk translator exists. A
# bounded center value that never reaches h/2 is the numerical signature.
#
@dataclass
class NonexistenceEvidence:
    w: float
    alpha: float
    h_schedule: List[float]
    L_samples: List[float]
    center_values: List[List[float]]
    # None for a row with an unresolved sample
    sign_change: List[Optional[bool]]
    ceilings: List[float]
    # (h, L) pairs where the cell solve did not converge
    unresolved: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def no_sign_change_at_largest_h(self):
        return self.sign_change[-1] is False and not self.unresolved

    def to_dict(self):
        return {"w": self.w, "alpha": self.alpha, "h_schedule": list(self.h_schedule),
                "L_samples": list(self.L_samples), "center_values": [list(v) for v in self.center_values],
                "sign_change": list(self.sign_change), "ceilings": list(self.ceilings),
                "unresolved": [list(pair) for pair in self.unresolved],
                "no_sign_change_at_largest_h": self.no_sign_change_at_largest_h}

def nonexistence_probe(w, alpha, L_range, h_schedule, grid, cfg=None, samples=8):
    lo, hi = L_range
    if not 0 < lo < hi or not math.isfinite(hi):
        raise ParameterError("L range must be finite with 0 < L_lo < L_hi, got %r" % (L_range,))
    schedule = [float(h) for h in h_schedule]
    L_values = [float(x) for x in np.geomspace(lo, hi, samples)]
    centers, flags, ceilings, unresolved = [], [], [], []
    for h in schedule:
        row = []
        for L in L_values:
            try:
                u, _ = solve_scherk_cell(alpha, w, L, h, grid, cfg)
                row.append(center_value(u))
            except NonConvergence as e:
                log.warning("cell solve failed at h=%g L=%.6g: %s", h, L, e)
                unresolved.append((h, L))
                row.append(float("nan"))
        finite = [c for c in row if math.isfinite(c)]
        if len(finite) < len(row):
            flags.append(None)
        else:
            diffs = [c - h / 2 for c in finite]
            flags.append(min(diffs) < 0 < max(diffs))
        ceilings.append(max(finite) if finite else float("nan"))
        centers.append(row)
        log.info("shooting sweep w=%.6g h=%g: ceiling %.6g, sign change %s", w, h, ceilings[-1], flags[-1])
    return NonexistenceEvidence(w, alpha, schedule, L_values, centers, flags, ceilings, unresolved)
