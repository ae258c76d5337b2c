#
# See the LICENSE file
#

#
# Damped Newton for the Dirichlet problem of the translator equation
#
#     -Div(Du / W) - 1 / W = 0,      W = sqrt(1 + |Du|^2)
#
# discretized in conservative form. Every chart cell is split into two
# triangles; on a triangle T with linear interpolant gradient g the weak
# residual at a vertex i is
#
#     |T| ( g . D phi_i / W_T - 1 / (3 W_T) )
#
# where phi_i is the hat function of node i. Summed over the triangles around
# a node and divided by the nodal area ds*dt, this is a pointwise residual.
# The flux Du/W is bounded by 1, so steep boundary layers stay bounded too.
#

import logging
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import GeometryError, GridError, NonConvergence, ParameterError
from .geometry import (BOTTOM, LEFT, RIGHT, TOP, BoundarySpec, ScalarField,
                       build_grid, make_parallelogram)

log = logging.getLogger(__name__)

LINEAR_SOLVERS = ("direct", "bicgstab")

@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 50
    sufficient_decrease: float = 1e-4
    max_halvings: int = 30
    linear_solver: str = "direct"
    # iteration budget of the iterative linear solve
    linear_max_iter: int = 400
    linear_rtol: float = 1e-12
    continuation: bool = True
    ramp_stages: int = 4
    # boundary data spanning more than this are ramped from the start
    ramp_threshold: float = 4.0
    max_subdivisions: int = 6

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("solver tolerance must be positive, got %r" % (self.tol,))
        if self.max_iter < 1 or self.max_halvings < 1 or self.linear_max_iter < 1 or self.ramp_stages < 1:
            raise ParameterError("solver iteration counts must be at least 1")
        if self.max_subdivisions < 0:
            raise ParameterError("max_subdivisions must not be negative, got %r" % (self.max_subdivisions,))
        if not 0.0 < self.sufficient_decrease < 0.5:
            raise ParameterError("sufficient decrease factor must lie in (0, 0.5), got %r" % (self.sufficient_decrease,))
        if not self.ramp_threshold >= 0.0:
            raise ParameterError("ramp threshold must not be negative, got %r" % (self.ramp_threshold,))
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ParameterError("unknown linear solver <" + str(self.linear_solver) + ">")

@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_residual: float
    damping_events: int
    grid: Tuple[int, int]
    residual_history: List[float] = field(default_factory=list)
    step_history: List[float] = field(default_factory=list)
    continuation_stages: int = 0

    def to_dict(self):
        out = asdict(self)
        out["grid"] = list(self.grid)
        return out

#
# Linear solve strategies for the Newton correction
#
class LinearSolver:
    def __init__(self):
        pass

    def solve(self, matrix, rhs):
        raise Exception("this class cannot be used")

class Direct_LinearSolver(LinearSolver):
    def solve(self, matrix, rhs):
        return scipy.sparse.linalg.spsolve(matrix.tocsc(), rhs)

class Bicgstab_LinearSolver(LinearSolver):
    def __init__(self, max_iter=400, rtol=1e-12):
        self.max_iter = max_iter
        self.rtol = rtol

    def solve(self, matrix, rhs):
        matrix = matrix.tocsc()
        ilu = scipy.sparse.linalg.spilu(matrix, drop_tol=1e-6, fill_factor=20)
        precond = scipy.sparse.linalg.LinearOperator(matrix.shape, ilu.solve)
        x, info = scipy.sparse.linalg.bicgstab(matrix, rhs, rtol=self.rtol, atol=0.0,
                                               maxiter=self.max_iter, M=precond)
        if info < 0:
            raise NonConvergence("bicgstab breakdown (info=%d)" % info)
        if info > 0:
            log.debug("bicgstab used its full budget of %d iterations", self.max_iter)
        return x

def make_linear_solver(cfg):
    if cfg.linear_solver == "bicgstab":
        return Bicgstab_LinearSolver(cfg.linear_max_iter, cfg.linear_rtol)
    return Direct_LinearSolver()

#
# Transfinite (Coons) interpolation of boundary node values, in chart indices
#
def transfinite_interpolation(boundary):
    b = np.asarray(boundary, dtype=float)
    n_s, n_t = b.shape
    sigma = np.linspace(0.0, 1.0, n_s)[:, None]
    tau = np.linspace(0.0, 1.0, n_t)[None, :]
    bottom = b[:, 0][:, None]
    top = b[:, -1][:, None]
    left = b[0, :][None, :]
    right = b[-1, :][None, :]
    corners = ((1 - sigma) * (1 - tau) * b[0, 0] + sigma * (1 - tau) * b[-1, 0]
               + (1 - sigma) * tau * b[0, -1] + sigma * tau * b[-1, -1])
    out = (1 - tau) * bottom + tau * top + (1 - sigma) * left + sigma * right - corners
    out[0, :] = b[0, :]
    out[-1, :] = b[-1, :]
    out[:, 0] = b[:, 0]
    out[:, -1] = b[:, -1]
    return out

#
# Triangles of a chart cell with corners a = (i, j), b = (i+1, j),
# c = (i+1, j+1), d = (i, j+1). Each template lists its vertex offsets and
# the chart gradient of its linear interpolant as
#   v_s = sum cs_k v_k / ds,   v_t = sum ct_k v_k / dt.
#
class TriangleTemplate(NamedTuple):
    offsets: Tuple[Tuple[int, int], ...]
    cs: Tuple[float, float, float]
    ct: Tuple[float, float, float]

ABC = TriangleTemplate(((0, 0), (1, 0), (1, 1)), (-1.0, 1.0, 0.0), (0.0, -1.0, 1.0))
ACD = TriangleTemplate(((0, 0), (1, 1), (0, 1)), (0.0, 1.0, -1.0), (-1.0, 0.0, 1.0))
ABD = TriangleTemplate(((0, 0), (1, 0), (0, 1)), (-1.0, 1.0, 0.0), (-1.0, 0.0, 1.0))
BCD = TriangleTemplate(((1, 0), (1, 1), (0, 1)), (0.0, 1.0, -1.0), (-1.0, 1.0, 0.0))

SPLIT_TIE = 1e-12

#
# Split along the shorter diagonal: b-d when the shear leans right (cot > 0),
# a-c when it leans left. Rectangles use both splits at half weight so the
# scheme keeps the mirror symmetries of the cell.
#
def triangle_split(cot):
    if abs(cot) < SPLIT_TIE:
        return ((ABC, 0.5), (ACD, 0.5), (ABD, 0.5), (BCD, 0.5))
    if cot > 0:
        return ((ABD, 1.0), (BCD, 1.0))
    return ((ABC, 1.0), (ACD, 1.0))

class TriangleStencil:
    def __init__(self, shape, ds, dt, cot):
        n_s, n_t = shape
        self.shape = (int(n_s), int(n_t))
        self.ds = ds
        self.dt = dt
        I, J = np.meshgrid(np.arange(n_s - 1), np.arange(n_t - 1), indexing="ij")
        self.triangles = []
        for template, weight in triangle_split(cot):
            nodes = np.stack([((I + di) * n_t + (J + dj)).ravel() for di, dj in template.offsets])
            hx = np.asarray(template.cs) / ds
            hy = np.asarray(template.ct) / dt - cot * hx
            self.triangles.append((nodes, hx, hy, weight))
        # triangle area over nodal area
        self.scale = 0.5
        interior = np.zeros(self.shape, dtype=bool)
        interior[1:-1, 1:-1] = True
        self.interior = np.flatnonzero(interior.ravel())

    def _gradients(self, v, nodes, hx, hy):
        vals = v[nodes]
        p = hx @ vals
        q = hy @ vals
        return p, q, np.sqrt(1.0 + p * p + q * q)

    def residual(self, values):
        v = np.asarray(values, dtype=float).ravel()
        out = np.zeros(v.size)
        for nodes, hx, hy, weight in self.triangles:
            p, q, W = self._gradients(v, nodes, hx, hy)
            c = weight * self.scale / W
            # vertex k of a template maps cells to distinct nodes
            for k in range(3):
                out[nodes[k]] += c * (p * hx[k] + q * hy[k] - 1.0 / 3.0)
        return out.reshape(self.shape)

    #
    # d r_k / d v_m = c (h_k.h_m / W - (g.h_k)(g.h_m) / W^3 + (g.h_m) / (3 W^3))
    # restricted to interior rows and columns
    #
    def jacobian(self, values):
        v = np.asarray(values, dtype=float).ravel()
        rows, cols, data = [], [], []
        for nodes, hx, hy, weight in self.triangles:
            p, q, W = self._gradients(v, nodes, hx, hy)
            c = weight * self.scale / W
            W2 = W * W
            flux = [p * hx[k] + q * hy[k] for k in range(3)]
            for k in range(3):
                for m in range(3):
                    rows.append(nodes[k])
                    cols.append(nodes[m])
                    data.append(c * (hx[k] * hx[m] + hy[k] * hy[m]
                                     - flux[k] * flux[m] / W2 + flux[m] / (3.0 * W2)))
        n = v.size
        matrix = scipy.sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                         shape=(n, n)).tocsr()
        return matrix[self.interior][:, self.interior]

def make_stencil(u):
    return TriangleStencil(u.shape, u.ds, u.dt, u.domain.cot)

def discrete_residual(u):
    r = make_stencil(u).residual(u.values)
    r[u.boundary_mask()] = 0.0
    return u.with_values(r)

class DirichletSolver:
    def __init__(self, linear_solver, cfg):
        self.linear_solver = linear_solver
        self.cfg = cfg

    #
    # Damped Newton from a given start; boundary nodes stay fixed. Steps are
    # accepted by an Armijo test on the merit 1/2 |r|^2, whose slope along a
    # Newton correction is -|r|^2.
    #
    def newton(self, start, stencil, report):
        cfg = self.cfg
        v = np.array(start, dtype=float)
        r = stencil.residual(v)[1:-1, 1:-1]
        merit = 0.5 * float(np.sum(r * r))
        norm = float(np.max(np.abs(r))) if r.size else 0.0
        report.residual_history.append(norm)
        for iteration in range(cfg.max_iter):
            if norm <= cfg.tol:
                return v, norm, True
            matrix = stencil.jacobian(v)
            delta = self.linear_solver.solve(matrix, -r.ravel()).reshape(r.shape)
            if not np.all(np.isfinite(delta)):
                log.debug("newton correction is not finite, giving up")
                return v, norm, False
            step = 1.0
            accepted = False
            for halving in range(cfg.max_halvings + 1):
                trial = v.copy()
                trial[1:-1, 1:-1] += step * delta
                trial_r = stencil.residual(trial)[1:-1, 1:-1]
                trial_merit = 0.5 * float(np.sum(trial_r * trial_r))
                if np.isfinite(trial_merit) and trial_merit <= (1.0 - 2.0 * cfg.sufficient_decrease * step) * merit:
                    accepted = True
                    break
                step *= 0.5
                report.damping_events += 1
            report.iterations += 1
            if not accepted:
                log.debug("newton iteration %d: no sufficient decrease after %d halvings",
                          iteration + 1, cfg.max_halvings)
                return v, norm, False
            v, r, merit = trial, trial_r, trial_merit
            norm = float(np.max(np.abs(r)))
            report.residual_history.append(norm)
            report.step_history.append(step)
            log.debug("newton iteration %d: residual %.3e step %.3g", iteration + 1, norm, step)
        return v, norm, norm <= cfg.tol

    #
    # Continuation in the boundary data from a solved state (values, data)
    # towards the target: data + lambda (target - data), each stage warm
    # started from the last. A failed stage is retried at half the step.
    # Without a solved state the ramp starts from constant data at the
    # middle of the target's range.
    #
    def ramp(self, stencil, boundary, mask, report, origin=None):
        cfg = self.cfg
        if origin is None:
            level = 0.5 * (float(np.max(boundary[mask])) + float(np.min(boundary[mask])))
            base = np.full(boundary.shape, level)
            values, norm, ok = self.newton(base, stencil, report)
            report.continuation_stages += 1
            if not ok:
                log.debug("constant-data stage failed at residual %.3e", norm)
                return values, norm, False
        else:
            values, base = origin
            values = np.array(values, dtype=float)
            base = np.array(base, dtype=float)
            norm = float("inf")
        full_step = 1.0 / cfg.ramp_stages
        min_step = full_step / 2 ** cfg.max_subdivisions
        step = full_step
        lam = 0.0
        previous = base
        while lam < 1.0:
            target_lam = min(1.0, lam + step)
            target = np.where(mask, base + target_lam * (boundary - base), 0.0)
            start = values + transfinite_interpolation(np.where(mask, target - previous, 0.0))
            start[mask] = target[mask]
            trial, trial_norm, ok = self.newton(start, stencil, report)
            report.continuation_stages += 1
            if ok:
                log.debug("continuation stage lambda=%.6g: residual %.3e", target_lam, trial_norm)
                values, norm, previous, lam = trial, trial_norm, target, target_lam
                step = min(full_step, 2.0 * step)
                continue
            step *= 0.5
            if step < min_step:
                log.debug("continuation stalled at lambda=%.6g", lam)
                return trial, trial_norm, False
            log.debug("continuation stage lambda=%.6g failed, retrying with step %.3g", target_lam, step)
        return values, norm, True

    def solve_nodal(self, domain, boundary, initial_guess=None):
        boundary = np.asarray(boundary, dtype=float)
        n_s, n_t = boundary.shape
        grid = build_grid(domain, n_s, n_t)
        mask = grid.boundary_mask()
        if not np.all(np.isfinite(boundary[mask])):
            raise ParameterError("boundary data must be finite; resolve symbolic values first")
        ds, dt = grid.ds, grid.dt
        if not (np.isfinite(ds) and np.isfinite(dt) and ds > 0 and dt > 0):
            raise GeometryError("degenerate domain for the requested grid")
        stencil = TriangleStencil(boundary.shape, ds, dt, domain.cot)
        report = SolveReport(False, 0, float("inf"), 0, (n_s, n_t))
        cfg = self.cfg

        if initial_guess is not None:
            guess = np.asarray(initial_guess.values if isinstance(initial_guess, ScalarField) else initial_guess,
                               dtype=float).copy()
            if guess.shape != boundary.shape:
                raise GridError("initial guess has shape %r, grid is %r" % (guess.shape, boundary.shape))
            start = guess.copy()
            start[mask] = boundary[mask]
            values, norm, ok = self.newton(start, stencil, report)
            if not ok and cfg.continuation:
                log.info("newton from the initial guess stalled at residual %.3e, ramping from the guess data", norm)
                values, norm, ok = self.ramp(stencil, boundary, mask, report, origin=(guess, guess))
            if not ok and cfg.continuation:
                log.info("ramp from the initial guess failed, ramping from constant data")
                values, norm, ok = self.ramp(stencil, boundary, mask, report)
        else:
            spread = float(np.max(boundary[mask]) - np.min(boundary[mask]))
            if cfg.continuation and spread > cfg.ramp_threshold:
                log.info("boundary data span %.3g, ramping over %d stages", spread, cfg.ramp_stages)
                values, norm, ok = self.ramp(stencil, boundary, mask, report)
            else:
                values, norm, ok = self.newton(transfinite_interpolation(boundary), stencil, report)
                if not ok and cfg.continuation:
                    log.info("newton stalled at residual %.3e, ramping boundary data over %d stages",
                             norm, cfg.ramp_stages)
                    values, norm, ok = self.ramp(stencil, boundary, mask, report)
        report.converged = bool(ok)
        report.final_residual = norm
        if not ok:
            raise NonConvergence("newton did not converge on %dx%d grid (residual %.3e after %d iterations)"
                                 % (n_s, n_t, norm, report.iterations), report)
        log.info("converged on %dx%d grid: residual %.3e, %d iterations, %d damping events",
                 n_s, n_t, norm, report.iterations, report.damping_events)
        values[mask] = boundary[mask]
        return ScalarField(domain, values), report

    def solve(self, domain, bc, grid, initial_guess=None):
        n_s, n_t = grid
        if not isinstance(bc, BoundarySpec):
            raise ParameterError("boundary data must be a BoundarySpec")
        if bc.has_symbols():
            raise ParameterError("symbolic boundary values must be replaced by +/-H before solving")
        boundary = bc.nodal_values(build_grid(domain, n_s, n_t))
        return self.solve_nodal(domain, boundary, initial_guess)

def make_solver(cfg=None):
    cfg = cfg or SolverConfig()
    return DirichletSolver(make_linear_solver(cfg), cfg)

def solve_dirichlet(domain, bc, grid, cfg=None, initial_guess=None):
    return make_solver(cfg).solve(domain, bc, grid, initial_guess)

def scherk_cell_boundary(h):
    return BoundarySpec(values={BOTTOM: 0.0, TOP: 0.0, LEFT: float(h), RIGHT: float(h)})

def solve_scherk_cell(alpha, w, L, h, grid, cfg=None, initial_guess=None):
    if not h > 0:
        raise ParameterError("Scherk cell needs h > 0, got %r" % (h,))
    domain = make_parallelogram(alpha, w, L, center_at_origin=True)
    return solve_dirichlet(domain, scherk_cell_boundary(h), grid, cfg, initial_guess)
