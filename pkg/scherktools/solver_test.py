import math
import os
import unittest

import numpy as np

from scherktools import geometry, solver
from scherktools.errors import NonConvergence, ParameterError

TOL = 1e-10
CFG = solver.SolverConfig(tol=TOL)

def smooth_boundary(fn):
    profiles = {label: fn for label in geometry.EDGE_LABELS}
    return geometry.BoundarySpec(profiles=profiles)

class TestDirichlet(unittest.TestCase):
    def setUp(self):
        self.square = geometry.make_parallelogram(math.pi / 2, math.pi / 2, math.pi / 2)
        self.zero = geometry.BoundarySpec.constant(0.0, 0.0, 0.0, 0.0)

    def test_zero_data_is_a_supersolution(self):
        u, report = solver.solve_dirichlet(self.square, self.zero, (17, 17), CFG)
        assert report.converged
        assert report.final_residual <= TOL
        assert abs(np.min(u.values)) <= 10 * TOL
        assert np.max(u.values[u.interior_mask()]) > 0.0
        assert np.max(np.abs(solver.discrete_residual(u).values)) <= TOL

    def test_constant_shift(self):
        d = geometry.make_parallelogram(1.0, 1.0, 2.0)
        bc = geometry.BoundarySpec.constant(0.0, 1.0, 0.5, 2.0)
        u, _ = solver.solve_dirichlet(d, bc, (21, 13), CFG)
        v, _ = solver.solve_dirichlet(d, bc.shifted(3.25), (21, 13), CFG)
        assert np.max(np.abs(v.values - u.values - 3.25)) <= 10 * TOL

    def test_independent_of_initial_guess(self):
        d = geometry.make_parallelogram(1.2, 1.0, 1.5)
        bc = geometry.BoundarySpec.constant(0.0, 2.0, 0.0, 2.0)
        u, _ = solver.solve_dirichlet(d, bc, (17, 13), CFG)
        guess = u.with_values(np.full(u.shape, 5.0))
        v, _ = solver.solve_dirichlet(d, bc, (17, 13), CFG, initial_guess=guess)
        assert np.max(np.abs(u.values - v.values)) <= 10 * TOL

    def test_boundary_values_exact(self):
        bc = geometry.BoundarySpec.constant(0.0, 1.0, 2.0, 3.0)
        u, _ = solver.solve_dirichlet(self.square, bc, (9, 9), CFG)
        assert np.all(u.values[1:-1, 0] == 0.0)
        assert np.all(u.values[-1, 1:-1] == 1.0)
        assert np.all(u.values[1:-1, -1] == 2.0)
        assert np.all(u.values[0, 1:-1] == 3.0)

    def test_comparison_principle(self):
        d = geometry.make_parallelogram(0.9, 1.0, 2.0)
        low = geometry.BoundarySpec.constant(0.0, 0.5, -0.2, 0.3)
        high = geometry.BoundarySpec.constant(0.1, 0.9, 0.0, 0.3)
        u1, _ = solver.solve_dirichlet(d, low, (21, 13), CFG)
        u2, _ = solver.solve_dirichlet(d, high, (21, 13), CFG)
        assert np.all(u1.values <= u2.values + 10 * TOL)

    def test_minimum_principle(self):
        d = geometry.make_parallelogram(2.0, 1.0, 1.5)
        bc = geometry.BoundarySpec.constant(1.0, -1.0, 0.5, 2.0)
        u, _ = solver.solve_dirichlet(d, bc, (17, 13), CFG)
        assert np.min(u.values) >= np.min(u.values[u.boundary_mask()]) - 10 * TOL

    def test_grid_refinement(self):
        d = geometry.make_rectangle(0.0, 1.0, 0.0, 1.0)
        bc = smooth_boundary(lambda x, y: 0.5 * (x * x - y * y) + 0.2 * x)
        fields = [solver.solve_dirichlet(d, bc, (n, n), CFG)[0].values for n in (9, 17, 33)]
        first = np.max(np.abs(fields[1][::2, ::2] - fields[0]))
        second = np.max(np.abs(fields[2][::2, ::2] - fields[1]))
        assert second <= 0.35 * first

    def test_deterministic(self):
        bc = geometry.BoundarySpec.constant(0.0, 1.0, 0.0, 1.0)
        u, _ = solver.solve_dirichlet(self.square, bc, (13, 13), CFG)
        v, _ = solver.solve_dirichlet(self.square, bc, (13, 13), CFG)
        assert u.values.tobytes() == v.values.tobytes()

    def test_mixed_constant_data_converges(self):
        d = geometry.make_parallelogram(1.0, 1.0, 2.0)
        bc = geometry.BoundarySpec.constant(0.0, 1.0, 0.5, 2.0)
        u, report = solver.solve_dirichlet(d, bc, (21, 13), CFG)
        assert report.converged
        assert report.final_residual <= TOL
        assert report.iterations < CFG.max_iter
        assert np.max(np.abs(solver.discrete_residual(u).values)) <= TOL
        assert np.min(u.values[u.interior_mask()]) > -10 * TOL

    def test_large_jump_is_ramped(self):
        bc = geometry.BoundarySpec.constant(0.0, 8.0, 0.0, 8.0)
        u, report = solver.solve_dirichlet(self.square, bc, (17, 17), CFG)
        assert report.converged
        assert report.continuation_stages >= CFG.ramp_stages + 1
        assert np.max(np.abs(u.values - u.values[::-1, ::-1])) <= 1e-8
        assert np.max(np.abs(u.values - u.values.T)) > 0.1

    def test_single_stage_ramp_subdivides_or_succeeds(self):
        cfg = solver.SolverConfig(tol=TOL, ramp_stages=1, ramp_threshold=0.0)
        bc = geometry.BoundarySpec.constant(0.0, 12.0, 0.0, 12.0)
        u, report = solver.solve_dirichlet(self.square, bc, (17, 17), cfg)
        reference, _ = solver.solve_dirichlet(self.square, bc, (17, 17), CFG)
        assert report.converged
        assert report.continuation_stages >= 2
        assert np.max(np.abs(u.values - reference.values)) <= 1e-8

    def test_bicgstab_agrees_with_direct(self):
        bc = geometry.BoundarySpec.constant(0.0, 1.0, 0.0, 1.0)
        cfg = solver.SolverConfig(tol=TOL, linear_solver="bicgstab")
        u, _ = solver.solve_dirichlet(self.square, bc, (13, 13), CFG)
        v, _ = solver.solve_dirichlet(self.square, bc, (13, 13), cfg)
        assert np.max(np.abs(u.values - v.values)) <= 10 * TOL

    def test_symbolic_values_rejected(self):
        bc = geometry.BoundarySpec.constant(geometry.MINUS_INF, 1.0, 0.0, 0.0, H=4.0)
        with self.assertRaises(ParameterError):
            solver.solve_dirichlet(self.square, bc, (9, 9), CFG)

    def test_non_convergence_carries_report(self):
        cfg = solver.SolverConfig(tol=TOL, max_iter=1, continuation=False)
        bc = geometry.BoundarySpec.constant(0.0, 8.0, 0.0, 8.0)
        with self.assertRaises(NonConvergence) as ctx:
            solver.solve_dirichlet(self.square, bc, (17, 17), cfg)
        assert ctx.exception.report is not None
        assert not ctx.exception.report.converged
        assert ctx.exception.report.iterations == 1

    def test_config_validation(self):
        with self.assertRaises(ParameterError):
            solver.SolverConfig(tol=0.0)
        with self.assertRaises(ParameterError):
            solver.SolverConfig(max_iter=0)
        with self.assertRaises(ParameterError):
            solver.SolverConfig(linear_solver="jacobi")
        with self.assertRaises(ParameterError):
            solver.SolverConfig(max_subdivisions=-1)
        with self.assertRaises(ParameterError):
            solver.SolverConfig(ramp_threshold=-1.0)

class TestScherkCell(unittest.TestCase):
    def test_rotation_symmetry_and_flat_center(self):
        u, report = solver.solve_scherk_cell(1.1, 1.0, 2.0, 4.0, (33, 17), CFG)
        assert report.converged
        assert np.max(np.abs(u.values - u.values[::-1, ::-1])) <= 1e-8
        gx, gy = u.gradient()
        i, j = 16, 8
        assert math.hypot(gx[i, j], gy[i, j]) <= 5 * max(u.ds, u.dt)
        x, y = u.xy
        assert abs(x[i, j]) < 1e-12 and abs(y[i, j]) < 1e-12

    def test_long_cell_center_value_coarse(self):
        u, report = solver.solve_scherk_cell(math.pi / 2, math.pi / 2, 20.0, 8.0, (201, 21), CFG)
        assert report.converged
        assert abs(u.values[100, 10] - 0.5 * math.log(2.0)) <= 0.03

    def test_tall_wide_cell_is_unique_and_bounded(self):
        alpha, w, L, h = math.pi / 2, 0.9 * math.pi, 40.0, 16.0
        u, report = solver.solve_scherk_cell(alpha, w, L, h, (161, 17), CFG)
        assert report.converged
        _, y = u.xy
        reaper = np.log(np.cos(y)) - math.log(math.cos(w / 2))
        assert np.min(u.values - reaper) >= -0.1
        assert np.max(u.values - (reaper + h)) <= 0.1
        assert u.values[80, 8] < h / 2
        high = u.with_values(np.full(u.shape, 3 * h))
        v, _ = solver.solve_scherk_cell(alpha, w, L, h, (161, 17), CFG, initial_guess=high)
        assert np.max(np.abs(u.values - v.values)) <= 1e-7

    def test_needs_positive_h(self):
        with self.assertRaises(ParameterError):
            solver.solve_scherk_cell(1.0, 1.0, 1.0, 0.0, (9, 9), CFG)

    @unittest.skipUnless(os.environ.get("SCHERKTOOLS_SLOW"), "set SCHERKTOOLS_SLOW=1 for long runs")
    def test_long_cell_center_value(self):
        u, _ = solver.solve_scherk_cell(math.pi / 2, math.pi / 2, 20.0, 8.0, (401, 41), CFG)
        assert abs(u.values[200, 20] - 0.5 * math.log(2.0)) <= 0.02

    @unittest.skipUnless(os.environ.get("SCHERKTOOLS_SLOW"), "set SCHERKTOOLS_SLOW=1 for long runs")
    def test_wide_rectangle_approaches_grim_reaper(self):
        d = geometry.make_rectangle(-12.0, 12.0, 0.0, math.pi)
        u, _ = solver.solve_dirichlet(d, geometry.BoundarySpec.constant(0.0, 0.0, 0.0, 0.0), (481, 41), CFG)
        i = 240
        j = np.arange(10, 31)
        y = u.t[j]
        diff = (u.values[i, j] - u.values[i, 20]) - np.log(np.sin(y))
        assert np.max(np.abs(diff)) <= 0.05
