import math
import os
import tempfile
import unittest

import numpy as np
from scipy.spatial.distance import pdist

from scherktools import analytic, geometry, surface
from scherktools.errors import MeshError

def piece(fn, domain, n_s=9, n_t=7, family=None):
    u = geometry.ScalarField.from_function(domain, n_s, n_t, fn)
    return u, surface.graph_to_mesh(u, family)

def bumpy(x, y):
    return np.sin(x) * np.cos(0.5 * y) + 0.1 * x * y

class TestGraphToMesh(unittest.TestCase):
    def test_counts(self):
        _, mesh = piece(lambda x, y: x * y, geometry.make_rectangle(0.0, 1.0, 0.0, 1.0), 3, 3)
        assert mesh.vertex_count == 9
        assert mesh.triangle_count == 8
        assert np.all(mesh.provenance == 0)

    def test_planar_field(self):
        _, mesh = piece(lambda x, y: 2.0 * x - y + 1.0, geometry.make_parallelogram(math.pi / 3, 1.0, 2.0))
        normals = mesh.triangle_normals()
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        expected = np.array([-2.0, 1.0, 1.0]) / math.sqrt(6.0)
        assert np.max(np.abs(normals - expected)) < 1e-12

    def test_upward_orientation(self):
        _, mesh = piece(bumpy, geometry.make_rectangle(-1.0, 1.0, 0.0, 2.0), 11, 11)
        assert np.all(mesh.triangle_normals()[:, 2] > 0)

class TestSchwarzReflection(unittest.TestCase):
    def setUp(self):
        self.domain = geometry.make_parallelogram(math.pi / 3, 1.5, 3.0)
        self.u, self.mesh = piece(bumpy, self.domain)
        self.axis = tuple(self.domain.corners[1])

    def test_double_reflection(self):
        once = surface.schwarz_reflect(self.mesh, self.axis)
        twice = surface.schwarz_reflect(once, self.axis)
        assert twice is not self.mesh
        assert np.max(np.abs(once.vertices[:, :2] - self.mesh.vertices[:, :2])) > 0.1
        assert np.max(np.abs(twice.vertices - self.mesh.vertices)) < 1e-12
        assert np.array_equal(twice.triangles, self.mesh.triangles)
        copy = twice.copies[0]
        assert copy.epsilon == 1
        assert np.max(np.abs(copy.apply(self.mesh.vertices[:, :2]) - self.mesh.vertices[:, :2])) < 1e-12

    def test_reflection_about_other_axis_is_not_undone(self):
        once = surface.schwarz_reflect(self.mesh, self.axis)
        other = tuple(2.0 * np.asarray(self.axis) - np.asarray(self.domain.corners[0]))
        twice = surface.schwarz_reflect(once, other)
        shift = 2.0 * (np.asarray(other) - np.asarray(self.axis))
        assert np.max(np.abs(twice.vertices[:, :2] - (self.mesh.vertices[:, :2] + shift))) < 1e-12

    def test_isometry(self):
        once = surface.schwarz_reflect(self.mesh, self.axis)
        assert np.max(np.abs(pdist(once.vertices) - pdist(self.mesh.vertices))) < 1e-12
        assert np.array_equal(once.vertices[:, 2], self.mesh.vertices[:, 2])
        assert once.copies[0].epsilon == -1

    def test_axis_on_edge(self):
        bl, br = self.domain.corners[0], self.domain.corners[1]
        midpoint = tuple(0.5 * (np.asarray(bl) + np.asarray(br)))
        once = surface.schwarz_reflect(self.mesh, midpoint)
        assert once.axis == midpoint

    def test_axis_off_boundary(self):
        with self.assertRaises(MeshError):
            surface.schwarz_reflect(self.mesh, self.domain.center)

    def test_reflected_field_residual(self):
        reflected = surface.reflect_field(self.u, self.axis)
        r = analytic.translator_residual(self.u).values
        r_reflected = analytic.translator_residual(reflected).values
        assert np.max(np.abs(r_reflected - r[::-1, ::-1])) < 1e-10 * max(1.0, np.max(np.abs(r)))
        x, y = reflected.xy
        ox, oy = self.u.xy
        assert np.max(np.abs(x - (2 * self.axis[0] - ox[::-1, ::-1]))) < 1e-12
        assert np.max(np.abs(y - (2 * self.axis[1] - oy[::-1, ::-1]))) < 1e-12

class TestAssembly(unittest.TestCase):
    def test_scherk_copies(self):
        domain = geometry.make_parallelogram(math.pi / 3, 1.0, 2.0, center_at_origin=True)
        _, mesh = piece(bumpy, domain, family=surface.SCHERK)
        full = surface.assemble_periodic(mesh, surface.SCHERK, (1, 1))
        assert len(full.copies) == 5
        assert full.vertex_count == 5 * mesh.vertex_count
        assert full.triangle_count == 5 * mesh.triangle_count
        assert len(full.periods) == 2
        defect, matched = surface.period_defect(full, full.periods[0])
        assert matched == 2
        assert defect < 1e-10
        assert surface.seam_conflicts(full) == 0

    def test_scherkenoid_period(self):
        domain = geometry.make_rectangle(0.0, 6.0, 0.0, math.pi)
        _, mesh = piece(bumpy, domain, family=surface.SCHERKENOID)
        full = surface.assemble_periodic(mesh, surface.SCHERKENOID, (2, 1))
        assert len(full.copies) == 4
        assert np.allclose(full.periods[0], (0.0, 2 * math.pi, 0.0))
        defect, matched = surface.period_defect(full, full.periods[0])
        assert matched == 2
        assert defect < 1e-10
        assert surface.seam_conflicts(full) == 0

    def test_helicoid_composition(self):
        w, x_hat = math.pi, 0.75
        domain = geometry.make_truncated_strip(-3.0, 3.0, w)
        _, mesh = piece(bumpy, domain, 13, 7, family=surface.HELICOID)
        about_top = surface.schwarz_reflect(mesh, (x_hat, w))
        about_origin = surface.schwarz_reflect(mesh, (0.0, 0.0))
        shift = np.array([2 * x_hat, 2 * w, 0.0])
        assert np.max(np.abs(about_top.vertices - (about_origin.vertices + shift))) < 1e-12
        full = surface.assemble_periodic(mesh, surface.HELICOID, (2, 1), x_hat=x_hat)
        assert np.allclose(full.periods[0], shift)
        defect, matched = surface.period_defect(full, full.periods[0])
        assert matched == 2
        assert defect < 1e-10

    def test_helicoid_needs_x_hat(self):
        domain = geometry.make_truncated_strip(-3.0, 3.0, math.pi)
        _, mesh = piece(bumpy, domain, family=surface.HELICOID)
        with self.assertRaises(MeshError):
            surface.assemble_periodic(mesh, surface.HELICOID)

    def test_pitchfork_pair(self):
        domain = geometry.make_truncated_strip(-4.0, 4.0, math.pi)
        _, mesh = piece(bumpy, domain, family=surface.PITCHFORK)
        full = surface.assemble_periodic(mesh, surface.PITCHFORK)
        assert len(full.copies) == 2
        assert full.periods == []
        first, second = full.copy_vertices(0), full.copy_vertices(1)
        assert np.array_equal(second[:, :2], -first[:, :2])

    def test_family_mismatch(self):
        domain = geometry.make_parallelogram(math.pi / 2, 1.0, 1.0)
        _, mesh = piece(bumpy, domain, family=surface.SCHERK)
        with self.assertRaises(MeshError):
            surface.assemble_periodic(mesh, surface.SCHERKENOID)
        with self.assertRaises(MeshError):
            surface.assemble_periodic(mesh, "catenoid")

    def test_bad_triangles(self):
        with self.assertRaises(MeshError):
            surface.SurfaceMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))

    def test_seam_conflict_detected(self):
        vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        mesh = surface.SurfaceMesh(vertices, np.zeros((0, 3)), provenance=np.array([0, 0, 1]))
        assert surface.seam_conflicts(mesh) == 1

class TestExport(unittest.TestCase):
    def test_single_triangle_obj(self):
        mesh = surface.SurfaceMesh(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.5], [0.0, 1.0, 0.25]]), np.array([[0, 1, 2]]))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "triangle.obj")
            surface.export_mesh(mesh, path)
            with open(path) as f:
                lines = f.read().splitlines()
        assert [l.split()[0] for l in lines] == ["v", "v", "v", "f"]
        assert lines[-1] == "f 1 2 3"

    def test_round_trip_and_determinism(self):
        domain = geometry.make_parallelogram(math.pi / 4, 1.0, 2.0)
        _, mesh = piece(lambda x, y: np.exp(x) * np.sin(y) / 3.0, domain)
        with tempfile.TemporaryDirectory() as tmp:
            for fmt in ("obj", "ply"):
                first = os.path.join(tmp, "a." + fmt)
                second = os.path.join(tmp, "b." + fmt)
                surface.export_mesh(mesh, first, fmt)
                surface.export_mesh(mesh, second, fmt)
                with open(first, "rb") as f, open(second, "rb") as g:
                    assert f.read() == g.read()
            back = surface.read_obj(os.path.join(tmp, "a.obj"))
        assert np.max(np.abs(back.vertices - mesh.vertices)) <= 1e-12
        assert np.array_equal(back.triangles, mesh.triangles)
