import json
import math
import os
import tempfile
import unittest

import numpy as np

from scherktools import config, console_app, geometry
from scherktools.formatter import FieldCsv_Formatter, read_field_csv, read_obj

def run(*argv):
    return console_app.ScherktoolsConsoleApp().run(["-q" if a == "QUIET" else a for a in argv])

def load_rows(path):
    with open(path) as f:
        lines = f.read().splitlines()
    return lines[0].split(","), np.array([[float(c) for c in l.split(",")] for l in lines[1:]])

class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write_field(self, name, fn, x_lo, x_hi, y_lo, y_hi, n_s, n_t):
        u = geometry.ScalarField.from_function(geometry.make_rectangle(x_lo, x_hi, y_lo, y_hi), n_s, n_t, fn)
        with open(self.path(name), "w") as f:
            f.write(FieldCsv_Formatter().to_destination(u))
        return self.path(name)

class TestParsers(unittest.TestCase):
    def test_numbers(self):
        assert config.parse_angle("pi/2") == math.pi / 2
        assert config.parse_number("2*pi") == 2 * math.pi
        assert config.parse_number("0.9pi") == 0.9 * math.pi
        assert config.parse_number("1.5") == 1.5
        with self.assertRaises(config.ParameterError):
            config.parse_number("two")

    def test_grid_and_lists(self):
        assert config.parse_grid("129x65") == (129, 65)
        assert config.parse_list("4,6,8") == [4.0, 6.0, 8.0]
        assert config.parse_copies("2x1") == (2, 1)
        with self.assertRaises(config.ParameterError):
            config.parse_grid("2x65")

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.toml")
            with open(path, "w") as f:
                f.write('alpha = "pi/2"\nw = 1.0\nh-list = [3, 4, 5]\ngrid = "33x17"\n')
            cfg = config.build_run_config("scherk", {"w": 1.25}, path)
        assert cfg.alpha == math.pi / 2
        assert cfg.w == 1.25
        assert cfg.h_list == [3.0, 4.0, 5.0]
        assert cfg.grid_dims == (33, 17)
        assert cfg.solver_config().tol == 1e-10

    def test_nested_table_rejected(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.toml")
            with open(path, "w") as f:
                f.write("[scherk]\nw = 1.0\n")
            with self.assertRaises(config.SchemaError):
                config.build_run_config("scherk", {}, path)

    def test_validation(self):
        with self.assertRaises(config.ParameterError):
            config.build_run_config("scherk", {"alpha": 0.0, "w": 1.0})
        with self.assertRaises(config.ParameterError):
            config.build_run_config("scherk", {"alpha": 1.0, "w": 1.0, "h_list": [4.0, 3.0, 5.0]})
        with self.assertRaises(config.ParameterError):
            config.build_run_config("scherkenoid", {"alpha": math.pi / 2, "w": math.pi, "trunc": 2.0})
        with self.assertRaises(config.ParameterError):
            config.build_run_config("pitchfork", {"w": math.pi, "trunc": 5.0})
        with self.assertRaises(config.ParameterError):
            config.build_run_config("helicoid", {"w": 4.0, "trunc": 8.0})

class TestExact(CliTestCase):
    def test_grim_reaper(self):
        out = self.path("gr.csv")
        assert run("exact", "--surface", "grim-reaper", "--n", "64", "--out", out, "QUIET") == 0
        header, rows = load_rows(out)
        assert header == ["x", "y", "u", "u_x"]
        assert rows.shape == (64 * 64, 4)
        assert abs(rows[0, 1] - math.pi / 65) < 1e-14
        assert np.max(np.abs(rows[:, 2] - np.log(np.sin(rows[:, 1])))) < 1e-14

    def test_tilted_reaper_slope(self):
        out = self.path("tr.csv")
        assert run("exact", "--surface", "tilted-reaper", "--w", "6.2832", "--sign", "-1", "--n", "16", "--out", out, "QUIET") == 0
        _, rows = load_rows(out)
        expected = -math.sqrt((6.2832 / math.pi) ** 2 - 1.0)
        assert np.max(np.abs(rows[:, 3] - expected)) < 1e-12
        assert abs(expected + math.sqrt(3.0)) < 1e-4

    def test_slope_column_is_differentiated(self):
        out = self.path("curved.csv")
        assert run("exact", "--surface", "grim-reaper", "--n", "16", "--out", out, "QUIET") == 0
        _, rows = load_rows(out)
        assert np.all(rows[:, 3] == 0.0)
        out = self.path("tilted.csv")
        assert run("exact", "--surface", "tilted-reaper", "--w", "2*pi", "--sign", "1", "--n", "16", "--out", out, "QUIET") == 0
        grid = load_rows(out)[1].reshape(16, 16, 4)
        x, u, u_x = grid[:, :, 0], grid[:, :, 2], grid[:, :, 3]
        central = (u[2:] - u[:-2]) / (x[2:] - x[:-2])
        assert np.max(np.abs(u_x[1:-1] - central)) < 1e-9
        assert np.max(np.abs(u_x - math.sqrt(3.0))) < 1e-12

    def test_narrow_tilted_reaper(self):
        out = self.path("bad.csv")
        assert run("exact", "--surface", "tilted-reaper", "--w", "3.0", "--out", out, "QUIET") == 2
        assert not os.path.exists(out)

    def test_bad_grid_flag(self):
        with self.assertRaises(SystemExit) as e:
            run("scherk", "--alpha", "pi/2", "--w", "1", "--grid", "big", "QUIET")
        assert e.exception.code == 2

    def test_config_file_and_override(self):
        path = self.path("exact.toml")
        with open(path, "w") as f:
            f.write('surface = "tilted-reaper"\nw = "2*pi"\nn = 8\n')
        out = self.path("cfg.csv")
        assert run("exact", "--config", path, "--n", "5", "--out", out, "QUIET") == 0
        _, rows = load_rows(out)
        assert rows.shape == (25, 4)

    def test_unknown_config_key(self):
        path = self.path("bad.toml")
        with open(path, "w") as f:
            f.write("colour = 3\n")
        assert run("exact", "--config", path, "--out", self.path("x.csv"), "QUIET") == 2

    def test_byte_identical_outputs(self):
        first, second = self.path("a.csv"), self.path("b.csv")
        for out in (first, second):
            assert run("exact", "--surface", "grim-reaper", "--n", "12", "--format", "ply", "--out", out, "QUIET") == 0
        for suffix in (".csv", ".ply"):
            with open(first.replace(".csv", suffix), "rb") as f, open(second.replace(".csv", suffix), "rb") as g:
                assert f.read() == g.read()

class TestDiagnose(CliTestCase):
    def report(self, out):
        with open(out) as f:
            return json.load(f)

    def test_residual_refinement(self):
        field = self.write_field("gr.csv", lambda x, y: np.log(np.sin(y)), 1.0, 2.0, math.pi / 4, 3 * math.pi / 4, 129, 129)
        out = self.path("gr.json")
        assert run("diagnose", field, "--check", "residual-refinement", "--out", out, "QUIET") == 0
        report = self.report(out)
        assert report["schema_version"] == 1
        assert report["passed"] is True
        assert report["checks"]["residual-refinement"]["ratio"] <= 0.30

    def test_morse_saddle(self):
        field = self.write_field("saddle.csv", lambda x, y: x * x - y * y, -1.0, 1.0, -1.0, 1.0, 101, 101)
        out = self.path("saddle.json")
        assert run("diagnose", field, "--check", "morse", "--level", "inf", "--out", out, "QUIET") == 0
        morse = self.report(out)["checks"]["morse"]
        assert morse["N"] == 1
        assert morse["passed"] is True

    def test_failed_check(self):
        field = self.write_field("bowl.csv", lambda x, y: x * x + y * y, -1.0, 1.0, -1.0, 1.0, 21, 21)
        out = self.path("bowl.json")
        assert run("diagnose", field, "--check", "curvature", "--out", out, "QUIET") == 4
        assert self.report(out)["passed"] is False

    def test_schema_error(self):
        bad = self.path("bad.csv")
        with open(bad, "w") as f:
            f.write("a,b\n1,2\n")
        out = self.path("bad.json")
        assert run("diagnose", bad, "--out", out, "QUIET") == 2
        assert not os.path.exists(out)

class TestMesh(CliTestCase):
    def test_plain_obj(self):
        field = self.write_field("piece.csv", lambda x, y: x * y, 0.0, 1.0, 0.0, 1.0, 5, 4)
        assert run("mesh", field, "QUIET") == 0
        mesh = read_obj(self.path("piece.obj"))
        assert mesh.vertex_count == 20
        assert mesh.triangle_count == 2 * 4 * 3
        u = read_field_csv(field)
        assert np.array_equal(mesh.vertices[:, 2], u.values.ravel())

    def test_scherk_assembly(self):
        field = self.write_field("cell.csv", lambda x, y: np.sin(x) * y, -1.0, 1.0, -0.5, 0.5, 9, 5)
        out = self.path("cell.obj")
        assert run("mesh", field, "--family", "scherk", "--copies", "1x1", "--out", out, "QUIET") == 0
        assert read_obj(out).vertex_count == 5 * 45

    def test_helicoid_needs_axis(self):
        field = self.write_field("heli.csv", lambda x, y: x * y, -2.0, 2.0, 0.0, 1.0, 9, 5)
        assert run("mesh", field, "--family", "helicoid-like", "QUIET") == 2
        assert not os.path.exists(self.path("heli.obj"))

class TestScherk(CliTestCase):
    def test_quarter_width_cell(self):
        out = self.path("scherk.csv")
        code = run("scherk", "--alpha", "pi/2", "--w", "pi/2", "--h-list", "3,4,5", "--grid", "33x17",
                   "--format", "obj", "--out", out, "QUIET")
        assert code == 0
        with open(self.path("scherk.json")) as f:
            report = json.load(f)
        assert math.pi / 2 < report["L_estimate"] < 7.3188
        assert report["h_schedule"] == [3.0, 4.0, 5.0]
        assert len(report["periods"]) == 2
        assert os.path.exists(out)
        assert os.path.exists(self.path("scherk.obj"))

    def test_invalid_alpha_writes_nothing(self):
        out = self.path("none.csv")
        assert run("scherk", "--alpha", "4", "--w", "1", "--out", out, "QUIET") == 2
        assert os.listdir(self.tmp) == []

class TestFamilyCommands(CliTestCase):
    def report(self, name):
        with open(self.path(name)) as f:
            return json.load(f)

    def test_scherkenoid_coarse(self):
        out = self.path("noid.csv")
        assert run("scherkenoid", "--alpha", "pi/2", "--w", "2*pi", "--h", "10", "--trunc", "30",
                   "--grid", "121x17", "--out", out, "QUIET") == 0
        report = self.report("noid.json")
        assert report["solve"]["converged"] is True
        assert abs(report["total_curvature_target"] - math.pi / 3) < 1e-12
        assert report["asymptote_right"]["slope"] < 0
        assert os.path.exists(self.path("noid.obj"))

    def test_pitchfork_coarse(self):
        out = self.path("fork.csv")
        assert run("pitchfork", "--w", "2*pi", "--trunc", "20", "--H", "10", "--grid", "161x17",
                   "--out", out, "QUIET") == 0
        report = self.report("fork.json")
        assert report["solve"]["converged"] is True
        assert report["asymptote_right"]["theoretical_slope"] < 0
        header, rows = load_rows(out)
        assert header[:3] == ["x", "y", "u"]
        assert rows.shape[0] == 161 * 17

@unittest.skipUnless(os.environ.get("SCHERKTOOLS_SLOW"), "set SCHERKTOOLS_SLOW=1 for full-resolution pipelines")
class TestSlowPipelines(CliTestCase):
    def test_width_sweep_is_increasing(self):
        out = self.path("sweep.csv")
        assert run("scherk", "--alpha", "pi/2", "--w-list", "0.3*pi,0.5*pi,0.7*pi", "--h-list", "4,6,8",
                   "--grid", "65x33", "--jobs", "3", "--out", out, "QUIET") == 0
        header, rows = load_rows(out)
        assert header == ["w", "L_estimate", "L_increment", "mismatch"]
        assert np.all(np.diff(rows[:, 1]) > 0)

    def test_helicoid_axis_offset(self):
        out = self.path("heli.csv")
        assert run("helicoid", "--w", "pi/2", "--trunc", "6", "--H", "6", "--grid", "121x21", "--out", out, "QUIET") == 0
        with open(self.path("heli.json")) as f:
            report = json.load(f)
        assert report["x_hat"] > 0
        assert report["sweeps"] <= 20
