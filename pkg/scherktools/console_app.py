#!/usr/bin/env python3

#
# See the LICENSE file
#

import argparse
import functools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from scherktools import analytic
from scherktools import config
from scherktools import diagnostics
from scherktools import families
from scherktools import geometry
from scherktools import surface
from scherktools.errors import (BracketError, DomainError, FixedPointDivergence, GeometryError, GridError,
                                MeshError, MonotonicityError, NonConvergence, NonRegularLevel, ParameterError,
                                SchemaError, ScherkError, UnresolvedCritical, WindowTooSmall)
from scherktools.formatter import (FieldCsv_Formatter, JsonReport_Formatter, csv_table, mesh_formatter, read_field_csv,
                                   write_atomic)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4

USAGE_ERRORS = (ParameterError, SchemaError, DomainError, GeometryError, GridError, MeshError, WindowTooSmall, OSError)
SOLVER_ERRORS = (NonConvergence, BracketError, FixedPointDivergence, MonotonicityError)
CHECK_ERRORS = (GridError, WindowTooSmall, NonRegularLevel, UnresolvedCritical, ParameterError)

# Flags that never end up in RunConfig
_CONTROL = ("command", "func", "config", "log_level")

def _scherk_entry(job):
    alpha, w, h_list, grid, solver_cfg = job
    result = families.estimate_scherk(alpha, w, h_list, grid, solver_cfg)
    return (w, result.L_estimate, result.increments[-1], result.report.mismatch)

class ScherktoolsConsoleApp():
    def __init__(self):
        self.argparse = self.build_argparser()
        self.json_formatter = JsonReport_Formatter()

    def run(self, argv=None):
        args = self.argparse.parse_args(argv)
        logging.basicConfig(
            level=args.log_level,
            format='%(asctime)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        overrides = {k: v for k, v in vars(args).items() if k not in _CONTROL}
        try:
            cfg = config.build_run_config(args.command, overrides, args.config)
            artifacts, passed = args.func(cfg)
            self.write_artifacts(artifacts)
        except SOLVER_ERRORS as e:
            log.error("%s", e)
            return EXIT_SOLVER
        except USAGE_ERRORS as e:
            log.error("%s", e)
            return EXIT_USAGE
        except ScherkError as e:
            log.error("%s", e)
            return EXIT_SOLVER
        return EXIT_OK if passed else EXIT_CHECK

    def _common(self, parser, grid=True):
        parser.add_argument("--config", action="store", default=None, help="Flat TOML file; explicit flags win over its values")
        parser.add_argument("--out", action="store", help="Output path; reports and meshes go next to it with their own suffix")
        parser.add_argument("--tol", action="store", type=config.parse_number, help="Newton tolerance on the residual sup-norm (default: 1e-10)")
        parser.add_argument("--max-iter", action="store", type=int, dest="max_iter", help="Newton iteration cap (default: 50)")
        parser.add_argument("--linear-solver", action="store", dest="linear_solver", choices=("direct", "bicgstab"))
        if grid:
            parser.add_argument("--grid", action="store", type=config.parse_grid, help="Format NxM, example: 129x65")
        parser.add_argument("-v", "--verbose", action="store_const", dest="log_level", const=logging.DEBUG, default=logging.INFO)
        parser.add_argument("-q", "--quiet", action="store_const", dest="log_level", const=logging.WARNING)

    def build_argparser(self):
        parser = argparse.ArgumentParser(description="Scherk-like translators for mean curvature flow")

        subparsers = parser.add_subparsers(dest="command", help="Sub-commands help")
        subparsers.required = True
        sub = functools.partial(subparsers.add_parser, argument_default=argparse.SUPPRESS)

        # Closed-form surfaces
        exact = sub("exact", help="Sample a closed-form translator on a grid")
        exact.add_argument("--surface", action="store", choices=config.SURFACES)
        exact.add_argument("--w", action="store", type=config.parse_number, help="Strip width, examples: 6.2832 - 2*pi")
        exact.add_argument("--L", action="store", type=config.parse_number, help="Length of the sampled window (default: w)")
        exact.add_argument("--n", action="store", type=int, help="Samples per direction (default: 64)")
        exact.add_argument("--sign", action="store", type=int, choices=(-1, 1))
        exact.add_argument("--format", action="store", choices=config.MESH_FORMATS, help="Also export the graph as a mesh")
        self._common(exact, grid=False)
        exact.set_defaults(func=self.command_exact)

        # Scherk translators
        scherk = sub("scherk", help="Estimate L(alpha, w) and solve the Scherk cell")
        scherk.add_argument("--alpha", action="store", type=config.parse_angle, help="Examples: pi/2 - 1.0472")
        scherk.add_argument("--w", action="store", type=config.parse_number)
        scherk.add_argument("--w-list", action="store", type=config.parse_list, dest="w_list", help="Sweep over widths, example: 0.3*pi,0.5*pi")
        scherk.add_argument("--h-list", action="store", type=config.parse_list, dest="h_list", help="Boundary heights, example: 4,6,8")
        scherk.add_argument("--jobs", action="store", type=int, help="Concurrent sweep entries (default: 1)")
        scherk.add_argument("--format", action="store", choices=config.MESH_FORMATS)
        scherk.add_argument("--copies", action="store", type=config.parse_copies, help="Format N1xN2 (default: 1x1)")
        self._common(scherk)
        scherk.set_defaults(func=self.command_scherk)

        # Scherkenoids
        scherkenoid = sub("scherkenoid", help="Solve a truncated scherkenoid piece")
        scherkenoid.add_argument("--alpha", action="store", type=config.parse_angle)
        scherkenoid.add_argument("--w", action="store", type=config.parse_number)
        scherkenoid.add_argument("--h", action="store", type=config.parse_number, help="Left edge height (default: 8)")
        scherkenoid.add_argument("--trunc", action="store", type=config.parse_number, help="Strip length c")
        scherkenoid.add_argument("--right-edge", action="store", dest="right_edge", choices=config.RIGHT_EDGES)
        scherkenoid.add_argument("--format", action="store", choices=config.MESH_FORMATS)
        scherkenoid.add_argument("--copies", action="store", type=config.parse_copies)
        self._common(scherkenoid)
        scherkenoid.set_defaults(func=self.command_scherkenoid)

        # Helicoid-like translators
        helicoid = sub("helicoid", help="Solve a helicoid-like piece and its axis offset")
        helicoid.add_argument("--w", action="store", type=config.parse_number)
        helicoid.add_argument("--trunc", action="store", type=config.parse_number, help="Half-length a of the rectangle")
        helicoid.add_argument("--H", action="store", type=config.parse_number, help="Surrogate for infinite boundary values (default: 8)")
        helicoid.add_argument("--format", action="store", choices=config.MESH_FORMATS)
        helicoid.add_argument("--copies", action="store", type=config.parse_copies)
        self._common(helicoid)
        helicoid.set_defaults(func=self.command_helicoid)

        # Pitchforks
        pitchfork = sub("pitchfork", help="Solve a truncated pitchfork piece")
        pitchfork.add_argument("--w", action="store", type=config.parse_number)
        pitchfork.add_argument("--trunc", action="store", type=config.parse_number, help="Half-length a of the rectangle")
        pitchfork.add_argument("--H", action="store", type=config.parse_number)
        pitchfork.add_argument("--format", action="store", choices=config.MESH_FORMATS)
        self._common(pitchfork)
        pitchfork.set_defaults(func=self.command_pitchfork)

        # Diagnostics on a stored field
        diagnose = sub("diagnose", help="Run checks on a field CSV")
        diagnose.add_argument("input", action="store", help="Field CSV with header x,y,u")
        diagnose.add_argument("--check", action="store", nargs="+", choices=config.CHECKS)
        diagnose.add_argument("--level", action="store", type=config.parse_number, help="Sublevel for the morse check (default: inf)")
        diagnose.add_argument("--w", action="store", type=config.parse_number)
        self._common(diagnose, grid=False)
        diagnose.set_defaults(func=self.command_diagnose)

        # Mesh export
        mesh = sub("mesh", help="Export a field CSV as an OBJ or PLY mesh")
        mesh.add_argument("input", action="store", help="Field CSV with header x,y,u")
        mesh.add_argument("--family", action="store", choices=surface.FAMILIES, help="Assemble the periodic surface of this family")
        mesh.add_argument("--copies", action="store", type=config.parse_copies)
        mesh.add_argument("--x-hat", action="store", type=config.parse_number, dest="x_hat", help="Axis offset of a helicoid-like piece")
        mesh.add_argument("--format", action="store", choices=config.MESH_FORMATS)
        self._common(mesh, grid=False)
        mesh.set_defaults(func=self.command_mesh)

        return parser

    #
    # Artifacts are (path, data) pairs. A None path means stdout.
    #
    def write_artifacts(self, artifacts):
        for path, data in artifacts:
            if path is None:
                sys.stdout.write(data if isinstance(data, str) else data.decode("ascii"))
            else:
                write_atomic(path, data)
                log.info("wrote %s", path)

    def _paths(self, cfg, suffix):
        if cfg.out is None:
            return None
        return os.path.splitext(cfg.out)[0] + suffix

    def _field_artifacts(self, cfg, u, report, mesh=None):
        artifacts = [(self._paths(cfg, ".json"), self.json_formatter.to_destination(report))]
        if cfg.out is not None:
            artifacts.append((self._paths(cfg, ".csv"), FieldCsv_Formatter().to_destination(u)))
            if mesh is not None:
                fmt = cfg.format or "obj"
                artifacts.append((self._paths(cfg, "." + fmt), mesh_formatter(fmt).to_destination(mesh)))
        return artifacts

    def command_exact(self, cfg):
        n = cfg.n
        if cfg.surface == "grim-reaper":
            w = math.pi
            fn = analytic.grim_reaper
        else:
            params = analytic.TiltedReaperParams(cfg.w, sign=cfg.sign)
            w = cfg.w
            fn = functools.partial(analytic.tilted_reaper, params)
        L = cfg.L if cfg.L is not None else w

        # rows sit at y_j = w (j + 1) / (n + 1), strictly inside the strip
        domain = geometry.make_rectangle(0.0, L, w / (n + 1), w * n / (n + 1))
        u = geometry.ScalarField.from_function(domain, n, n, fn)
        u_x, _ = u.gradient()
        csv = FieldCsv_Formatter(("u_x",)).to_destination(u, {"u_x": u_x})
        artifacts = [(cfg.out, csv)]
        if cfg.format is not None:
            mesh = surface.graph_to_mesh(u)
            path = self._paths(cfg, "." + cfg.format) or "exact." + cfg.format
            artifacts.append((path, mesh_formatter(cfg.format).to_destination(mesh)))
        return artifacts, True

    def command_scherk(self, cfg):
        grid = cfg.grid_dims
        solver_cfg = cfg.solver_config()
        if cfg.w_list is not None:
            return self._scherk_sweep(cfg, grid, solver_cfg), True

        result = families.estimate_scherk(cfg.alpha, cfg.w, cfg.h_list, grid, solver_cfg)
        report = result.to_dict()
        report["grid"] = list(grid)
        report["curvature"] = diagnostics.curvature_summary(result.field)
        mesh = None
        if cfg.format is not None:
            piece = surface.graph_to_mesh(result.field, surface.SCHERK)
            mesh = surface.assemble_periodic(piece, surface.SCHERK, cfg.copies)
            report["periods"] = [list(p) for p in mesh.periods]
        return self._field_artifacts(cfg, result.field, report, mesh), True

    def _scherk_sweep(self, cfg, grid, solver_cfg):
        jobs = [(cfg.alpha, w, cfg.h_list, grid, solver_cfg) for w in cfg.w_list]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as executor:
                rows = list(executor.map(_scherk_entry, jobs))
        else:
            rows = [_scherk_entry(job) for job in jobs]
        L = [r[1] for r in rows]
        if any(b <= a for a, b in zip(L, L[1:])):
            log.warning("L_estimate is not strictly increasing over the sweep: %r", L)
        columns = ("w", "L_estimate", "L_increment", "mismatch")
        return [(cfg.out, csv_table(columns, np.array(rows, dtype=float)))]

    def _asymptote(self, u, side, model, w):
        try:
            return diagnostics.asymptote_fit(u, side, model, w).to_dict()
        except WindowTooSmall as e:
            log.warning("%s", e)
            return {"error": str(e)}

    def command_scherkenoid(self, cfg):
        run = families.solve_scherkenoid(cfg.alpha, cfg.w, cfg.trunc, cfg.h, cfg.grid_dims, cfg.solver_config(),
                                         right_edge=cfg.right_edge, full_output=True)
        u = run.field
        report = {"alpha": cfg.alpha, "w": cfg.w, "c": cfg.trunc, "h": cfg.h, "grid": list(cfg.grid_dims),
                  "right_edge": cfg.right_edge, "reaper_offset": run.offset, "solve": run.report.to_dict(),
                  "curvature": diagnostics.curvature_summary(u),
                  "total_curvature_target": analytic.gauss_region_area(cfg.w),
                  "gauss_image": diagnostics.gauss_image_check(u, cfg.w)._asdict(),
                  "slope_bound_violation": diagnostics.slope_bound_violation(u, cfg.w),
                  "asymptote_right": self._asymptote(u, "right", diagnostics.TILTED_REAPER, cfg.w)}
        piece = surface.graph_to_mesh(u, surface.SCHERKENOID)
        mesh = surface.assemble_periodic(piece, surface.SCHERKENOID, cfg.copies)
        report["periods"] = [list(p) for p in mesh.periods]
        return self._field_artifacts(cfg, u, report, mesh), True

    def command_helicoid(self, cfg):
        result = families.helicoid_fixed_point(cfg.w, cfg.trunc, cfg.H, cfg.grid_dims, cfg.solver_config())
        u = result.field
        report = {"w": cfg.w, "a": cfg.trunc, "H": cfg.H, "grid": list(cfg.grid_dims),
                  "solve": result.report.to_dict(),
                  "curvature": diagnostics.curvature_summary(u),
                  "asymptote_left": self._asymptote(u, "left", diagnostics.PLANE, None),
                  "asymptote_right": self._asymptote(u, "right", diagnostics.PLANE, None)}
        report.update(result.to_dict())
        piece = surface.graph_to_mesh(u, surface.HELICOID)
        mesh = surface.assemble_periodic(piece, surface.HELICOID, cfg.copies, x_hat=result.x_hat)
        report["periods"] = [list(p) for p in mesh.periods]
        return self._field_artifacts(cfg, u, report, mesh), True

    def command_pitchfork(self, cfg):
        run = families.solve_pitchfork(cfg.w, cfg.trunc, cfg.H, cfg.grid_dims, cfg.solver_config(), full_output=True)
        u = run.field
        report = {"w": cfg.w, "a": cfg.trunc, "H": cfg.H, "grid": list(cfg.grid_dims),
                  "reaper_offset": run.offset, "solve": run.report.to_dict(),
                  "curvature": diagnostics.curvature_summary(u),
                  "total_curvature_target": analytic.gauss_region_area(cfg.w),
                  "asymptote_right": self._asymptote(u, "right", diagnostics.TILTED_REAPER, cfg.w)}
        piece = surface.graph_to_mesh(u, surface.PITCHFORK)
        mesh = surface.assemble_periodic(piece, surface.PITCHFORK)
        return self._field_artifacts(cfg, u, report, mesh), True

    def command_diagnose(self, cfg):
        u = read_field_csv(cfg.input)
        checks = {}
        for name in cfg.check:
            try:
                checks[name] = self._run_check(name, u, cfg)
            except CHECK_ERRORS as e:
                checks[name] = {"passed": False, "error": "%s: %s" % (type(e).__name__, e)}
            log.info("check %s: %s", name, "pass" if checks[name]["passed"] else "FAIL")
        passed = all(c["passed"] for c in checks.values())
        report = {"input": os.path.basename(cfg.input), "grid": list(u.shape), "checks": checks, "passed": passed}
        return [(cfg.out, self.json_formatter.to_destination(report))], passed

    def _run_check(self, name, u, cfg):
        if name == "residual-refinement":
            return diagnostics.residual_refinement(u)._asdict()
        if name == "morse":
            count = diagnostics.morse_count_check(u, cfg.level)
            out = count._asdict()
            out["passed"] = count.identity_holds
            return out
        if name == "gauss-image":
            return diagnostics.gauss_image_check(u, cfg.w)._asdict()
        if name == "curvature":
            out = diagnostics.curvature_summary(u)
            out["passed"] = out["negative_fraction"] == 1.0
            return out
        fit = diagnostics.asymptote_fit(u, "right", diagnostics.TILTED_REAPER, cfg.w)
        out = fit.to_dict()
        out["passed"] = abs(fit.slope - fit.theoretical_slope) <= 0.05
        return out

    def command_mesh(self, cfg):
        u = read_field_csv(cfg.input)
        piece = surface.graph_to_mesh(u, cfg.family)
        mesh = piece
        if cfg.family is not None:
            mesh = surface.assemble_periodic(piece, cfg.family, cfg.copies, x_hat=cfg.x_hat)
        fmt = cfg.format or "obj"
        path = self._paths(cfg, "." + fmt) or os.path.splitext(cfg.input)[0] + "." + fmt
        return [(path, mesh_formatter(fmt).to_destination(mesh))], True

def main(argv=None):
    app = ScherktoolsConsoleApp()
    try:
        code = app.run(argv)
    except KeyboardInterrupt:
        print("quitting...", file=sys.stderr)
        code = 130
    sys.exit(code)

if __name__ == "__main__":
    main()
