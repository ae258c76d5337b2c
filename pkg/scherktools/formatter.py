#
# See the LICENSE file
#

import io
import json
import math
import os
import tempfile

import numpy as np

from .errors import SchemaError
from .geometry import PARALLELOGRAM, PlanarDomain, ScalarField
from .surface import SurfaceMesh

SCHEMA_VERSION = 1
FIELD_COLUMNS = ("x", "y", "u")

def csv_table(columns, rows):
    out = io.StringIO()
    np.savetxt(out, rows, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
    return out.getvalue()

class Formatter:
    def __init__(self):
        pass

    def from_source(self, data):
        raise Exception("this class cannot be used")

    def to_destination(self, data):
        raise Exception("this class cannot be used")

#
# Field CSV: header then one row per node, row-major with the s index outer
# and the t index inner. Extra columns follow x, y, u.
#
class FieldCsv_Formatter(Formatter):
    def __init__(self, extra_columns=()):
        self.columns = FIELD_COLUMNS + tuple(extra_columns)

    def to_destination(self, data, extra=None):
        x, y = data.xy
        columns = [x.ravel(), y.ravel(), data.values.ravel()]
        for name in self.columns[len(FIELD_COLUMNS):]:
            columns.append(np.asarray(extra[name], dtype=float).ravel())
        return csv_table(self.columns, np.column_stack(columns))

    def from_source(self, data):
        lines = data.splitlines()
        if not lines or tuple(c.strip() for c in lines[0].split(",")[:3]) != FIELD_COLUMNS:
            raise SchemaError("field CSV must start with the header x,y,u")
        try:
            rows = np.loadtxt(io.StringIO(data), delimiter=",", skiprows=1, ndmin=2)
        except ValueError as e:
            raise SchemaError("malformed field CSV: %s" % e)
        if rows.shape[0] < 9 or not np.all(np.isfinite(rows)):
            raise SchemaError("field CSV needs at least 3x3 finite nodes")
        return self.rebuild(rows[:, 0], rows[:, 1], rows[:, 2])

    #
    # Recover the sheared grid from node positions: t runs fastest, so the
    # first drop in y marks the end of the first column.
    #
    def rebuild(self, x, y, u):
        drops = np.nonzero(np.diff(y) <= 0)[0]
        n_t = int(drops[0]) + 1 if len(drops) else len(y)
        if n_t < 3 or len(y) % n_t:
            raise SchemaError("node count %d is not a whole number of columns of %d" % (len(y), n_t))
        n_s = len(y) // n_t
        x0, y0 = float(x[0]), float(y[0])
        w = float(y[n_t - 1]) - y0
        cot = (float(x[n_t - 1]) - x0) / w
        L = float(x[(n_s - 1) * n_t]) - x0
        try:
            domain = PlanarDomain(PARALLELOGRAM, math.atan2(1.0, cot), w, L, (x0, y0))
            field = ScalarField(domain, u.reshape(n_s, n_t))
        except Exception as e:
            raise SchemaError("field CSV does not describe a structured grid: %s" % e)
        gx, gy = field.xy
        scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
        if max(np.max(np.abs(gx.ravel() - x)), np.max(np.abs(gy.ravel() - y))) > 1e-9 * scale:
            raise SchemaError("node positions are not a uniform sheared grid")
        return field

class ObjMesh_Formatter(Formatter):
    def to_destination(self, data):
        out = io.StringIO()
        for x, y, z in data.vertices:
            out.write("v %.17g %.17g %.17g\n" % (x, y, z))
        for a, b, c in data.triangles:
            out.write("f %d %d %d\n" % (a + 1, b + 1, c + 1))
        return out.getvalue()

    def from_source(self, data):
        vertices, triangles = [], []
        for number, line in enumerate(data.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    vertices.append([float(p) for p in parts[1:4]])
                elif parts[0] == "f":
                    if len(parts) != 4:
                        raise SchemaError("line %d: only triangular faces are supported" % number)
                    triangles.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
            except ValueError:
                raise SchemaError("line %d: malformed OBJ record" % number)
        return SurfaceMesh(np.array(vertices, dtype=float).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3))

PLY_FACE = np.dtype([("count", "u1"), ("index", "<i4", (3,))])

class PlyMesh_Formatter(Formatter):
    def to_destination(self, data):
        header = ("ply\n"
                  "format binary_little_endian 1.0\n"
                  "element vertex %d\n"
                  "property double x\n"
                  "property double y\n"
                  "property double z\n"
                  "element face %d\n"
                  "property list uchar int vertex_indices\n"
                  "end_header\n") % (data.vertex_count, data.triangle_count)
        faces = np.zeros(data.triangle_count, dtype=PLY_FACE)
        faces["count"] = 3
        faces["index"] = data.triangles
        return header.encode("ascii") + data.vertices.astype("<f8").tobytes() + faces.tobytes()

    def from_source(self, data):
        end = data.find(b"end_header\n")
        if not data.startswith(b"ply\n") or end < 0:
            raise SchemaError("not a PLY file")
        header = data[:end].decode("ascii").splitlines()
        if "format binary_little_endian 1.0" not in header:
            raise SchemaError("only binary_little_endian 1.0 PLY is supported")
        counts = {}
        for line in header:
            parts = line.split()
            if parts[:1] == ["element"]:
                counts[parts[1]] = int(parts[2])
        body = data[end + len(b"end_header\n"):]
        n_v, n_f = counts.get("vertex", 0), counts.get("face", 0)
        vertices = np.frombuffer(body, dtype="<f8", count=3 * n_v).reshape(-1, 3)
        faces = np.frombuffer(body, dtype=PLY_FACE, count=n_f, offset=24 * n_v)
        return SurfaceMesh(vertices.copy(), faces["index"].astype(np.int64))

#
# JSON reports: sorted keys, two-space indent, no timestamps.
#
class JsonReport_Formatter(Formatter):
    def to_destination(self, data):
        report = {"schema_version": SCHEMA_VERSION}
        report.update(data)
        return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=True) + "\n"

    def from_source(self, data):
        report = json.loads(data)
        if report.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError("unsupported report schema_version %r" % report.get("schema_version"))
        return report

def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value

MESH_FORMATTERS = {"obj": ObjMesh_Formatter, "ply": PlyMesh_Formatter}

def mesh_formatter(fmt):
    try:
        return MESH_FORMATTERS[fmt.lower()]()
    except KeyError:
        raise SchemaError("unknown mesh format <" + str(fmt) + ">")

def write_atomic(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scherktools-")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

def export_mesh(mesh, path, fmt="obj"):
    write_atomic(path, mesh_formatter(fmt).to_destination(mesh))

def read_obj(path):
    with open(path, "r") as f:
        return ObjMesh_Formatter().from_source(f.read())

def read_field_csv(path):
    with open(path, "r") as f:
        return FieldCsv_Formatter().from_source(f.read())
