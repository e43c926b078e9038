"""Surface and field I/O: Wavefront OBJ meshes, JSON curves, CSV fields.

Curves are stored as a JSON array of [x, y] points in loop order,
implicitly closed. Scalar fields are CSV with one value per line in
vertex order.
"""

import json

import numpy as np

from .errors import McflowError
from .surface import build_surface


def write_obj(path, surface):
    """Write a triangle mesh as ASCII OBJ (1-based face indices)."""
    if surface.n != 2:
        raise McflowError("OBJ output is for triangle meshes")
    lines = ["# closed triangle mesh"]
    for x, y, z in surface.positions.tolist():
        lines.append(f"v {x!r} {y!r} {z!r}")
    for a, b, c in surface.faces + 1:
        lines.append(f"f {a} {b} {c}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_obj(path):
    """Read an ASCII OBJ triangle mesh into a validated surface."""
    verts, faces = [], []
    with open(path) as fh:
        for raw in fh:
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                if len(idx) != 3:
                    raise McflowError("only triangular faces are supported")
                faces.append(idx)
    if not verts or not faces:
        raise McflowError(f"no mesh data in {path}")
    faces = np.asarray(faces, dtype=np.int64)
    faces[faces > 0] -= 1  # OBJ is 1-based; negatives count from the end
    faces[faces < 0] += len(verts)
    return build_surface(np.asarray(verts, dtype=float), faces)


def write_curve_json(path, surface):
    """Write a closed polygon as a JSON array of [x, y] points."""
    if surface.n != 1:
        raise McflowError("curve JSON output is for polygons")
    with open(path, "w") as fh:
        json.dump([[float(x), float(y)] for x, y in surface.positions], fh)


def read_curve_json(path):
    with open(path) as fh:
        pts = json.load(fh)
    return build_surface(np.asarray(pts, dtype=float))


def write_field_csv(path, values):
    with open(path, "w") as fh:
        fh.write("\n".join(repr(float(v)) for v in np.asarray(values)) + "\n")


def read_field_csv(path):
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip()]
    return np.asarray(vals, dtype=float)


def load_surface(path):
    """Dispatch on extension: .obj mesh or .json curve."""
    name = str(path)
    if name.endswith(".obj"):
        return read_obj(path)
    if name.endswith(".json"):
        return read_curve_json(path)
    raise McflowError(f"unrecognized surface format: {path}")


def save_surface(path, surface):
    name = str(path)
    if name.endswith(".obj"):
        write_obj(path, surface)
    elif name.endswith(".json"):
        write_curve_json(path, surface)
    else:
        raise McflowError(f"unrecognized surface format: {path}")
