"""Surface file round-trips and malformed-input handling."""

import numpy as np
import pytest

from mcflow.errors import McflowError
from mcflow.fileio import (
    load_surface,
    read_curve_json,
    read_field_csv,
    read_obj,
    save_surface,
    write_curve_json,
    write_field_csv,
    write_obj,
)
from mcflow.shapes import icosphere, wavy_polygon


def test_obj_round_trip_exact(tmp_path):
    surface = icosphere(2, radius=1.7)
    path = tmp_path / "m.obj"
    write_obj(path, surface)
    back = read_obj(path)
    assert np.array_equal(back.positions, surface.positions)
    assert np.array_equal(back.faces, surface.faces)


def test_obj_negative_indices(tmp_path):
    path = tmp_path / "neg.obj"
    surface = icosphere(1)
    lines = ["# relative indexing"]
    for x, y, z in surface.positions.tolist():
        lines.append(f"v {x!r} {y!r} {z!r}")
    nv = surface.vertex_count
    for a, b, c in surface.faces.tolist():
        lines.append(f"f {a - nv} {b - nv} {c - nv}")
    path.write_text("\n".join(lines) + "\n")
    back = read_obj(path)
    assert np.array_equal(back.faces, surface.faces)


def test_obj_quad_and_garbage_rejected(tmp_path):
    quad = tmp_path / "quad.obj"
    quad.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(McflowError):
        read_obj(quad)
    junk = tmp_path / "junk.obj"
    junk.write_text("v 0 0\nf 1 2 3\n")
    with pytest.raises(McflowError):
        read_obj(junk)


def test_curve_json_round_trip(tmp_path):
    surface = wavy_polygon(96, amplitude=0.15, seed=3)
    path = tmp_path / "c.curve.json"
    write_curve_json(path, surface)
    back = read_curve_json(path)
    assert np.array_equal(back.positions, surface.positions)


def test_load_surface_dispatch(tmp_path):
    mesh = icosphere(1)
    curve = wavy_polygon(32)
    save_surface(tmp_path / "a.obj", mesh)
    save_surface(tmp_path / "b.curve.json", curve)
    assert load_surface(tmp_path / "a.obj").n == 2
    assert load_surface(tmp_path / "b.curve.json").n == 1
    with pytest.raises(McflowError):
        load_surface(tmp_path / "c.stl")


def test_field_csv_round_trip(tmp_path):
    values = np.linspace(-3, 7, 41) ** 3
    path = tmp_path / "f.csv"
    write_field_csv(path, values)
    assert np.array_equal(read_field_csv(path), values)
