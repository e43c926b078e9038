"""Geometry kernel: curvature accuracy, exact identities, invariances."""

import numpy as np
import pytest

from mcflow.errors import FieldMismatch, NonManifold
from mcflow.shapes import icosphere, regular_polygon, torus, wavy_polygon
from mcflow.surface import (
    as_field,
    build_surface,
    dirichlet_energy,
    gradient_l1,
    integrate,
    lp_norm,
)


def rotation(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


# --------------------------------------------------------------------------
# construction and validation


def test_curve_needs_three_vertices():
    with pytest.raises(NonManifold):
        build_surface(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_mesh_rejects_open_boundary():
    # a single triangle has boundary edges, hence is not closed
    pos = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    with pytest.raises(NonManifold):
        build_surface(pos, np.array([[0, 1, 2]]))


def test_field_length_checked():
    surface = icosphere(1)
    with pytest.raises(FieldMismatch):
        as_field(surface, np.ones(surface.vertex_count + 1))


# --------------------------------------------------------------------------
# curvature accuracy on round surfaces


@pytest.mark.parametrize("radius", [1.0, 2.5])
def test_sphere_curvatures(radius):
    surface = icosphere(3, radius=radius)
    assert surface.n == 2
    # area-true construction: total measure is exactly the sphere area
    assert surface.total_measure == pytest.approx(
        4 * np.pi * radius**2, rel=1e-12)
    assert np.median(surface.H) == pytest.approx(2 / radius, rel=5e-3)
    assert np.median(surface.K) == pytest.approx(1 / radius**2, rel=2e-2)
    # the 12 degree-5 vertices overshoot |A|; the bulk statistic is tight
    assert np.quantile(np.sqrt(surface.A2), 0.9) == pytest.approx(
        np.sqrt(2) / radius, rel=2e-2)


def test_circle_curvature_exactness():
    surface = regular_polygon(256, radius=2.0)
    assert surface.n == 1
    # polygon length, not 2 pi r: the discrete measure is the honest one
    assert surface.total_measure == pytest.approx(
        2 * 256 * 2.0 * np.sin(np.pi / 256), rel=1e-12)
    assert np.allclose(surface.H, 1 / 2.0, rtol=2e-4)
    assert np.allclose(surface.A2, surface.H**2)  # curves: |A| = |H|


def test_normals_point_outward():
    for surface in (icosphere(2), regular_polygon(64)):
        radial = surface.positions / np.linalg.norm(
            surface.positions, axis=1, keepdims=True)
        assert np.einsum("ij,ij->i", radial, surface.nu).min() > 0.9


# --------------------------------------------------------------------------
# exact identities


def test_gauss_bonnet_sphere_and_torus():
    sphere = icosphere(3)
    total = float((sphere.K * sphere.w).sum())
    assert total == pytest.approx(4 * np.pi, abs=1e-9)
    donut = torus()
    assert float((donut.K * donut.w).sum()) == pytest.approx(0.0, abs=1e-9)


def test_a2_identity_with_clamp():
    for surface in (icosphere(2), torus()):
        raw = surface.H**2 - 2 * surface.K
        expect = np.maximum(raw, 0.0)
        assert np.allclose(surface.A2, expect, atol=1e-12)


def test_rigid_motion_invariance():
    base = icosphere(2)
    moved = base.with_positions(
        base.positions @ rotation([1, 2, 3], 0.7).T + np.array([4.0, -1, 2]))
    assert np.allclose(moved.H, base.H, atol=1e-10)
    assert np.allclose(moved.A2, base.A2, atol=1e-10)
    assert np.allclose(moved.w, base.w, atol=1e-10)
    assert moved.total_measure == pytest.approx(base.total_measure,
                                                rel=1e-12)


@pytest.mark.parametrize("make,n", [(lambda: icosphere(2), 2),
                                    (lambda: wavy_polygon(128), 1)])
def test_dilation_scaling_exact(make, n):
    base = make()
    q = 3.0
    scaled = base.with_positions(base.positions * q)
    assert np.allclose(scaled.H, base.H / q, rtol=1e-12)
    assert np.allclose(scaled.A2, base.A2 / q**2, rtol=1e-12)
    assert scaled.total_measure == pytest.approx(
        base.total_measure * q**n, rel=1e-12)


# --------------------------------------------------------------------------
# integral operators against closed forms


def test_integrate_constant_field():
    surface = icosphere(2)
    assert integrate(surface, np.full(surface.vertex_count, 3.0), 2.0) \
        == pytest.approx(9.0 * surface.total_measure, rel=1e-12)
    assert lp_norm(surface, np.full(surface.vertex_count, 3.0), 4.0) \
        == pytest.approx(3.0 * surface.total_measure**0.25, rel=1e-12)


def test_dirichlet_energy_height_field():
    # v = z on the unit sphere: integral |grad v|^2 = 8 pi / 3
    surface = icosphere(4)
    v = surface.positions[:, 2]
    assert dirichlet_energy(surface, v) == pytest.approx(
        8 * np.pi / 3, rel=5e-3)


def test_gradient_l1_height_field():
    # integral |grad z| over the unit sphere = pi^2
    surface = icosphere(4)
    v = surface.positions[:, 2]
    assert gradient_l1(surface, v) == pytest.approx(np.pi**2, rel=5e-3)


def test_curve_dirichlet_mode():
    # v = sin(3 theta) on the unit circle: integral (v')^2 = 9 pi
    surface = regular_polygon(512)
    theta = np.arctan2(surface.positions[:, 1], surface.positions[:, 0])
    assert dirichlet_energy(surface, np.sin(3 * theta)) == pytest.approx(
        9 * np.pi, rel=1e-3)


def test_dirichlet_dilation_invariant_for_meshes():
    # n = 2: the Dirichlet integrand scales as Q^{-2}, the measure as Q^2
    base = icosphere(2)
    v = base.positions[:, 0] ** 2
    scaled = base.with_positions(base.positions * 5.0)
    assert dirichlet_energy(scaled, v) == pytest.approx(
        dirichlet_energy(base, v), rel=1e-12)
