"""Seed geometries: polygons, icospheres, ellipsoids, perturbed spheres.

All constructors return validated :class:`~mcflow.surface.DiscreteHypersurface`
objects with outward orientation. Randomized shapes take an integer seed and
are reproducible bit-for-bit.
"""

import numpy as np

from .surface import build_surface

# low-order harmonic polynomials on the unit sphere, used for perturbations
# and random test fields
_SPHERE_BASIS = (
    lambda p: np.ones(p.shape[0]),
    lambda p: p[:, 0],
    lambda p: p[:, 1],
    lambda p: p[:, 2],
    lambda p: p[:, 0] * p[:, 1],
    lambda p: p[:, 1] * p[:, 2],
    lambda p: p[:, 2] * p[:, 0],
    lambda p: p[:, 0] ** 2 - p[:, 1] ** 2,
    lambda p: 3.0 * p[:, 2] ** 2 - 1.0,
)


def regular_polygon(k, radius=1.0, center=(0.0, 0.0)):
    """Regular k-gon inscribed in a circle, counterclockwise."""
    if k < 3:
        raise ValueError("need at least 3 vertices")
    theta = 2.0 * np.pi * np.arange(k) / k
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1) * radius
    return build_surface(pts + np.asarray(center, dtype=float))


def wavy_polygon(k, amplitude=0.2, modes=(2, 3), seed=0, radius=1.0):
    """Closed curve r(theta) = radius * (1 + amplitude * sum of seeded waves)."""
    rng = np.random.default_rng(seed)
    theta = 2.0 * np.pi * np.arange(k) / k
    bump = np.zeros(k)
    for m in modes:
        a, b = rng.standard_normal(2)
        bump += a * np.cos(m * theta) + b * np.sin(m * theta)
    scale = np.abs(bump).max()
    if scale > 0:
        bump *= amplitude / scale
    r = radius * (1.0 + bump)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    return build_surface(pts)


def icosphere(level, radius=1.0, center=(0.0, 0.0, 0.0)):
    """Subdivided icosahedron, scaled so the mesh area matches the sphere.

    The mesh is area-true: its total triangle area equals 4 pi radius^2
    exactly, which puts the vertices a fraction of a percent outside the
    sphere (chordal faces lose area, the uniform rescale gives it back).
    Integral quantities are what the flow machinery consumes, so the
    measure convention wins over vertex-on-sphere placement.

    Parameters
    ----------
    level : int
        Subdivision depth; the mesh has 20 * 4**level faces and
        10 * 4**level + 2 vertices (level 4 gives 2562 vertices).
    radius : float
    center : sequence of 3 floats
    """
    positions, faces = _icosphere_arrays(level)
    raw_area = 0.5 * np.linalg.norm(
        np.cross(
            positions[faces[:, 1]] - positions[faces[:, 0]],
            positions[faces[:, 2]] - positions[faces[:, 0]],
        ),
        axis=1,
    ).sum()
    positions = positions * (radius * np.sqrt(4.0 * np.pi / raw_area))
    return build_surface(positions + np.asarray(center, dtype=float), faces)


def ellipsoid(level, semi_axes=(1.0, 1.0, 1.0)):
    """Icosphere stretched along the coordinate axes."""
    positions, faces = _icosphere_arrays(level)
    return build_surface(positions * np.asarray(semi_axes, dtype=float), faces)


def bumpy_sphere(level, amplitude=0.2, seed=0):
    """Unit sphere with a seeded low-order radial perturbation.

    The radial offset is a random combination of the harmonic basis,
    rescaled so its maximum absolute value equals ``amplitude``.
    """
    positions, faces = _icosphere_arrays(level)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(len(_SPHERE_BASIS) - 1)
    bump = np.zeros(positions.shape[0])
    for c, basis in zip(coeffs, _SPHERE_BASIS[1:]):
        bump += c * basis(positions)
    scale = np.abs(bump).max()
    if scale > 0:
        bump *= amplitude / scale
    return build_surface(positions * (1.0 + bump)[:, None], faces)


def torus(major_segments=48, minor_segments=24, major_radius=2.0, minor_radius=0.5):
    """Genus-1 torus mesh (handy for checking topology-sensitive quantities)."""
    u = 2.0 * np.pi * np.arange(major_segments) / major_segments
    v = 2.0 * np.pi * np.arange(minor_segments) / minor_segments
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    pts = np.stack(
        [ring * np.cos(uu), ring * np.sin(uu), minor_radius * np.sin(vv)], axis=-1
    ).reshape(-1, 3)
    faces = []
    for i in range(major_segments):
        for j in range(minor_segments):
            a = i * minor_segments + j
            b = ((i + 1) % major_segments) * minor_segments + j
            c = ((i + 1) % major_segments) * minor_segments + (j + 1) % minor_segments
            d = i * minor_segments + (j + 1) % minor_segments
            faces.append((a, b, c))
            faces.append((a, c, d))
    return build_surface(pts, np.asarray(faces))


def random_positive_field(surface, seed=0, floor_fraction=0.05):
    """Seeded low-order harmonic field shifted to be strictly positive.

    For meshes the basis is the polynomial harmonics in the normalized
    vertex directions; for curves it is trigonometric up to mode 3.
    """
    rng = np.random.default_rng(seed)
    if surface.n == 2:
        pos = surface.positions
        unit = pos / np.linalg.norm(pos, axis=1)[:, None]
        coeffs = rng.standard_normal(len(_SPHERE_BASIS))
        field = np.zeros(pos.shape[0])
        for c, basis in zip(coeffs, _SPHERE_BASIS):
            field += c * basis(unit)
    else:
        theta = np.arctan2(surface.positions[:, 1], surface.positions[:, 0])
        coeffs = rng.standard_normal(7)
        field = coeffs[0] * np.ones(theta.size)
        for m in (1, 2, 3):
            field += coeffs[2 * m - 1] * np.cos(m * theta)
            field += coeffs[2 * m] * np.sin(m * theta)
    span = field.max() - field.min()
    if span == 0.0:
        span = 1.0
    return field - field.min() + floor_fraction * span


def _icosphere_arrays(level):
    if level < 0:
        raise ValueError("level must be nonnegative")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    verts = list(map(tuple, verts))
    for _ in range(level):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                p = np.asarray(verts[a]) + np.asarray(verts[b])
                p /= np.linalg.norm(p)
                cache[key] = len(verts)
                verts.append(tuple(p))
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.asarray(new_faces, dtype=np.int64)
    return np.asarray(verts, dtype=float), faces
