"""Discrete closed hypersurfaces in R^(n+1) for n = 1 (polygons) and n = 2 (triangle meshes).

A surface carries per-vertex geometry caches: outward unit normal ``nu``,
mean curvature ``H`` (sum of principal curvatures, positive for convex
surfaces), squared second-fundamental-form norm ``A2``, Gaussian curvature
``K`` (meshes only), and the barycentric dual weight ``w`` used as the
discrete measure. Surfaces are immutable after construction and safe to
share across threads.

Sign conventions: ``nu`` points outward (positive enclosed volume / positive
signed area), and the discrete Laplacian of the position field satisfies
``laplacian_positions = -H * nu`` up to discretization error, so a round
sphere evolved by ``dX/dt = laplacian_positions`` shrinks.
"""

import numpy as np
from scipy import sparse

from .errors import Degenerate, FieldMismatch, NonManifold

# Dual weights below eps_area_factor * (total measure / vertex count) are
# treated as collapsed geometry.
EPS_AREA_FACTOR = 1e-14


class DiscreteHypersurface:
    """A closed polygonal curve (n=1) or oriented triangle mesh (n=2).

    Do not call directly; use :func:`build_surface`. Attributes are
    read-only numpy arrays.

    Attributes
    ----------
    n : int
        Hypersurface dimension, 1 or 2.
    positions : (V, n+1) float array
        Vertex coordinates. For n=1 the vertex order is the loop order.
    faces : (F, 3) int array or None
        Oriented triangles (n=2 only).
    nu : (V, n+1) float array
        Outward unit vertex normals.
    H : (V,) float array
        Mean curvature (trace convention: sum of principal curvatures).
    A2 : (V,) float array
        |A|^2; equals H^2 for curves and max(H^2 - 2K, 0) for meshes.
    K : (V,) float array or None
        Angle-defect Gaussian curvature (n=2 only).
    w : (V,) float array
        Barycentric dual weights; sum(w) is the total length/area.
    """

    def __init__(self, n, positions, faces, nu, H, A2, K, w, laplacian_vec):
        self.n = n
        self.positions = positions
        self.faces = faces
        self.nu = nu
        self.H = H
        self.A2 = A2
        self.K = K
        self.w = w
        self.laplacian_vec = laplacian_vec  # discrete Laplace-Beltrami of positions
        for arr in (positions, faces, nu, H, A2, K, w, laplacian_vec):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def vertex_count(self):
        return self.positions.shape[0]

    @property
    def total_measure(self):
        """Total length (n=1) or area (n=2)."""
        return float(self.w.sum())

    @property
    def max_abs_a(self):
        return float(np.sqrt(self.A2.max()))

    def with_positions(self, positions):
        """New surface with the same connectivity and refreshed caches."""
        return _build_validated(self.n, positions, self.faces)

    def edge_lengths(self):
        if self.n == 1:
            return _curve_edge_lengths(self.positions)
        i, j = _mesh_unique_edges(self.faces)
        return np.linalg.norm(self.positions[j] - self.positions[i], axis=1)


def build_surface(positions, connectivity=None):
    """Build a validated closed hypersurface with populated caches.

    Parameters
    ----------
    positions : (V, 2) or (V, 3) array
        Vertex coordinates; 2 columns build a polygon, 3 a triangle mesh.
    connectivity : array or None
        For meshes, an (F, 3) list of oriented triangles (required). For
        curves, either None (vertices are in loop order, implicitly
        closed) or an (V, 2) edge list describing a single closed loop.

    Returns
    -------
    DiscreteHypersurface
        Orientation is normalized so normals point outward.

    Raises
    ------
    NonManifold
        Open boundary, non-manifold edge or vertex, multiple components.
    Degenerate
        Zero-length edge or zero-area face.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] not in (2, 3):
        raise NonManifold("positions must be (V, 2) or (V, 3)")
    if not np.isfinite(positions).all():
        raise Degenerate("positions contain non-finite values")

    if positions.shape[1] == 2:
        order = _validate_curve(positions.shape[0], connectivity)
        positions = positions[order]
        if _curve_signed_area(positions) < 0.0:
            positions = positions[::-1].copy()
        return _build_validated(1, positions, None)

    if connectivity is None:
        raise NonManifold("triangle meshes require a face list")
    faces = np.asarray(connectivity, dtype=np.int64)
    _validate_mesh(positions.shape[0], faces)
    if _mesh_signed_volume(positions, faces) < 0.0:
        faces = faces[:, ::-1].copy()
    return _build_validated(2, positions, faces)


def curvatures(surface):
    """Recompute all per-vertex caches of ``surface`` from its positions."""
    return _build_validated(surface.n, np.array(surface.positions), surface.faces)


def as_field(surface, values):
    """Validate ``values`` as a scalar field on ``surface``.

    Returns the field as a float array; raises FieldMismatch when the
    length disagrees with the vertex count or values are not finite.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (surface.vertex_count,):
        raise FieldMismatch(
            f"field has shape {values.shape}, surface has "
            f"{surface.vertex_count} vertices"
        )
    if not np.isfinite(values).all():
        raise FieldMismatch("field contains non-finite values")
    return values


def integrate(surface, field, p):
    """Lumped integral of |field|^p over the surface, sum_i |f_i|^p w_i."""
    if p <= 0:
        raise ValueError("p must be positive")
    field = as_field(surface, field)
    return float(np.abs(field) ** p @ surface.w)


def dirichlet_energy(surface, field):
    """Integral of |grad f|^2: piecewise-linear per-face gradients (n=2)
    or edge difference quotients (n=1)."""
    field = as_field(surface, field)
    if surface.n == 1:
        lengths = _curve_edge_lengths(surface.positions)
        df = np.roll(field, -1) - field
        return float(np.sum(df * df / lengths))
    grads = face_gradients(surface, field)
    areas = _face_areas(surface.positions, surface.faces)
    return float(np.sum(areas * np.einsum("ij,ij->i", grads, grads)))


def gradient_l1(surface, field):
    """Integral of |grad f| (lowest-order quadrature on faces/edges)."""
    field = as_field(surface, field)
    if surface.n == 1:
        df = np.abs(np.roll(field, -1) - field)
        return float(df.sum())
    grads = face_gradients(surface, field)
    areas = _face_areas(surface.positions, surface.faces)
    return float(np.sum(areas * np.linalg.norm(grads, axis=1)))


def lp_norm(surface, field, p):
    """L^p norm of a field, (integral of |f|^p)^(1/p)."""
    return integrate(surface, field, p) ** (1.0 / p)


def face_gradients(surface, field):
    """Per-face gradient of the piecewise-linear interpolant (n=2 only)."""
    field = as_field(surface, field)
    pos, faces = surface.positions, surface.faces
    p0, p1, p2 = pos[faces[:, 0]], pos[faces[:, 1]], pos[faces[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    two_area = np.linalg.norm(cross, axis=1)
    normal = cross / two_area[:, None]
    f0, f1, f2 = (field[faces[:, k]] for k in range(3))
    # grad phi_k = n x (opposite edge) / (2A)
    grad = (
        f0[:, None] * np.cross(normal, p2 - p1)
        + f1[:, None] * np.cross(normal, p0 - p2)
        + f2[:, None] * np.cross(normal, p1 - p0)
    )
    return grad / two_area[:, None]


def laplacian_matrices(surface):
    """Stiffness and lumped mass of the discrete Laplace-Beltrami operator.

    Returns (W, m): W is the positive-semidefinite sparse stiffness matrix
    (cotangent weights for meshes, inverse edge lengths for curves) and m
    the diagonal lumped mass vector (the dual weights). The operator is
    laplacian(f) = -W f / m, negative semidefinite, zero on constants.
    """
    if surface.n == 1:
        return _curve_stiffness(surface.positions), surface.w.copy()
    return _cotan_stiffness(surface.positions, surface.faces), surface.w.copy()


# ---------------------------------------------------------------------------
# curve internals


def _validate_curve(nv, connectivity):
    """Return the loop ordering of the vertices, validating 2-regularity."""
    if nv < 3:
        raise NonManifold("a closed curve needs at least 3 vertices")
    if connectivity is None:
        return np.arange(nv)
    edges = np.asarray(connectivity, dtype=np.int64)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise NonManifold("curve connectivity must be an (E, 2) edge list")
    if edges.shape[0] != nv:
        raise NonManifold("a single closed loop has as many edges as vertices")
    if edges.min() < 0 or edges.max() >= nv:
        raise NonManifold("edge index out of range")
    neighbors = {}
    for a, b in edges:
        if a == b:
            raise NonManifold("self-loop edge")
        for u, v in ((a, b), (b, a)):
            neighbors.setdefault(u, [])
            if v in neighbors[u]:
                raise NonManifold("duplicate edge")
            neighbors[u].append(v)
    degrees = np.array([len(neighbors.get(i, ())) for i in range(nv)])
    if not (degrees == 2).all():
        raise NonManifold("every curve vertex must have exactly 2 neighbors")
    order = [0]
    prev, cur = -1, 0
    for _ in range(nv - 1):
        a, b = neighbors[cur]
        nxt = b if a == prev else a
        prev, cur = cur, nxt
        order.append(cur)
    if len(set(order)) != nv or 0 not in neighbors[cur]:
        raise NonManifold("curve connectivity is not a single closed loop")
    return np.asarray(order)


def _curve_edge_lengths(positions):
    edges = np.roll(positions, -1, axis=0) - positions
    lengths = np.linalg.norm(edges, axis=1)
    if (lengths <= 0.0).any():
        raise Degenerate("zero-length edge")
    return lengths


def _curve_signed_area(positions):
    x, y = positions[:, 0], positions[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _curve_stiffness(positions):
    nv = positions.shape[0]
    lengths = _curve_edge_lengths(positions)
    inv = 1.0 / lengths
    idx = np.arange(nv)
    nxt = (idx + 1) % nv
    rows = np.concatenate([idx, nxt, idx, nxt])
    cols = np.concatenate([nxt, idx, idx, nxt])
    vals = np.concatenate([-inv, -inv, inv, inv])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(nv, nv))


def _curve_caches(positions):
    nv = positions.shape[0]
    lengths = _curve_edge_lengths(positions)
    w = 0.5 * (lengths + np.roll(lengths, 1))
    _check_dual_weights(w)
    tangents = (np.roll(positions, -1, axis=0) - positions) / lengths[:, None]
    edge_normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)
    nu = edge_normals + np.roll(edge_normals, 1, axis=0)
    norms = np.linalg.norm(nu, axis=1)
    if (norms <= 0.0).any():
        raise Degenerate("undefined vertex normal (cusp vertex)")
    nu /= norms[:, None]
    fwd = (np.roll(positions, -1, axis=0) - positions) / lengths[:, None]
    bwd = (np.roll(positions, 1, axis=0) - positions) / np.roll(lengths, 1)[:, None]
    lap = (fwd + bwd) / w[:, None]
    H = -np.einsum("ij,ij->i", lap, nu)
    A2 = H * H
    return nu, H, A2, None, w, lap


# ---------------------------------------------------------------------------
# mesh internals


def _validate_mesh(nv, faces):
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise NonManifold("faces must be an (F, 3) triangle list")
    if faces.shape[0] < 4:
        raise NonManifold("a closed mesh needs at least 4 faces")
    if faces.min() < 0 or faces.max() >= nv:
        raise NonManifold("face index out of range")
    if (np.diff(np.sort(faces, axis=1), axis=1) == 0).any():
        raise NonManifold("degenerate face with repeated vertex")

    directed = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )
    keys = directed[:, 0].astype(np.int64) * nv + directed[:, 1]
    if np.unique(keys).size != keys.size:
        raise NonManifold("duplicated directed edge (inconsistent orientation)")
    undirected = np.sort(directed, axis=1)
    ukeys = undirected[:, 0].astype(np.int64) * nv + undirected[:, 1]
    uniq, cnt = np.unique(ukeys, return_counts=True)
    if not (cnt == 2).all():
        raise NonManifold("boundary or non-manifold edge")

    used = np.zeros(nv, dtype=bool)
    used[faces.ravel()] = True
    if not used.all():
        raise NonManifold("isolated vertex")

    n_edges = uniq.size
    chi = nv - n_edges + faces.shape[0]
    if chi % 2 != 0:
        raise NonManifold("Euler characteristic inconsistent with a closed surface")

    _check_vertex_links(nv, faces)
    _check_connected(nv, faces)


def _check_vertex_links(nv, faces):
    """Each vertex link must be a single cycle (no bowtie vertices)."""
    link = [[] for _ in range(nv)]
    for a, b, c in faces:
        link[a].append((b, c))
        link[b].append((c, a))
        link[c].append((a, b))
    for v in range(nv):
        succ = dict(link[v])
        if len(succ) != len(link[v]):
            raise NonManifold("non-manifold vertex")
        start = next(iter(succ))
        cur, steps = start, 0
        while True:
            cur = succ.get(cur)
            steps += 1
            if cur is None:
                raise NonManifold("open vertex link")
            if cur == start:
                break
            if steps > len(succ):
                raise NonManifold("vertex link is not a single cycle")
        if steps != len(succ):
            raise NonManifold("vertex link splits into several cycles")


def _check_connected(nv, faces):
    parent = np.arange(nv)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b, c in faces:
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[find(rc)] = find(ra)
    roots = {find(v) for v in range(nv)}
    if len(roots) != 1:
        raise NonManifold("mesh has multiple connected components")


def _face_corner_points(positions, faces):
    return positions[faces[:, 0]], positions[faces[:, 1]], positions[faces[:, 2]]


def _face_cross(positions, faces):
    p0, p1, p2 = _face_corner_points(positions, faces)
    return np.cross(p1 - p0, p2 - p0)


def _face_areas(positions, faces):
    areas = 0.5 * np.linalg.norm(_face_cross(positions, faces), axis=1)
    if (areas <= 0.0).any():
        raise Degenerate("zero-area face")
    return areas


def _mesh_signed_volume(positions, faces):
    p0, p1, p2 = _face_corner_points(positions, faces)
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def _mesh_unique_edges(faces):
    directed = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )
    undirected = np.sort(directed, axis=1)
    uniq = np.unique(undirected, axis=0)
    return uniq[:, 0], uniq[:, 1]


def _cotan_stiffness(positions, faces):
    nv = positions.shape[0]
    p0, p1, p2 = _face_corner_points(positions, faces)
    areas = _face_areas(positions, faces)
    rows, cols, vals = [], [], []
    corners = (p0, p1, p2)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        u = corners[i] - corners[k]
        v = corners[j] - corners[k]
        cot = 0.5 * np.einsum("ij,ij->i", u, v) / (2.0 * areas)
        rows.append(faces[:, i]); cols.append(faces[:, j]); vals.append(-cot)
        rows.append(faces[:, j]); cols.append(faces[:, i]); vals.append(-cot)
        rows.append(faces[:, i]); cols.append(faces[:, i]); vals.append(cot)
        rows.append(faces[:, j]); cols.append(faces[:, j]); vals.append(cot)
    W = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    )
    return W


def _mesh_caches(positions, faces):
    nv = positions.shape[0]
    cross = _face_cross(positions, faces)
    two_areas = np.linalg.norm(cross, axis=1)
    if (two_areas <= 0.0).any():
        raise Degenerate("zero-area face")
    areas = 0.5 * two_areas

    w = np.zeros(nv)
    np.add.at(w, faces.ravel(), np.repeat(areas / 3.0, 3))
    _check_dual_weights(w)

    nu = np.zeros((nv, 3))
    np.add.at(nu, faces[:, 0], cross)
    np.add.at(nu, faces[:, 1], cross)
    np.add.at(nu, faces[:, 2], cross)
    norms = np.linalg.norm(nu, axis=1)
    if (norms <= 0.0).any():
        raise Degenerate("undefined vertex normal")
    nu /= norms[:, None]

    W = _cotan_stiffness(positions, faces)
    lap = -(W @ positions) / w[:, None]
    H = -np.einsum("ij,ij->i", lap, nu)

    defect = np.full(nv, 2.0 * np.pi)
    p = (positions[faces[:, 0]], positions[faces[:, 1]], positions[faces[:, 2]])
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        u = p[i] - p[k]
        v = p[j] - p[k]
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.subtract.at(defect, faces[:, k], ang)
    K = defect / w

    A2 = np.maximum(H * H - 2.0 * K, 0.0)
    return nu, H, A2, K, w, lap


def _check_dual_weights(w):
    if (w <= EPS_AREA_FACTOR * (w.sum() / w.size)).any():
        raise Degenerate("dual weight underflow")


def _build_validated(n, positions, faces):
    """Assemble caches for connectivity that is already known to be valid."""
    positions = np.ascontiguousarray(positions, dtype=float)
    if not np.isfinite(positions).all():
        raise Degenerate("positions contain non-finite values")
    if n == 1:
        nu, H, A2, K, w, lap = _curve_caches(positions)
        return DiscreteHypersurface(1, positions, None, nu, H, A2, K, w, lap)
    nu, H, A2, K, w, lap = _mesh_caches(positions, faces)
    return DiscreteHypersurface(2, positions, faces, nu, H, A2, K, w, lap)
