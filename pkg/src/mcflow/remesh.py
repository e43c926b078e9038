"""Incremental remeshing toward a uniform target edge length.

Edges longer than split_factor * target are split at their midpoint,
edges shorter than collapse_factor * target are collapsed (meshes only
when the link condition allows it), and surviving vertices are relaxed
tangentially. No fields are interpolated; curvature caches are rebuilt
from scratch on the new connectivity.
"""

import numpy as np

from .surface import build_surface

MIN_CURVE_VERTICES = 8
MIN_MESH_FACES = 8


def remesh(surface, target, split_factor=4.0 / 3.0, collapse_factor=0.8,
           relax_passes=1, max_ops=None):
    """One remeshing sweep; returns a new surface (or the input if clean).

    Parameters
    ----------
    surface : DiscreteHypersurface
    target : float
        Desired edge length.
    split_factor, collapse_factor : float
        Split edges above split_factor*target, collapse below
        collapse_factor*target.
    relax_passes : int
        Tangential smoothing passes applied after the topology edits.
    max_ops : int, optional
        Mesh surgeries (splits plus collapses) allowed in this sweep,
        worst offenders first; None means unlimited. Curves ignore the
        cap: their surgery noise is O(edge^2) and needs no batching.
    """
    if target <= 0:
        raise ValueError("target edge length must be positive")
    if surface.n == 1:
        return _remesh_curve(surface, target, split_factor, collapse_factor,
                             relax_passes)
    return _remesh_mesh(surface, target, split_factor, collapse_factor,
                        relax_passes, max_ops)


def needs_remesh(surface, target, split_factor=4.0 / 3.0, collapse_factor=0.8):
    lengths = surface.edge_lengths()
    return bool(lengths.max() > split_factor * target
                or lengths.min() < collapse_factor * target)


# ---------------------------------------------------------------------------
# curves


def _remesh_curve(surface, target, split_f, collapse_f, relax_passes):
    # (point, curvature, normal) triples travel together so both splits
    # and collapses can lift merged points onto the osculating circle
    pts = [p for p in surface.positions]
    curv = [float(h) for h in surface.H]
    normals = [v for v in surface.nu]
    changed = False

    # split long edges, placing new points on the osculating circle
    out = []
    for i, p in enumerate(pts):
        out.append((p, curv[i], normals[i]))
        j = (i + 1) % len(pts)
        q = pts[j]
        length = np.linalg.norm(q - p)
        if length > split_f * target:
            pieces = int(np.ceil(length / target))
            for k in range(1, pieces):
                s = k / pieces
                normal = (1.0 - s) * normals[i] + s * normals[j]
                norm = np.linalg.norm(normal)
                if norm > 1e-12:
                    normal = normal / norm
                out.append((
                    _lifted_midpoint(p, q, curv[i], curv[j],
                                     normals[i], normals[j], s=s),
                    (1.0 - s) * curv[i] + s * curv[j],
                    normal,
                ))
            changed = True
    pts = out

    def merge(a, b):
        p, h, nu = a
        q, g, mu = b
        normal = nu + mu
        norm = np.linalg.norm(normal)
        return (_lifted_midpoint(p, q, h, g, nu, mu),
                0.5 * (h + g),
                normal / norm if norm > 1e-12 else nu)

    # collapse short edges (never two merges sharing a vertex)
    out = []
    merges = 0
    i = 0
    while i < len(pts):
        can_merge = (i + 1 < len(pts)
                     and len(pts) - merges > MIN_CURVE_VERTICES
                     and np.linalg.norm(pts[i + 1][0] - pts[i][0])
                     < collapse_f * target)
        if can_merge:
            out.append(merge(pts[i], pts[i + 1]))
            merges += 1
            i += 2
            changed = True
        else:
            out.append(pts[i])
            i += 1
    # wraparound edge
    if (len(out) > MIN_CURVE_VERTICES
            and np.linalg.norm(out[-1][0] - out[0][0]) < collapse_f * target):
        out[0] = merge(out[0], out[-1])
        out.pop()
        changed = True
    if not changed:
        return surface
    out = [item[0] for item in out]

    new = build_surface(np.asarray(out))
    for _ in range(relax_passes):
        new = _relax_curve(new)
    return new


def _relax_curve(surface):
    pos = surface.positions
    mid = 0.5 * (np.roll(pos, -1, axis=0) + np.roll(pos, 1, axis=0))
    v = mid - pos
    normal_part = np.einsum("ij,ij->i", v, surface.nu)[:, None] * surface.nu
    return build_surface(pos + 0.5 * (v - normal_part))


# ---------------------------------------------------------------------------
# meshes


def _remesh_mesh(surface, target, split_f, collapse_f, relax_passes,
                 max_ops=None):
    max_len = split_f * target
    pos = [p.copy() for p in surface.positions]
    faces = [tuple(f) for f in surface.faces]
    # carried through the surgery so new midpoints can be lifted off the
    # chord onto the local osculating sphere (a flat midpoint kinks |A|)
    curv = [float(h) for h in surface.H]
    normals = [v.copy() for v in surface.nu]

    spent = 0
    for _ in range(10):
        budget = None if max_ops is None else max_ops - spent
        if budget is not None and budget <= 0:
            break
        faces, pos, ops = _split_pass(faces, pos, curv, normals,
                                      split_f * target, budget)
        spent += ops
        if not ops:
            break
    budget = None if max_ops is None else max_ops - spent
    if budget is None or budget > 0:
        faces, pos, ops = _collapse_pass(faces, pos, curv, normals,
                                         collapse_f * target, max_len,
                                         budget)
        spent += ops
    if spent == 0:
        return surface

    # splits and collapses leave 4- and 8-valence vertices whose angle
    # defects corrupt the discrete |A|; diagonal flips restore the
    # valence-6 budget before the tangential relaxation
    for _ in range(10):
        faces, did = _flip_pass(faces, pos)
        if not did:
            break

    pos, faces = _compact(pos, faces)
    new = build_surface(np.asarray(pos), np.asarray(faces, dtype=np.int64))
    for _ in range(relax_passes):
        new = _relax_mesh(new)
    return new


def _lifted_midpoint(p_u, p_v, h_u, h_v, n_u, n_v, s=0.5):
    """Point at parameter s of edge (u, v), lifted off the chord.

    The normal offset is the sagitta of the osculating circle through
    the endpoints: ell^2 kappa s(1-s)/2, with the normal curvature
    kappa taken as H/n (exact on round spheres, leading order
    elsewhere). Without it, every split dents the surface by O(ell^2)
    and the higher |A|-moments jump.
    """
    chord = (1.0 - s) * p_u + s * p_v
    normal = (1.0 - s) * n_u + s * n_v
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        return chord
    normal /= norm
    ell2 = float(np.dot(p_v - p_u, p_v - p_u))
    dim = p_u.shape[0] - 1  # hypersurface dimension
    kappa = 0.5 * (h_u + h_v) / dim
    return chord + normal * (0.5 * ell2 * kappa * s * (1.0 - s))


def _edge_faces(faces):
    """Map undirected edge -> list of face indices."""
    ef = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            ef.setdefault((min(u, v), max(u, v)), []).append(fi)
    return ef


def _split_pass(faces, pos, curv, normals, max_len, budget=None):
    ef = _edge_faces(faces)
    too_long = []
    for (u, v), incident in ef.items():
        length = np.linalg.norm(pos[u] - pos[v])
        if length > max_len:
            too_long.append((length, u, v, incident))
    if not too_long:
        return faces, pos, 0
    too_long.sort(key=lambda item: -item[0])

    faces = list(faces)
    dirty = set()
    ops = 0
    for _, u, v, incident in too_long:
        if budget is not None and ops >= budget:
            break
        if any(fi in dirty for fi in incident) or len(incident) != 2:
            continue
        m = len(pos)
        pos.append(_lifted_midpoint(pos[u], pos[v], curv[u], curv[v],
                                    normals[u], normals[v]))
        curv.append(0.5 * (curv[u] + curv[v]))
        mid_n = normals[u] + normals[v]
        mid_norm = np.linalg.norm(mid_n)
        normals.append(mid_n / mid_norm if mid_norm > 1e-12
                       else normals[u].copy())
        for fi in incident:
            a, b, c = faces[fi]
            # rotate so the split edge is (a, b)
            for _ in range(3):
                if {a, b} == {u, v}:
                    break
                a, b, c = b, c, a
            faces[fi] = (a, m, c)
            faces.append((m, b, c))
            dirty.add(fi)
            dirty.add(len(faces) - 1)
        ops += 1
    return faces, pos, ops


def _flip_pass(faces, pos):
    """One sweep of valence-improving diagonal flips.

    Edge (u, v) with opposite vertices c, d flips to (c, d) when that
    strictly lowers the squared deviation of the four valences from 6,
    the new diagonal does not already exist, and the two new triangles
    stay consistently oriented with the old ones.
    """
    ef = _edge_faces(faces)
    valence = {}
    for (u, v) in ef:
        valence[u] = valence.get(u, 0) + 1
        valence[v] = valence.get(v, 0) + 1

    faces = list(faces)
    dirty = set()
    changed = False
    for (u, v), incident in ef.items():
        if len(incident) != 2 or any(fi in dirty for fi in incident):
            continue
        f0, f1 = incident
        a, b, c = faces[f0]
        for _ in range(3):
            if (a, b) == (u, v) or (a, b) == (v, u):
                break
            a, b, c = b, c, a
        u_, v_ = a, b  # directed as in f0
        d = next(w for w in faces[f1] if w not in (u, v))
        if (min(c, d), max(c, d)) in ef:
            continue
        before = sum((valence[w] - 6) ** 2 for w in (u_, v_, c, d))
        after = ((valence[u_] - 7) ** 2 + (valence[v_] - 7) ** 2
                 + (valence[c] - 5) ** 2 + (valence[d] - 5) ** 2)
        if after >= before:
            continue
        old_n = (np.cross(pos[v_] - pos[u_], pos[c] - pos[u_])
                 + np.cross(pos[u_] - pos[v_], pos[d] - pos[v_]))
        n0 = np.cross(pos[d] - pos[u_], pos[c] - pos[u_])
        n1 = np.cross(pos[c] - pos[v_], pos[d] - pos[v_])
        scale = float(np.dot(old_n, old_n))
        if (np.dot(n0, old_n) <= 1e-12 * scale
                or np.dot(n1, old_n) <= 1e-12 * scale):
            continue  # would fold or degenerate
        faces[f0] = (u_, d, c)
        faces[f1] = (v_, c, d)
        valence[u_] -= 1
        valence[v_] -= 1
        valence[c] += 1
        valence[d] += 1
        dirty.update(incident)
        changed = True
    return faces, changed


def _collapse_pass(faces, pos, curv, normals, min_len, max_len=None,
                   budget=None):
    ef = _edge_faces(faces)
    neighbors = {}
    for (u, v) in ef:
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)
    v2f = {}
    for fi, f in enumerate(faces):
        for w in f:
            v2f.setdefault(w, set()).add(fi)

    too_short = []
    for (u, v), incident in ef.items():
        length = np.linalg.norm(pos[u] - pos[v])
        if length < min_len and len(incident) == 2:
            too_short.append((length, u, v))
    if not too_short:
        return faces, pos, 0
    too_short.sort(key=lambda item: item[0])

    faces = list(faces)
    alive = [True] * len(faces)
    live_count = len(faces)
    touched = set()
    ops = 0
    for _, u, v in too_short:
        if budget is not None and ops >= budget:
            break
        if u in touched or v in touched:
            continue
        if live_count - 2 < MIN_MESH_FACES:
            break
        shared = [fi for fi in ef[(min(u, v), max(u, v))] if alive[fi]]
        if len(shared) != 2:
            continue
        opposite = set()
        for fi in shared:
            opposite.update(faces[fi])
        opposite -= {u, v}
        # link condition: exactly the two opposite corners may be shared
        if neighbors[u] & neighbors[v] != opposite or len(opposite) != 2:
            continue
        ring = (v2f[u] | v2f[v]) - set(shared)
        # the merged vertex is lifted off the chord like a split midpoint;
        # a flat merge dents the surface and kinks the higher |A|-moments
        new_pos = _lifted_midpoint(pos[u], pos[v], curv[u], curv[v],
                                   normals[u], normals[v])
        if not _collapse_is_safe(faces, alive, ring, pos, u, v, new_pos):
            continue
        # never manufacture a split trigger: the merge may not stretch any
        # surviving edge beyond the split bound
        if max_len is not None and any(
                np.linalg.norm(new_pos - pos[w]) > max_len
                for w in (neighbors[u] | neighbors[v]) - {u, v}):
            continue
        pos[u] = new_pos
        curv[u] = 0.5 * (curv[u] + curv[v])
        merged_n = normals[u] + normals[v]
        norm = np.linalg.norm(merged_n)
        if norm > 1e-12:
            normals[u] = merged_n / norm
        for fi in shared:
            alive[fi] = False
            live_count -= 1
        for fi in ring:
            if not alive[fi]:
                continue
            faces[fi] = tuple(u if w == v else w for w in faces[fi])
            v2f[u].add(fi)
        touched |= {u, v} | neighbors[u] | neighbors[v]
        ops += 1

    if ops == 0:
        return faces, pos, 0
    faces = [f for fi, f in enumerate(faces) if alive[fi]]
    return faces, pos, ops


def _collapse_is_safe(faces, alive, ring, pos, u, v, new_pos):
    """Reject collapses that would flip or flatten a surviving face."""
    for fi in ring:
        if not alive[fi]:
            continue
        tri = faces[fi]
        if u in tri and v in tri:
            continue  # removed by the collapse itself
        before = [pos[w] for w in tri]
        after = [new_pos if w in (u, v) else pos[w] for w in tri]
        n0 = np.cross(before[1] - before[0], before[2] - before[0])
        n1 = np.cross(after[1] - after[0], after[2] - after[0])
        norm = np.linalg.norm(n1)
        if norm < 1e-12 * np.linalg.norm(n0) or np.dot(n0, n1) <= 0.0:
            return False
    return True


def _compact(pos, faces):
    used = sorted({v for f in faces for v in f})
    remap = {old: new for new, old in enumerate(used)}
    return [pos[v] for v in used], [tuple(remap[v] for v in f) for f in faces]


def _relax_mesh(surface):
    pos = surface.positions
    nv = surface.vertex_count
    acc = np.zeros_like(pos)
    count = np.zeros(nv)
    for a, b, c in surface.faces:
        acc[a] += pos[b] + pos[c]
        acc[b] += pos[c] + pos[a]
        acc[c] += pos[a] + pos[b]
        count[[a, b, c]] += 2
    centroid = acc / count[:, None]
    v = centroid - pos
    normal_part = np.einsum("ij,ij->i", v, surface.nu)[:, None] * surface.nu
    return build_surface(pos + 0.5 * (v - normal_part), surface.faces)