"""Self-contained SVG charts: monitor time series and snapshot
silhouettes.

No plotting dependency: the files are plain SVG with the data embedded
as an XML comment table, so a report can be reviewed (and diffed) as
text. Non-finite values are skipped; log charts drop nonpositive
points.
"""

from pathlib import Path

import numpy as np

PALETTE = (
    "#1b6ca8", "#c94f30", "#3a8f5d", "#8450a0",
    "#b08a00", "#5a5a5a", "#d06a9c", "#2aa0a8",
)

WIDTH, HEIGHT = 720, 420
MARGIN = {"left": 64, "right": 16, "top": 34, "bottom": 42}


def _fmt(v):
    return f"{v:.6g}"


def _ticks(lo, hi, count=6):
    if not np.isfinite([lo, hi]).all() or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for step in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= step * mag:
            raw = step * mag
            break
    first = np.ceil(lo / raw) * raw
    return list(np.arange(first, hi + raw * 1e-9, raw))


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def svg_line_chart(series, path, title="", x_label="t", y_label="",
                   log_y=False):
    """Write a line chart; series maps name -> (x, y) arrays."""
    clean = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        good = np.isfinite(x) & np.isfinite(y)
        if log_y:
            good &= y > 0.0
        if good.any():
            clean[name] = (x[good], np.log10(y[good]) if log_y else y[good])
    if not clean:
        raise ValueError("nothing plottable in the series")

    xs = np.concatenate([x for x, _ in clean.values()])
    ys = np.concatenate([y for _, y in clean.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return MARGIN["top"] + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" '
        f'font-size="14">{_esc(title)}</text>',
    ]

    # frame and ticks
    x0, y0 = MARGIN["left"], MARGIN["top"] + plot_h
    parts.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333"/>'
    )
    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" '
                     f'y2="{y0 + 5}" stroke="#333"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + 18}" '
                     f'text-anchor="middle">{_fmt(tick)}</text>')
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        label = f"1e{tick:.0f}" if log_y and tick == int(tick) \
            else _fmt(tick)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" '
                     f'y2="{py:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4:.1f}" '
                     f'text-anchor="end">{label}</text>')
    parts.append(
        f'<text x="{MARGIN["left"] + plot_w / 2}" y="{HEIGHT - 8}" '
        f'text-anchor="middle">{_esc(x_label)}</text>'
    )
    if y_label:
        ylab = f"log10 {y_label}" if log_y else y_label
        parts.append(
            f'<text x="14" y="{MARGIN["top"] + plot_h / 2}" '
            f'text-anchor="middle" transform="rotate(-90 14 '
            f'{MARGIN["top"] + plot_h / 2})">{_esc(ylab)}</text>'
        )

    for k, (name, (x, y)) in enumerate(clean.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 14 + 16 * k
        lx = MARGIN["left"] + 10
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}">{_esc(name)}</text>')

    parts.append("<!-- data table")
    for name, (x, y) in clean.items():
        parts.append(f"  series {name} ({'log10 ' if log_y else ''}values)")
        for a, b in zip(x, y):
            parts.append(f"  {a!r},{b!r}")
    parts.append("-->")
    parts.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def plot_monitors(trajectory, path, keys=None, log_y=True):
    """Chart selected trajectory columns against time."""
    from .flow import moment_key

    if keys is None:
        keys = ["sup_a", "g", moment_key(trajectory.n + 2), "h_moment"]
    series = {
        k: (trajectory.times, trajectory.columns[k])
        for k in keys if k in trajectory.columns
    }
    return svg_line_chart(series, path, title="blow-up monitors",
                          y_label="monitor", log_y=log_y)


def _silhouette_segments(surface):
    """Projected outline: curve loops verbatim; meshes keep the edges
    where the face normal flips sign along the view axis (z)."""
    pos = surface.positions
    if surface.n == 1:
        loop = np.vstack([pos, pos[:1]])
        return [loop]
    faces = surface.faces
    v0, v1, v2 = pos[faces[:, 0]], pos[faces[:, 1]], pos[faces[:, 2]]
    normal_z = np.cross(v1 - v0, v2 - v0)[:, 2]
    front = normal_z >= 0.0
    edge_face = {}
    segments = []
    for f, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            other = edge_face.pop(key, None)
            if other is None:
                edge_face[key] = f
            elif front[f] != front[other]:
                segments.append(pos[[key[0], key[1]], :2])
    return segments


def plot_silhouettes(trajectory, path, count=6):
    """Overlay snapshot silhouettes, early times faint, late times dark."""
    snaps = [s for s in trajectory.snapshots if s.surface is not None]
    if not snaps:
        raise ValueError("trajectory has no snapshot geometry")
    if len(snaps) > count:
        idx = np.unique(np.linspace(0, len(snaps) - 1, count).astype(int))
        snaps = [snaps[i] for i in idx]

    all_pts = np.vstack([s.surface.positions[:, :2] for s in snaps])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    size = 480
    pad = 0.06 * span

    def sxy(p):
        q = (p - (lo + hi) / 2.0) / (span + 2 * pad) * size
        return q[0] + size / 2 + 10, size / 2 + 30 - q[1]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 20}" '
        f'height="{size + 40}" font-family="sans-serif" font-size="12">',
        f'<rect width="{size + 20}" height="{size + 40}" fill="white"/>',
        f'<text x="{(size + 20) / 2}" y="18" text-anchor="middle">'
        f'snapshot silhouettes (t = {_fmt(snaps[0].time)} … '
        f'{_fmt(snaps[-1].time)})</text>',
    ]
    for k, snap in enumerate(snaps):
        alpha = 0.25 + 0.75 * k / max(len(snaps) - 1, 1)
        for seg in _silhouette_segments(snap.surface):
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(sxy, seg))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#1b6ca8" '
                f'stroke-opacity="{alpha:.2f}" stroke-width="1.2"/>'
            )
    parts.append("<!-- snapshot times")
    for snap in snaps:
        parts.append(f"  row {snap.row}: t={snap.time!r}")
    parts.append("-->")
    parts.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
