"""Trajectory persistence: manifest + snapshot meshes + CSV series.

Directory layout:

    out/
      manifest.json          config, per-step records, cumulative
                             integrals, status, estimated stop data
      series.csv             the same record table, one row per step
      snapshots/t_000000.obj mesh snapshots (curves: t_000000.curve.json)

Manifests are deterministic: no timestamps, sorted keys, full-precision
floats (shortest round-trip repr), NaN encoded as null. A directory is
owned by exactly one writer at a time via an O_EXCL lock file; stale
locks raise LockHeld rather than being stolen.
"""

import csv
import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LockHeld, McflowError
from .fileio import load_surface, write_curve_json, write_obj
from .flow import (
    FlowConfig,
    FlowTrajectory,
    RemeshEvent,
    RemeshPolicy,
    Snapshot,
)

LOCK_NAME = ".lock"


@contextmanager
def output_lock(directory):
    """Exclusive ownership of an output directory via an O_EXCL file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(
            f"{lock_path} exists; another invocation owns this directory "
            "(remove the file if that run is dead)"
        ) from None
    try:
        os.write(fd, b"mcflow\n")
        os.close(fd)
        yield directory
    finally:
        try:
            os.unlink(lock_path)
        except FileNotFoundError:
            pass


def _encode_array(values):
    return [float(v) if np.isfinite(v) else None for v in values]


def _decode_array(values):
    return np.asarray(
        [np.nan if v is None else float(v) for v in values], dtype=float
    )


def sanitize(obj):
    """Make a report JSON-safe: arrays to lists, non-finite floats to
    null, dataclass-ish objects via their to_dict."""
    if hasattr(obj, "to_dict"):
        return sanitize(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(payload, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sanitize(payload), fh, sort_keys=True, indent=1,
                  allow_nan=False)
        fh.write("\n")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def trajectory_manifest(trajectory, snapshot_files=None, parameters=None):
    """The deterministic manifest dict (no timestamps, sorted on write)."""
    cfg = trajectory.config
    manifest = {
        "version": __version__,
        "n": trajectory.n,
        "status": trajectory.status,
        "stop_reasons": list(trajectory.stop_reasons),
        "estimated_T": trajectory.estimated_T,
        "rate_exponent": trajectory.rate_exponent,
        "fit_residual": trajectory.fit_residual,
        "provenance": dict(trajectory.provenance),
        "config": {
            "scheme": cfg.scheme,
            "c_stab": cfg.c_stab,
            "dt_max": cfg.dt_max,
            "dt_min": cfg.dt_min,
            "a_max_factor": cfg.a_max_factor,
            "t_end": cfg.t_end,
            "snapshot_stride": cfg.snapshot_stride,
            "p_extra": list(cfg.p_extra),
            "remesh": {
                "enabled": cfg.remesh.enabled,
                "target_fraction": cfg.remesh.target_fraction,
                "split_factor": cfg.remesh.split_factor,
                "collapse_factor": cfg.remesh.collapse_factor,
                "relax_passes": cfg.remesh.relax_passes,
            },
        },
        "records": {
            "t": _encode_array(trajectory.times),
            "dt": _encode_array(trajectory.dts),
            "columns": {
                k: _encode_array(v) for k, v in trajectory.columns.items()
            },
            "cumulative": {
                k: _encode_array(v) for k, v in trajectory.cumulative.items()
            },
        },
        "snapshots": [
            {"row": s.row, "time": s.time,
             "file": None if snapshot_files is None else snapshot_files[i]}
            for i, s in enumerate(trajectory.snapshots)
        ],
        "remesh_events": [
            {
                "row": ev.row,
                "time": ev.time,
                "vertices_before": ev.vertices_before,
                "vertices_after": ev.vertices_after,
                "moments_before": sanitize(ev.moments_before),
                "moments_after": sanitize(ev.moments_after),
            }
            for ev in trajectory.remesh_events
        ],
    }
    if parameters:
        manifest["parameters"] = sanitize(parameters)
    return manifest


def save_trajectory(trajectory, directory, parameters=None, force=False):
    """Write manifest.json, series.csv and the snapshot files."""
    directory = Path(directory)
    if (directory / "manifest.json").exists() and not force:
        raise McflowError(
            f"{directory} already holds a trajectory (pass force to replace)"
        )
    with output_lock(directory):
        snap_dir = directory / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        files = []
        for i, snap in enumerate(trajectory.snapshots):
            if snap.surface is None:
                files.append(None)
                continue
            if trajectory.n == 1:
                name = f"t_{i:06d}.curve.json"
                write_curve_json(snap_dir / name, snap.surface)
            else:
                name = f"t_{i:06d}.obj"
                write_obj(snap_dir / name, snap.surface)
            files.append(f"snapshots/{name}")
        write_json(trajectory_manifest(trajectory, files, parameters),
                   directory / "manifest.json")
        series_csv(trajectory, directory / "series.csv")
    return directory


def load_trajectory(directory):
    """Rebuild a FlowTrajectory (snapshot geometry revalidated)."""
    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    records = manifest["records"]
    cfg_d = dict(manifest["config"])
    remesh = RemeshPolicy(**cfg_d.pop("remesh"))
    cfg_d["p_extra"] = tuple(cfg_d["p_extra"])
    config = FlowConfig(remesh=remesh, **cfg_d)

    snapshots = []
    for entry in manifest["snapshots"]:
        surface = None
        if entry["file"]:
            surface = load_surface(directory / entry["file"])
        snapshots.append(Snapshot(entry["row"], entry["time"], surface))

    events = [
        RemeshEvent(
            ev["row"], ev["time"], ev["vertices_before"],
            ev["vertices_after"],
            {k: (np.nan if v is None else v)
             for k, v in ev["moments_before"].items()},
            {k: (np.nan if v is None else v)
             for k, v in ev["moments_after"].items()},
        )
        for ev in manifest["remesh_events"]
    ]

    return FlowTrajectory(
        n=manifest["n"],
        times=_decode_array(records["t"]),
        dts=_decode_array(records["dt"]),
        columns={k: _decode_array(v) for k, v in records["columns"].items()},
        cumulative={
            k: _decode_array(v) for k, v in records["cumulative"].items()
        },
        snapshots=snapshots,
        status=manifest["status"],
        stop_reasons=list(manifest["stop_reasons"]),
        remesh_events=events,
        config=config,
        estimated_T=manifest["estimated_T"],
        rate_exponent=manifest["rate_exponent"],
        fit_residual=manifest["fit_residual"],
        provenance=dict(manifest["provenance"]),
    )


def series_csv(trajectory, path):
    """One row per record: t, dt, every column, every cumulative."""
    path = Path(path)
    col_keys = sorted(trajectory.columns)
    cum_keys = sorted(trajectory.cumulative)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "dt"] + col_keys + [f"cum:{k}" for k in cum_keys]
        )
        for i in range(trajectory.row_count):
            row = [repr(float(trajectory.times[i])),
                   repr(float(trajectory.dts[i]))]
            for k in col_keys:
                row.append(_csv_value(trajectory.columns[k][i]))
            for k in cum_keys:
                row.append(_csv_value(trajectory.cumulative[k][i]))
            writer.writerow(row)
    return path


def _csv_value(v):
    return "" if not np.isfinite(v) else repr(float(v))


def monitor_csv(report, path):
    """Monitor series as CSV: t, instantaneous, cumulative."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "instantaneous", "cumulative"])
        for t, inst, cum in zip(report.times, report.instantaneous,
                                report.cumulative):
            writer.writerow(
                [repr(float(t)), _csv_value(inst), _csv_value(cum)]
            )
    return path
