"""SGT1 trajectory files.

Layout (bit-exact):
  * magic bytes ``SGT1``
  * one newline-terminated UTF-8 JSON header
    {"version": 1, "n_grid": int, "tau": float, "n_frames": int,
     "t0": float, "storage": "real"}
  * n_frames consecutive frames, each n_grid little-endian IEEE-754
    binary64 grid samples.

Frame times are implicit, t0 + k*tau, so only uniformly spaced
trajectories are storable; writing anything else is refused.  A JSON
sidecar (same stem, ``.meta.json``) carries run metadata: solver settings,
energy series, Picard iteration counts.  It is optional on read.
"""

import json
import os

import numpy as np

from .solver import Trajectory

MAGIC = b"SGT1"


class FormatError(ValueError):
    """Malformed SGT1 content."""


def meta_path(path):
    stem, _ = os.path.splitext(str(path))
    return stem + ".meta.json"


def write_sgt1(traj, path, metadata=None):
    """Write a trajectory (uniform frame spacing required) plus sidecar."""
    dt = np.diff(traj.times)
    if np.max(np.abs(dt - traj.tau)) > 1e-12 * max(traj.tau, 1.0):
        raise FormatError("SGT1 stores uniformly spaced frames only; "
                          "choose t_end as a multiple of tau")
    header = {"version": 1, "n_grid": int(traj.n_grid), "tau": float(traj.tau),
              "n_frames": int(traj.n_frames), "t0": float(traj.times[0]),
              "storage": "real"}
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write((json.dumps(header) + "\n").encode("utf-8"))
        f.write(np.ascontiguousarray(traj.samples, dtype="<f8").tobytes())
    meta = {"nonlinear": traj.nonlinear, "dealias": traj.dealias}
    if metadata:
        meta.update(metadata)
    with open(meta_path(path), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def read_sgt1(path):
    """Read an SGT1 file (+ sidecar when present) back into a Trajectory."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise FormatError("missing SGT1 magic")
        line = bytearray()
        while True:
            b = f.read(1)
            if not b:
                raise FormatError("truncated header")
            if b == b"\n":
                break
            line.extend(b)
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"bad header: {exc}") from None
        for key in ("version", "n_grid", "tau", "n_frames", "t0", "storage"):
            if key not in header:
                raise FormatError(f"header misses {key!r}")
        if header["version"] != 1 or header["storage"] != "real":
            raise FormatError("unsupported version/storage")
        n, F = int(header["n_grid"]), int(header["n_frames"])
        raw = f.read(8 * n * F)
        if len(raw) != 8 * n * F:
            raise FormatError("truncated frame data")
        samples = np.frombuffer(raw, dtype="<f8").reshape(F, n).copy()
    meta = {}
    if os.path.exists(meta_path(path)):
        with open(meta_path(path)) as f:
            meta = json.load(f)
    times = header["t0"] + header["tau"] * np.arange(F)
    return Trajectory(times, samples, header["tau"],
                      nonlinear=meta.get("nonlinear", True),
                      dealias=meta.get("dealias", True)), meta
