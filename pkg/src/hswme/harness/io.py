"""Binary basis and trajectory files.

Both formats share one layout::

    magic line | uint64 LE header length | JSON header | float64 LE payload

The header is compact JSON with sorted keys, so saving the same object twice
gives identical bytes.  Python floats in the header are written with their
shortest round-trip repr.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from ..fom import Trajectory
from ..model import BoundaryCondition, Grid, ModelParams
from ..pod import ReducedBasis

BASIS_MAGIC = b"HSWME-BASIS\n"
TRAJ_MAGIC = b"HSWME-TRAJ\n"
FORMAT_VERSION = 1
_F8 = np.dtype("<f8")


def _encode(magic: bytes, header: dict, payload: np.ndarray) -> bytes:
    text = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    body = np.ascontiguousarray(payload, dtype=_F8).tobytes()
    return magic + struct.pack("<Q", len(text)) + text + body


def _decode_header(magic: bytes, data: bytes) -> tuple[dict, int]:
    """Parsed header and the byte offset where the payload starts."""
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.strip().decode()} file")
    pos = len(magic)
    if len(data) < pos + 8:
        raise ValueError("truncated header")
    (n,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) < pos + n:
        raise ValueError("truncated header")
    header = json.loads(data[pos:pos + n].decode())
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {header.get('version')!r}")
    return header, pos + n


def _read(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _write(path, data: bytes) -> None:
    with open(path, "wb") as f:
        f.write(data)


# --------------------------------------------------------------------------
# basis
# --------------------------------------------------------------------------

def encode_basis(basis: ReducedBasis) -> bytes:
    header = {
        "version": FORMAT_VERSION,
        "N": basis.n_moments,
        "r": basis.r,
        "provenance": basis.provenance,
        "singular_values": [float(s) for s in basis.singular_values],
    }
    return _encode(BASIS_MAGIC, header, basis.W)


def decode_basis(data: bytes) -> ReducedBasis:
    header, pos = _decode_header(BASIS_MAGIC, data)
    n, r = int(header["N"]), int(header["r"])
    payload = data[pos:]
    if len(payload) != n * r * _F8.itemsize:
        raise ValueError(f"payload has {len(payload)} bytes, header promises {n}x{r} floats")
    W = np.frombuffer(payload, dtype=_F8).reshape(n, r).astype(float)
    return ReducedBasis(W, np.array(header["singular_values"], dtype=float), header["provenance"])


def save_basis(path, basis: ReducedBasis) -> None:
    _write(path, encode_basis(basis))


def load_basis(path) -> ReducedBasis:
    return decode_basis(_read(path))


# --------------------------------------------------------------------------
# trajectory
# --------------------------------------------------------------------------

def _grid_dict(grid: Grid) -> dict:
    return {"n_cells": grid.n_cells, "x_min": grid.x_min, "x_max": grid.x_max, "bc": grid.bc.value}


def _params_dict(p: ModelParams) -> dict:
    return {"g": p.g, "nu": p.nu, "lam": p.lam, "n_moments": p.n_moments, "cfl": p.cfl,
            "friction_index": p.friction_index}


def trajectory_layout(n_frames: int, n_cells: int, n_moments: int) -> dict:
    frame = n_cells * (2 + n_moments)
    return {"n_frames": n_frames, "n_cells": n_cells, "n_moments": n_moments,
            "blocks": ["U", "V"], "dtype": "<f8", "order": "row-major",
            "frame_floats": frame}


def frame_offset(header: dict, payload_start: int, i: int) -> int:
    """Byte offset of frame ``i`` (0-based, negative counts from the end)."""
    lay = header["layout"]
    n = lay["n_frames"]
    if not -n <= i < n:
        raise IndexError(f"frame {i} out of range for {n} frames")
    return payload_start + (i % n) * lay["frame_floats"] * _F8.itemsize


def encode_trajectory(traj: Trajectory) -> bytes:
    nf, nx, _ = traj.U.shape
    n = traj.V.shape[2]
    header = {
        "version": FORMAT_VERSION,
        "grid": _grid_dict(traj.grid),
        "params": _params_dict(traj.params),
        "times": [float(t) for t in traj.times],
        "layout": trajectory_layout(nf, nx, n),
        "case": traj.case,
        "solver": traj.solver,
        "stride": traj.stride,
    }
    payload = np.concatenate([traj.U.reshape(nf, -1), traj.V.reshape(nf, -1)], axis=1)
    return _encode(TRAJ_MAGIC, header, payload)


def _split_frames(raw: np.ndarray, nx: int) -> tuple[np.ndarray, np.ndarray]:
    nf = raw.shape[0]
    U = raw[:, : 2 * nx].reshape(nf, nx, 2)
    V = raw[:, 2 * nx:].reshape(nf, nx, -1)
    return U.copy(), V.copy()


def decode_trajectory(data: bytes) -> Trajectory:
    header, pos = _decode_header(TRAJ_MAGIC, data)
    lay = header["layout"]
    nf, nx, n = lay["n_frames"], lay["n_cells"], lay["n_moments"]
    payload = data[pos:]
    if len(payload) != nf * lay["frame_floats"] * _F8.itemsize or lay["frame_floats"] != nx * (2 + n):
        raise ValueError("payload size does not match the header layout")
    if len(header["times"]) != nf:
        raise ValueError("header lists a different number of times than frames")
    raw = np.frombuffer(payload, dtype=_F8).reshape(nf, lay["frame_floats"])
    U, V = _split_frames(raw, nx)
    g = header["grid"]
    grid = Grid(g["n_cells"], g["x_min"], g["x_max"], BoundaryCondition(g["bc"]))
    return Trajectory(np.array(header["times"], dtype=float), U, V, ModelParams(**header["params"]),
                      grid, header["case"], header["stride"], header["solver"])


def save_trajectory(path, traj: Trajectory) -> None:
    _write(path, encode_trajectory(traj))


def load_trajectory(path) -> Trajectory:
    return decode_trajectory(_read(path))


def read_trajectory_header(path) -> tuple[dict, int]:
    """Header and payload offset, reading only the start of the file."""
    with open(path, "rb") as f:
        head = f.read(len(TRAJ_MAGIC) + 8)
        if len(head) == len(TRAJ_MAGIC) + 8:
            (n,) = struct.unpack_from("<Q", head, len(TRAJ_MAGIC))
            head += f.read(n)
    return _decode_header(TRAJ_MAGIC, head)


def read_frame(path, i: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Time, U and V of one frame, seeking straight to it."""
    header, start = read_trajectory_header(path)
    lay = header["layout"]
    with open(path, "rb") as f:
        f.seek(frame_offset(header, start, i))
        raw = np.frombuffer(f.read(lay["frame_floats"] * _F8.itemsize), dtype=_F8)
    if raw.size != lay["frame_floats"]:
        raise ValueError("truncated trajectory payload")
    U, V = _split_frames(raw[None, :], lay["n_cells"])
    return header["times"][i], U[0], V[0]
