"""File formats: signal / TFR / ridge / index CSVs, the raw TFR container,
recordings, and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .decompose import ImtEstimate
from .errors import DataFormatError, InvalidParameterError
from .ridge import Ridge, RidgeSet
from .tfa import Signal, Tfr
from .walk import OTHER, TriaxialRecording

__all__ = [
    "read_signal_csv",
    "write_signal_csv",
    "write_tfr_csv",
    "write_tfr_raw",
    "read_tfr_raw",
    "write_ridges_csv",
    "read_fundamental_csv",
    "write_imt_csv",
    "write_index_csv",
    "read_recording_csv",
    "write_recording_csv",
    "write_manifest",
    "file_sha256",
]

_RAW_HEADER = struct.Struct("<IId")  # rows, cols, bin step


def read_signal_csv(path, fs: float | None = None) -> Signal:
    """Signal from a two-column ``t,value`` CSV or a headerless single
    column (which needs an explicit sampling rate)."""
    path = Path(path)
    try:
        with path.open() as fh:
            first = fh.readline()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    has_header = any(c.isalpha() for c in first)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if has_header else 0, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path} is not a numeric CSV: {exc}") from exc
    if data.shape[1] >= 2:
        t, v = data[:, 0], data[:, 1]
        if t.size < 2:
            raise DataFormatError(f"{path}: need at least two samples")
        dt = np.median(np.diff(t))
        if dt <= 0:
            raise DataFormatError(f"{path}: time column must increase")
        return Signal(v, 1.0 / dt, t0=float(t[0]))
    if fs is None:
        raise InvalidParameterError(
            f"{path} has no time column; a sampling rate is required"
        )
    return Signal(data[:, 0], fs)


def write_signal_csv(path, signal: Signal) -> None:
    out = np.column_stack([signal.times, signal.samples])
    np.savetxt(path, out, delimiter=",", header="t,value", comments="")


def write_tfr_csv(path, tfr: Tfr) -> None:
    """Magnitude matrix, one row per frame, no header."""
    np.savetxt(path, np.abs(tfr.values), delimiter=",")


def write_tfr_raw(path, tfr: Tfr) -> None:
    """16-byte header (u32 rows, u32 cols, f64 bin step, little endian)
    followed by row-major interleaved f64 (re, im) pairs."""
    n, m = tfr.values.shape
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(n, m, tfr.dxi))
        interleaved = np.empty((n, m, 2), dtype="<f8")
        interleaved[..., 0] = tfr.values.real
        interleaved[..., 1] = tfr.values.imag
        fh.write(interleaved.tobytes())


def read_tfr_raw(path, dt: float = 1.0, kind: str = "stft") -> Tfr:
    with open(path, "rb") as fh:
        header = fh.read(_RAW_HEADER.size)
        if len(header) != _RAW_HEADER.size:
            raise DataFormatError(f"{path}: truncated header")
        n, m, dxi = _RAW_HEADER.unpack(header)
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != n * m * 2:
        raise DataFormatError(f"{path}: expected {n * m * 2} floats, got {payload.size}")
    pairs = payload.reshape(n, m, 2)
    return Tfr(values=pairs[..., 0] + 1j * pairs[..., 1], dt=dt, dxi=dxi, kind=kind)


def write_ridges_csv(path, ridges: RidgeSet | Ridge) -> None:
    """Columns ``time_s, f1_hz, f2_hz, ...`` with one row per frame."""
    if isinstance(ridges, Ridge):
        rows = ridges.bins[None, :]
        dt, dxi = ridges.dt, ridges.dxi
    else:
        rows = ridges.rows
        dt, dxi = ridges.dt, ridges.dxi
    t = np.arange(rows.shape[1]) * dt
    out = np.column_stack([t] + [rows[k] * dxi for k in range(rows.shape[0])])
    header = "time_s," + ",".join(f"f{k + 1}_hz" for k in range(rows.shape[0]))
    np.savetxt(path, out, delimiter=",", header=header, comments="")


def read_fundamental_csv(path, dxi: float, n_bins: int, dt: float | None = None) -> Ridge:
    """Fundamental ridge from a ridge CSV (first frequency column)."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot read ridge CSV {path}: {exc}") from exc
    if data.shape[1] < 2:
        raise DataFormatError(f"{path}: expected time_s plus frequency columns")
    t, f = data[:, 0], data[:, 1]
    step = float(np.median(np.diff(t))) if (dt is None and t.size > 1) else (dt or 1.0)
    bins = np.clip(np.rint(f / dxi).astype(np.int64), 1, n_bins)
    return Ridge(bins=bins, dt=step, dxi=dxi)


def write_imt_csv(path, est: ImtEstimate, times: np.ndarray) -> None:
    """Per-sample component dump: composite plus per-harmonic tracks."""
    d = est.harmonic_order
    cols = [times, est.composite]
    names = ["time_s", "composite"]
    for j in range(d):
        cols.append(est.harmonic_amps[j])
        names.append(f"amp_{j + 1}")
    for j in range(d):
        cols.append(est.harmonic_phases[j])
        names.append(f"phase_{j + 1}")
    np.savetxt(
        path, np.column_stack(cols), delimiter=",", header=",".join(names), comments=""
    )


def write_index_csv(path, times: np.ndarray, values: np.ndarray, name: str) -> None:
    np.savetxt(
        path,
        np.column_stack([times, values]),
        delimiter=",",
        header=f"time_s,{name}",
        comments="",
    )


def read_recording_csv(path, subject_id: str | None = None) -> TriaxialRecording:
    """Recording from a ``time_s,x,y,z[,label]`` CSV."""
    path = Path(path)
    try:
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except (OSError, StopIteration) as exc:
        raise DataFormatError(f"cannot read recording {path}: {exc}") from exc
    cols = [c.strip().lower() for c in header]
    try:
        it, ix, iy, iz = (cols.index(c) for c in ("time_s", "x", "y", "z"))
    except ValueError as exc:
        raise DataFormatError(f"{path}: need columns time_s,x,y,z") from exc
    il = cols.index("label") if "label" in cols else None
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need at least two samples")
    try:
        t = np.array([float(r[it]) for r in rows])
        x = np.array([float(r[ix]) for r in rows])
        y = np.array([float(r[iy]) for r in rows])
        z = np.array([float(r[iz]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: malformed row: {exc}") from exc
    labels = (
        np.array([r[il].strip() for r in rows], dtype=object)
        if il is not None
        else np.full(t.size, OTHER, dtype=object)
    )
    dt = np.median(np.diff(t))
    if dt <= 0:
        raise DataFormatError(f"{path}: time column must increase")
    return TriaxialRecording(
        x=x, y=y, z=z, fs=1.0 / dt,
        subject_id=subject_id or path.stem, labels=labels,
    )


def write_recording_csv(path, rec: TriaxialRecording) -> None:
    t = np.arange(rec.n) / rec.fs
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "x", "y", "z", "label"])
        for i in range(rec.n):
            writer.writerow(
                [
                    f"{t[i]:.6f}",
                    repr(float(rec.x[i])),
                    repr(float(rec.y[i])),
                    repr(float(rec.z[i])),
                    rec.labels[i],
                ]
            )


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
