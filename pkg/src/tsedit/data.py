"""Datasets: synthetic sine waves and CSV ingestion with min-max scaling.

Everything downstream assumes series normalized to [0, 1]; per-channel
(min, max) pairs are kept so outputs can be mapped back to raw units.
"""

import csv
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    series: np.ndarray  # (N, L, D), normalized to [0, 1]
    norm: np.ndarray  # (D, 2) per-channel (min, max) of the raw data
    label: str = "data"

    @property
    def count(self):
        return self.series.shape[0]

    @property
    def seq_len(self):
        return self.series.shape[1]

    @property
    def channels(self):
        return self.series.shape[2]


def gen_sines(n, seq_len=24, channels=5, seed=0):
    """Random sine waves: a*sin(2*pi*f*j/L + phase) + 0.5 per channel.

    f in [1, 4], a in [0.2, 0.5], phase in [0, 2*pi); amplitudes at most
    0.5 keep every value inside [0, 1], so norm is the identity.
    """
    if min(n, seq_len, channels) < 1:
        raise DataError("n, seq_len and channels must all be >= 1")
    rng = np.random.default_rng(seed)
    freq = rng.uniform(1.0, 4.0, size=(n, channels))
    amp = rng.uniform(0.2, 0.5, size=(n, channels))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, channels))
    j = np.arange(seq_len)
    args = 2.0 * np.pi * freq[:, None, :] * j[None, :, None] / seq_len + phase[:, None, :]
    series = amp[:, None, :] * np.sin(args) + 0.5
    norm = np.tile([0.0, 1.0], (channels, 1))
    return Dataset(series=series, norm=norm, label="sines")


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = None
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        header = rows[0]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header only, no data rows") from None
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {width}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from exc
    return data, header


def load_csv(path, seq_len, channels=None):
    """Load numeric CSV rows into non-overlapping windows of length seq_len.

    One timestep per row, one channel per column, optional header row
    (detected by a non-numeric first row). Channels are min-max scaled
    over the whole file; constant channels map to 0.5.
    """
    data, _ = _read_rows(path)
    if channels is not None and data.shape[1] != channels:
        raise DataError(f"{path}: found {data.shape[1]} columns, expected {channels}")
    rows = data.shape[0]
    if rows % seq_len != 0:
        raise DataError(f"{path}: {rows} rows is not a multiple of window length {seq_len}")
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    norm = np.stack([lo, hi], axis=1)
    span = hi - lo
    degenerate = span == 0.0
    scaled = np.empty_like(data)
    scaled[:, ~degenerate] = (data[:, ~degenerate] - lo[~degenerate]) / span[~degenerate]
    scaled[:, degenerate] = 0.5
    series = scaled.reshape(rows // seq_len, seq_len, data.shape[1])
    return Dataset(series=series, norm=norm, label="csv")


def denormalize(series, norm):
    """Inverse min-max scaling; constant channels map back to their value."""
    series = np.asarray(series, dtype=float)
    norm = np.asarray(norm, dtype=float)
    if norm.shape != (series.shape[-1], 2):
        raise DataError(f"norm shape {norm.shape} does not match {series.shape[-1]} channels")
    lo = norm[:, 0]
    span = norm[:, 1] - lo
    out = series * span + lo
    degenerate = span == 0.0
    if degenerate.any():
        out[..., degenerate] = lo[degenerate]
    return out
