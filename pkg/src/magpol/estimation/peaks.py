"""Peak (or dip) location in single traces and across a field sweep."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.signal import find_peaks, peak_prominences, peak_widths

from .._validation import as_1d, check_axis
from ..exceptions import DomainError

__all__ = ["GRID_PEAKS", "Peak", "PeakConfig", "PeakSet", "extract_peaks", "extract_grid_peaks"]

MIN_SAMPLES = 8


class Peak(NamedTuple):
    frequency: float
    width: float  # HWHM, Hz
    prominence: float


@dataclass(frozen=True)
class PeakConfig:
    """``threshold_mads``: peaks must rise this many median absolute deviations
    above the median of the trace.  ``prominence_sigmas`` (optional) also
    requires the prominence to exceed that many noise standard deviations,
    the noise being estimated from point-to-point differences.  ``dips``
    looks for minima instead."""

    threshold_mads: float = 3.0
    max_peaks: int | None = None
    dips: bool = False
    prominence_sigmas: float | None = None
    min_width_samples: float | None = None


# defaults for polariton dips in field-sweep grids
GRID_PEAKS = PeakConfig(dips=True, max_peaks=2, prominence_sigmas=8.0, min_width_samples=2.0)


@dataclass
class PeakSet:
    field_axis: np.ndarray
    peaks: list = field(default_factory=list)  # one list of Peak per field

    def to_points(self):
        """Flatten to ``(mu0_H, frequency, hwhm)`` rows."""
        rows = [(h, p.frequency, p.width) for h, ps in zip(self.field_axis, self.peaks) for p in ps]
        return np.array(rows, dtype=float).reshape(-1, 3)


def noise_sigma(y):
    """Robust white-noise level from the MAD of first differences."""
    d = np.diff(y)
    return 1.4826 * float(np.median(np.abs(d - np.median(d)))) / np.sqrt(2.0)


def _parabolic(y, i):
    if i <= 0 or i >= y.size - 1:
        return 0.0, y[i]
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2.0 * b + c
    if denom == 0:
        return 0.0, b
    delta = 0.5 * (a - c) / denom
    return delta, b - 0.25 * (a - c) * delta


def extract_peaks(freq, trace, config=None):
    """Local maxima of ``trace`` above ``median + k * MAD``, refined by
    three-point parabolic interpolation and sorted by frequency.

    Widths are the half-maximum half-widths measured against each peak's
    prominence base.
    """
    config = config or PeakConfig()
    f = check_axis("freq", freq)
    y = as_1d("trace", trace)
    if y.size != f.size:
        raise DomainError(f"trace length {y.size} != axis length {f.size}")
    if y.size < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {y.size}")
    if config.dips:
        y = -y
    med = np.median(y)
    mad = np.median(np.abs(y - med))
    threshold = med + config.threshold_mads * mad
    idx, _ = find_peaks(y)
    idx = idx[y[idx] > threshold]
    if idx.size == 0:
        return []
    prom, left_base, right_base = peak_prominences(y, idx)
    floor = 0.0 if config.prominence_sigmas is None else config.prominence_sigmas * noise_sigma(y)
    keep = prom > floor
    idx, prom = idx[keep], prom[keep]
    widths, _, _, _ = peak_widths(y, idx, rel_height=0.5)
    if config.min_width_samples is not None:
        keep = widths >= config.min_width_samples
        idx, prom, widths = idx[keep], prom[keep], widths[keep]
    if config.max_peaks is not None and idx.size > config.max_peaks:
        top = np.sort(np.argsort(-prom, kind="stable")[: config.max_peaks])
        idx, prom, widths = idx[top], prom[top], widths[top]
    step = np.gradient(f)
    out = []
    for i, w, p in zip(idx, widths, prom):
        delta, _ = _parabolic(y, i)
        fi = np.interp(i + delta, np.arange(f.size), f)
        out.append(Peak(float(fi), float(0.5 * w * step[i]), float(p)))
    return sorted(out, key=lambda p: p.frequency)


def extract_grid_peaks(grid, config=None):
    """Row-by-row :func:`extract_peaks` on ``|grid.values|``."""
    config = config or GRID_PEAKS
    mag = np.abs(grid.values)
    peaks = [extract_peaks(grid.freq_axis, row, config) for row in mag]
    return PeakSet(grid.field_axis.copy(), peaks)
