"""Forward synthesis of notch-resonator transmission and (field x frequency) grids.

The magnon-coupled line shape is the input-output result of a feedline-driven
photon mode hybridized with the Kittel mode in the rotating-wave
approximation: the resonator's Lorentzian denominator picks up the magnon
self-energy ``G'**2 / (i (f - f_m) + kappa_m)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._validation import check_axis, check_positive
from .core import rescaled_coupling
from .exceptions import DomainError, SingularityError

__all__ = [
    "ResonatorLineShape",
    "SpectrumGrid",
    "total_Q",
    "bare_s21",
    "coupled_s21",
    "synthesize_grid",
    "normalize_grid",
    "add_noise",
    "write_grid",
    "read_grid",
    "write_grid_csv",
    "read_grid_csv",
]


def total_Q(Q_int, Q_ext_mag):
    """Loaded quality factor, the harmonic combination of internal and external Q."""
    check_positive("Q_int", Q_int)
    check_positive("Q_ext_mag", Q_ext_mag)
    return 1.0 / (1.0 / Q_ext_mag + 1.0 / Q_int)


@dataclass(frozen=True)
class ResonatorLineShape:
    """Notch resonator plus measurement environment.

    ``env_amp * exp(i env_phase) * exp(-2 pi i f tau)`` multiplies the
    resonator response; ``phi`` is the impedance-mismatch rotation.
    """

    f_r: float
    Q_int: float = 1.0e4
    Q_ext_mag: float = 5625.0
    phi: float = 0.0
    env_amp: float = 1.0
    env_phase: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        check_positive("f_r", self.f_r)
        check_positive("Q_int", self.Q_int)
        # infinite Q_ext is a legal "decoupled resonator" limit
        if not self.Q_ext_mag > 0:
            raise DomainError(f"Q_ext_mag must be > 0, got {self.Q_ext_mag!r}")

    @property
    def Q(self):
        if math.isinf(self.Q_ext_mag):
            return self.Q_int
        return total_Q(self.Q_int, self.Q_ext_mag)

    @property
    def kappa_tot(self):
        """Loaded HWHM (Hz)."""
        return self.f_r / (2.0 * self.Q)

    @property
    def kappa_ext(self):
        return self.f_r / (2.0 * self.Q_ext_mag)

    def environment(self, f):
        f = np.asarray(f, dtype=float)
        return self.env_amp * np.exp(1j * self.env_phase) * np.exp(-2j * np.pi * f * self.tau)

    def to_dict(self):
        return {
            "f_r_GHz": self.f_r / 1e9,
            "Q_int": self.Q_int,
            "Q_ext": self.Q_ext_mag,
            "phi_rad": self.phi,
            "env_amp": self.env_amp,
            "env_phase_rad": self.env_phase,
            "tau_ns": self.tau * 1e9,
        }


def bare_s21(f, shape):
    """Transmission of the bare notch resonator at frequency(ies) ``f`` (Hz)."""
    f = np.asarray(f, dtype=float)
    Q = shape.Q
    ratio = 0.0 if math.isinf(shape.Q_ext_mag) else Q / shape.Q_ext_mag
    resonator = 1.0 - ratio * np.exp(1j * shape.phi) / (1.0 + 2j * Q * (f / shape.f_r - 1.0))
    return shape.environment(f) * resonator


def coupled_s21(f, mu0_H, shape, model, damping):
    """Transmission with the resonator hybridized with the magnon bright mode.

    Written in rate form: ``kappa_tot = f_r / 2Q`` and ``kappa_ext = f_r / 2Q_ext``
    so that the decoupled limit is :func:`bare_s21` to rounding.  The photon
    loss comes from ``shape`` (``damping.kappa_p`` is not used here); the
    coupling is the field-dependent ``G' = G_eff sqrt(f_m / f_r)``.
    ``f`` and ``mu0_H`` broadcast against each other.
    """
    f = np.asarray(f, dtype=float)
    if model.G_eff == 0:
        return bare_s21(np.broadcast_to(f, np.broadcast(f, np.asarray(mu0_H)).shape), shape)
    f_m = model.f_m(mu0_H)
    G_prime = rescaled_coupling(model.G_eff, f_m, shape.f_r)
    if math.isinf(shape.Q_ext_mag):
        return shape.environment(f) * np.ones(np.broadcast(f, f_m).shape)
    self_energy = G_prime**2 / (1j * (f - f_m) + damping.kappa_m)
    denom = shape.kappa_tot + 1j * (f - shape.f_r) + self_energy
    resonator = 1.0 - shape.kappa_ext * np.exp(1j * shape.phi) / denom
    return shape.environment(f) * resonator


@dataclass
class SpectrumGrid:
    """Transmission over ``field_axis`` (T, rows) x ``freq_axis`` (Hz, columns).

    ``reference_field`` is ``None`` for raw grids; normalized magnitude grids
    record the field of the row they were divided by.
    """

    field_axis: np.ndarray
    freq_axis: np.ndarray
    values: np.ndarray
    reference_field: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.field_axis = check_axis("field_axis", self.field_axis)
        self.freq_axis = check_axis("freq_axis", self.freq_axis)
        self.values = np.asarray(self.values)
        expected = (self.field_axis.size, self.freq_axis.size)
        if self.values.shape != expected:
            raise DomainError(f"values shape {self.values.shape} != axes {expected}")

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    @property
    def magnitude(self):
        return np.abs(self.values)

    def row(self, mu0_H):
        """Index of the row nearest to ``mu0_H``."""
        return int(np.argmin(np.abs(self.field_axis - mu0_H)))


def synthesize_grid(shape, model, damping, field_axis, freq_axis):
    """Complex :func:`coupled_s21` on the outer product of the two axes."""
    h = check_axis("field_axis", field_axis)
    f = check_axis("freq_axis", freq_axis)
    values = coupled_s21(f[None, :], h[:, None], shape, model, damping)
    return SpectrumGrid(h, f, np.ascontiguousarray(values))


def normalize_grid(grid, reference_field):
    """Magnitude grid ``|S21(H, f)| / |S21(H_ref, f)|`` using the row nearest ``reference_field``."""
    lo, hi = grid.field_axis[0], grid.field_axis[-1]
    if not (lo <= reference_field <= hi):
        raise DomainError(
            f"reference field {reference_field!r} T outside grid range [{lo!r}, {hi!r}]"
        )
    i = grid.row(reference_field)
    mag = np.abs(grid.values)
    ref = mag[i]
    if np.any(ref == 0):
        raise SingularityError("reference trace contains zeros; cannot normalize")
    meta = dict(grid.metadata, reference_row=i)
    return SpectrumGrid(
        grid.field_axis.copy(),
        grid.freq_axis.copy(),
        mag / ref[None, :],
        reference_field=float(grid.field_axis[i]),
        metadata=meta,
    )


def add_noise(grid, snr_db, seed):
    """Add circular complex Gaussian noise at ``snr_db`` below the mean signal power.

    Each row draws from its own stream spawned from ``(seed, row)``, so any
    row-parallel evaluation reproduces the sequential result bit for bit.
    Magnitude grids get complex noise added before the modulus is taken.
    ``snr_db = inf`` returns an unchanged copy.
    """
    if math.isnan(snr_db):
        raise DomainError("snr_db must not be NaN")
    values = np.asarray(grid.values)
    if math.isinf(snr_db) and snr_db > 0:
        return replace(grid, values=values.copy(), metadata=dict(grid.metadata))
    power = float(np.mean(np.abs(values) ** 2))
    sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0) / 2.0)
    noisy = np.empty(values.shape, dtype=complex)
    for i in range(values.shape[0]):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        z = rng.standard_normal((2, values.shape[1]))
        noisy[i] = values[i] + sigma * (z[0] + 1j * z[1])
    out = noisy if np.iscomplexobj(values) else np.abs(noisy)
    meta = dict(grid.metadata, noise_seed=int(seed), snr_dB=float(snr_db))
    return replace(grid, values=out, metadata=meta)


# -- file format -------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def write_grid_csv(path, field_axis, freq_axis, values):
    """One real matrix: header ``mu0_H_mT,<f_GHz>,...``, one row per field (mT)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu0_H_mT"] + [_fmt(f / 1e9) for f in freq_axis])
    for h, row in zip(field_axis, values):
        w.writerow([_fmt(h * 1e3)] + [_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_grid_csv(path):
    """Inverse of :func:`write_grid_csv`: ``(field_axis [T], freq_axis [Hz], values)``."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DomainError(f"{path}: empty grid file")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "mu0_H_mT":
        raise DomainError(f"{path}:1: header must start with 'mu0_H_mT'")
    try:
        freqs = np.array([float(c) for c in header[1:]]) * 1e9
    except ValueError:
        raise DomainError(f"{path}:1: frequency header cells must be GHz numbers") from None
    fields, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DomainError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            nums = [float(c) for c in row]
        except ValueError:
            raise DomainError(f"{path}:{lineno}: non-numeric cell") from None
        fields.append(nums[0] * 1e-3)
        values.append(nums[1:])
    if not fields:
        raise DomainError(f"{path}: grid has no data rows")
    return np.array(fields), freqs, np.array(values)


def write_grid(grid, stem, sidecar=None):
    """Write ``grid`` under path prefix ``stem``.

    Magnitude grids go to ``<stem>.csv``; complex grids to
    ``<stem>_mag.csv`` + ``<stem>_phase.csv`` (radians).  A JSON sidecar
    ``<stem>.json`` records normalization and ``metadata`` merged with
    ``sidecar``.  Returns the list of written paths.
    """
    stem = Path(stem)
    paths = []
    if grid.is_complex:
        for suffix, part in (("_mag", np.abs(grid.values)), ("_phase", np.angle(grid.values))):
            p = stem.with_name(stem.name + suffix + ".csv")
            write_grid_csv(p, grid.field_axis, grid.freq_axis, part)
            paths.append(p)
    else:
        p = stem.with_name(stem.name + ".csv")
        write_grid_csv(p, grid.field_axis, grid.freq_axis, grid.values)
        paths.append(p)
    meta = dict(grid.metadata)
    meta.update(sidecar or {})
    meta["complex"] = bool(grid.is_complex)
    meta["normalization"] = (
        None if grid.reference_field is None
        else {"reference_field_mT": grid.reference_field * 1e3}
    )
    p = stem.with_name(stem.name + ".json")
    p.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    paths.append(p)
    return paths


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def read_grid(path):
    """Read a grid written by :func:`write_grid`.

    ``path`` may be the sidecar ``.json``, the magnitude ``.csv`` or, for a
    bare CSV without sidecar, any file in the grid CSV format.
    """
    path = Path(path)
    if path.suffix == ".json":
        stem = path.with_suffix("")
    else:
        name = path.stem
        for suffix in ("_mag", "_phase"):
            if name.endswith(suffix):
                name = name[: -len(suffix)]
        stem = path.with_name(name)
    side = stem.with_name(stem.name + ".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    if meta.get("complex"):
        h, f, mag = read_grid_csv(stem.with_name(stem.name + "_mag.csv"))
        _, _, phase = read_grid_csv(stem.with_name(stem.name + "_phase.csv"))
        values = mag * np.exp(1j * phase)
    else:
        csv_path = stem.with_name(stem.name + ".csv") if path.suffix == ".json" else path
        h, f, values = read_grid_csv(csv_path)
    norm = meta.pop("normalization", None)
    meta.pop("complex", None)
    ref = None if not norm else norm["reference_field_mT"] * 1e-3
    return SpectrumGrid(h, f, values, reference_field=ref, metadata=meta)
