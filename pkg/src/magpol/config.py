"""Flat JSON run configuration.

Every physical quantity carries its unit in the key name (``f_p_GHz``,
``mu0_H_mT``, ``tau_ns``); dimensionless entries have no suffix.  Unknown
keys are rejected so that a misspelt unit never silently falls back to a
default.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import (
    CouplingParams,
    DiamagneticSpec,
    MagnonParams,
    ModelVariant,
    collective_coupling,
    bright_mode_coupling,
)
from .exceptions import ConfigError, MagpolError
from .open_system import DampingParams
from .solver import PolaritonModel
from .spectrum import ResonatorLineShape

__all__ = ["RunConfig", "load_config", "parse_config"]

_NUMBER = (int, float)


@dataclass
class RunConfig:
    # model
    variant: str = "dicke"
    f_p_GHz: float = 5.041
    mu0_Meff_T: float = 1.108
    gamma_GHz_per_T: float = 28.0
    G_eff_MHz: float | None = None
    g_s_Hz: float | None = None
    N_spins: float | None = None
    n_stripes: int | None = None
    beta_dia_rad2_Hz2: float | None = None
    B_suppression: float | None = None
    # damping and resonator
    kappa_p_MHz: float | None = None
    kappa_m_MHz: float | None = None
    Q_int: float = 1.0e4
    Q_ext: float = 5625.0
    phi_rad: float = 0.0
    env_amp: float = 1.0
    env_phase_rad: float = 0.0
    tau_ns: float = 0.0
    # grids
    field_min_mT: float = 0.0
    field_max_mT: float = 145.0
    field_points: int = 291
    freq_min_GHz: float = 4.4
    freq_max_GHz: float = 5.6
    freq_points: int = 601
    reference_field_mT: float | None = None
    snr_dB: float | None = None
    seed: int = 0
    # fitting
    input_path: str | None = None
    fit_kind: str = "dispersion"
    free: list | None = None
    init_f_p_GHz: float | None = None
    init_mu0_Meff_T: float | None = None
    init_G_eff_MHz: float | None = None
    init_beta_dia_rad2_Hz2: float | None = None
    # single-point analyses
    mu0_H_mT: float | None = None
    f_m_GHz: float | None = None
    D_MHz: float | None = None
    # Bloch-Siegert sweeps
    bs_full_variant: str = "dicke"
    bs_G_eff_MHz_list: list | None = None
    bs_fields_mT: list | None = None
    bs_branch: str = "lower"
    # sqrt(n) scaling
    scaling_n: list | None = None
    scaling_G_eff_MHz: list | None = None
    scaling_f_p_GHz: float | list | None = None
    # provenance: directory of the config file, for relative paths
    base_dir: str = field(default=".", repr=False)

    # -- derived objects ------------------------------------------------------

    @property
    def f_p(self):
        return self.f_p_GHz * 1e9

    def magnon(self):
        return MagnonParams(mu0_Meff=self.mu0_Meff_T, gamma_over_2pi=self.gamma_GHz_per_T * 1e9)

    def coupling(self):
        chain = (self.g_s_Hz, self.N_spins, self.n_stripes)
        if self.G_eff_MHz is not None:
            G = self.G_eff_MHz * 1e6
            if None not in chain:
                expected = bright_mode_coupling(collective_coupling(self.g_s_Hz, self.N_spins), self.n_stripes)
                if not math.isclose(G, expected, rel_tol=1e-9):
                    raise ConfigError(
                        f"G_eff_MHz={self.G_eff_MHz} disagrees with g_s*sqrt(N*n)={expected / 1e6} MHz",
                        key="G_eff_MHz",
                    )
            return CouplingParams(G_eff=G)
        if None in chain:
            raise ConfigError("coupling needs G_eff_MHz or all of g_s_Hz, N_spins, n_stripes",
                              key="G_eff_MHz")
        return CouplingParams.from_spins(*chain)

    def diamagnetic(self):
        if self.beta_dia_rad2_Hz2 is not None and self.B_suppression is not None:
            raise ConfigError("give at most one of beta_dia_rad2_Hz2 and B_suppression",
                              key="B_suppression")
        if self.beta_dia_rad2_Hz2 is not None:
            return DiamagneticSpec.from_beta(self.beta_dia_rad2_Hz2)
        if self.B_suppression is not None:
            return DiamagneticSpec.from_suppression(self.B_suppression)
        return DiamagneticSpec.none()

    def model(self, variant=None, G_eff=None):
        coupling = self.coupling() if G_eff is None else CouplingParams(G_eff=G_eff)
        return PolaritonModel(
            f_p=self.f_p,
            coupling=coupling,
            magnon=self.magnon(),
            dia=self.diamagnetic(),
            variant=ModelVariant(variant or self.variant),
        )

    def damping(self, required=True):
        if self.kappa_m_MHz is None:
            if required:
                raise ConfigError("kappa_m_MHz is required", key="kappa_m_MHz")
            return None
        # photon loss defaults to the loaded resonator HWHM
        kp = self.kappa_p_MHz * 1e6 if self.kappa_p_MHz is not None else self.shape().kappa_tot
        return DampingParams(kp, self.kappa_m_MHz * 1e6)

    def shape(self):
        return ResonatorLineShape(
            f_r=self.f_p, Q_int=self.Q_int, Q_ext_mag=self.Q_ext, phi=self.phi_rad,
            env_amp=self.env_amp, env_phase=self.env_phase_rad, tau=self.tau_ns * 1e-9,
        )

    def field_axis(self):
        return np.linspace(self.field_min_mT, self.field_max_mT, self.field_points) * 1e-3

    def freq_axis(self):
        return np.linspace(self.freq_min_GHz, self.freq_max_GHz, self.freq_points) * 1e9

    def input_file(self):
        if self.input_path is None:
            raise ConfigError("input_path is required", key="input_path")
        p = Path(self.input_path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self):
        d = asdict(self)
        d.pop("base_dir")
        return d


def _check_type(key, value, annotation):
    optional = "None" in annotation
    if value is None:
        if optional:
            return value
        raise ConfigError(f"{key} must not be null", key=key)
    if annotation.startswith("list") or "| list" in annotation:
        if isinstance(value, list):
            return value
        if annotation.startswith("list"):
            raise ConfigError(f"{key} must be a list", key=key)
    if annotation.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string", key=key)
        return value
    if annotation.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer", key=key)
        return value
    if annotation.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, _NUMBER):
            raise ConfigError(f"{key} must be a number", key=key)
        return float(value)
    return value


_FIELDS = {f.name: f for f in fields(RunConfig) if f.name != "base_dir"}


def parse_config(doc, base_dir="."):
    """:class:`RunConfig` from a decoded JSON object, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}", key=unknown[0])
    kw = {k: _check_type(k, v, str(_FIELDS[k].type)) for k, v in doc.items()}
    cfg = RunConfig(base_dir=str(base_dir), **kw)
    try:
        ModelVariant(cfg.variant)
        ModelVariant(cfg.bs_full_variant)
    except ValueError as exc:
        raise ConfigError(str(exc), key="variant") from None
    if cfg.field_points < 1 or cfg.freq_points < 1:
        raise ConfigError("grid point counts must be >= 1", key="field_points")
    if cfg.fit_kind not in ("dispersion", "linewidths"):
        raise ConfigError(f"fit_kind must be 'dispersion' or 'linewidths', got {cfg.fit_kind!r}",
                          key="fit_kind")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", key=None) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path.name}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    try:
        return parse_config(doc, base_dir=path.parent)
    except MagpolError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
