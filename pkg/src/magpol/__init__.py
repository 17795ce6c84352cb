"""Magnon-polariton modelling: Kittel magnons coupled to a resonator photon,
forward dispersions and transmission spectra, and the matching fits."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_GAMMA_OVER_2PI,
    CouplingParams,
    DiamagneticSpec,
    MagnonParams,
    ModelVariant,
    bright_mode_coupling,
    collective_coupling,
    coupling_ratio,
    diamagnetic_D,
    kittel_frequency,
    normalized_coupling,
    rescaled_coupling,
    spin_count,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FitError,
    MagpolError,
    NoGoError,
    SingularityError,
    SupercriticalError,
    UnidentifiableError,
)
from .open_system import (
    DampingParams,
    Regime,
    RegimeReport,
    classify_regime,
    complex_eigenfrequencies,
    cooperativity,
    rwa_frequencies,
    rwa_linewidths,
)
from .solver import (
    BranchPair,
    PolaritonModel,
    bloch_siegert_shift,
    critical_coupling,
    det_hopfield,
    dispersion,
    hopfield_matrix,
    polariton_frequencies_eig,
    polariton_frequencies_quartic,
    trk_analysis,
)
from .spectrum import (
    ResonatorLineShape,
    SpectrumGrid,
    add_noise,
    bare_s21,
    coupled_s21,
    normalize_grid,
    synthesize_grid,
    total_Q,
)
