"""Inverse problems: peaks, resonator traces, dispersions, linewidths and scaling laws."""
from .dispersion import DispersionFit, build_model, fit_dispersion
from .io import PointTable, read_points, write_points
from .linewidths import LinewidthFit, fit_linewidths
from .peaks import Peak, PeakConfig, PeakSet, extract_grid_peaks, extract_peaks
from .resonator import ResonatorFit, fit_bare_resonator
from .results import FitResult
from .scaling import (
    BlochSiegertScaling,
    SqrtNScaling,
    fit_bs_scaling,
    fit_sqrt_n_scaling,
    infer_gs,
)

__all__ = [
    "FitResult",
    "Peak",
    "PeakConfig",
    "PeakSet",
    "extract_peaks",
    "extract_grid_peaks",
    "fit_bare_resonator",
    "ResonatorFit",
    "fit_dispersion",
    "build_model",
    "DispersionFit",
    "fit_linewidths",
    "LinewidthFit",
    "fit_sqrt_n_scaling",
    "infer_gs",
    "fit_bs_scaling",
    "SqrtNScaling",
    "BlochSiegertScaling",
    "PointTable",
    "read_points",
    "write_points",
]
