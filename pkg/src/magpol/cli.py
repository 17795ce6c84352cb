"""``magpol`` command line: simulate, fit, bloch-siegert, report, scaling.

Exit codes: 0 when every requested computation succeeded and its outputs
were written, 1 for a computational failure (non-convergence, supercritical
model, no-go condition), 2 for configuration or input-format errors.  Any
failure prints one JSON line ``{"error", "message", "key"}`` to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .core import ModelVariant, coupling_ratio, diamagnetic_D, kittel_frequency, rescaled_coupling
from .estimation import (
    extract_grid_peaks,
    fit_bs_scaling,
    fit_dispersion,
    fit_linewidths,
    fit_sqrt_n_scaling,
    infer_gs,
    read_points,
)
from .estimation.dispersion import build_model
from .estimation.io import PointTable
from .exceptions import ConfigError, ConvergenceError, DomainError, MagpolError, NoGoError, SupercriticalError
from .open_system import classify_regime
from .solver import bloch_siegert_curve, critical_coupling, dispersion_arrays, trk_analysis, variant_branches
from .spectrum import add_noise, normalize_grid, read_grid, synthesize_grid, write_grid

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DISPERSION_COLUMNS = ("mu0_H_mT", "f_lower_GHz", "f_upper_GHz", "photon_frac_lower", "photon_frac_upper")
BS_COLUMNS = ("mu0_H_mT", "delta_f_BS_lower_MHz", "delta_f_BS_upper_MHz", "status")


class CommandFailed(Exception):
    """Outputs were written but some computation failed; carries the reason."""

    def __init__(self, error):
        super().__init__(str(error))
        self.error = error


def _r(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


# -- simulate ------------------------------------------------------------------

def write_dispersion_csv(path, d):
    rows = [
        [_r(h * 1e3), _r(lo / 1e9), _r(up / 1e9), _r(pl), _r(pu)]
        for h, lo, up, pl, pu in zip(
            d["mu0_H"], d["f_lower"], d["f_upper"], d["photon_frac_lower"], d["photon_frac_upper"]
        )
    ]
    _write_csv(path, DISPERSION_COLUMNS, rows)


def cmd_simulate(cfg, out, emit_plots=False):
    model = cfg.model()
    shape = cfg.shape()
    damping = cfg.damping()
    h, f = cfg.field_axis(), cfg.freq_axis()
    raw = synthesize_grid(shape, model, damping, h, f)
    if cfg.snr_dB is not None:
        raw = add_noise(raw, cfg.snr_dB, cfg.seed)
    ref = cfg.field_min_mT if cfg.reference_field_mT is None else cfg.reference_field_mT
    norm = normalize_grid(raw, ref * 1e-3)
    side = {"variant": model.variant.value, "seed": cfg.seed, "snr_dB": cfg.snr_dB}
    written = write_grid(norm, out / "grid", side)
    written += write_grid(raw, out / "grid_raw", side)
    d = dispersion_arrays(model, h)
    write_dispersion_csv(out / "dispersion.csv", d)
    written.append(out / "dispersion.csv")
    meta = {
        "command": "simulate",
        "version": __version__,
        "config": cfg.to_dict(),
        "variant": model.variant.value,
        "G_eff_MHz": model.G_eff / 1e6,
        "kappa_p_MHz": damping.kappa_p / 1e6,
        "kappa_m_MHz": damping.kappa_m / 1e6,
        "reference_field_mT": norm.reference_field * 1e3,
        "files": sorted(p.name for p in written),
    }
    _write_json(out / "metadata.json", meta)
    if emit_plots:
        from .plots import plot_curves, plot_grid

        plot_grid(out / "grid.svg", norm, "|dS21|")
        plot_curves(out / "dispersion.svg", h * 1e3,
                    {"lower": d["f_lower"] / 1e9, "upper": d["f_upper"] / 1e9},
                    "mu0 H (mT)", "f (GHz)")


# -- fit -----------------------------------------------------------------------

def _load_observations(path):
    """Points table from either a points/dispersion CSV or a grid file."""
    first = Path(path).read_text().split("\n", 1)[0]
    cells = [c.strip() for c in first.split(",")]
    if len(cells) >= 2 and cells[0] == "mu0_H_mT":
        try:
            float(cells[1])
            is_grid = True
        except ValueError:
            is_grid = False
    else:
        is_grid = Path(path).suffix == ".json"
    if not is_grid:
        return read_points(path), "points"
    grid = read_grid(path)
    peaks = extract_grid_peaks(grid)
    pts = peaks.to_points()
    if pts.shape[0] == 0:
        raise DomainError(f"{path}: no spectral features found in grid")
    table = PointTable(pts[:, 0], pts[:, 1], [None] * pts.shape[0], pts[:, 2])
    return table, "grid" + ("_normalized" if grid.reference_field is not None else "")


def cmd_fit(cfg, out, emit_plots=False):
    path = cfg.input_file()
    table, source = _load_observations(path)
    variant = ModelVariant(cfg.variant)
    gamma = cfg.gamma_GHz_per_T * 1e9
    failure = None
    if cfg.fit_kind == "linewidths":
        init = {k: v for k, v in (
            ("G_eff", None if cfg.init_G_eff_MHz is None else cfg.init_G_eff_MHz * 1e6),
            ("kappa_p", None if cfg.kappa_p_MHz is None else cfg.kappa_p_MHz * 1e6),
            ("kappa_m", None if cfg.kappa_m_MHz is None else cfg.kappa_m_MHz * 1e6),
        ) if v is not None}
        try:
            result = fit_linewidths(table.mu0_H, table.f, table.hwhm, cfg.f_p, cfg.mu0_Meff_T,
                                    branch=table.branch, gamma_over_2pi=gamma, init=init)
        except ConvergenceError as exc:
            result, failure = exc.result, exc
        model = None
    else:
        init = {k: v for k, v in (
            ("f_p", None if cfg.init_f_p_GHz is None else cfg.init_f_p_GHz * 1e9),
            ("mu0_Meff", cfg.init_mu0_Meff_T),
            ("G_eff", None if cfg.init_G_eff_MHz is None else cfg.init_G_eff_MHz * 1e6),
            ("beta_dia", cfg.init_beta_dia_rad2_Hz2),
        ) if v is not None}
        dropped = 0
        if variant is ModelVariant.HOPFIELD:
            # the beta-form A**2 term diverges at zero field
            keep = table.mu0_H != 0
            dropped = int(np.sum(~keep))
            table = PointTable(table.mu0_H[keep], table.f[keep],
                               [b for b, k in zip(table.branch, keep) if k], table.hwhm[keep])
        try:
            result = fit_dispersion(table.mu0_H, table.f, branch=table.branch, variant=variant,
                                    free=cfg.free, init=init, gamma_over_2pi=gamma)
        except ConvergenceError as exc:
            result, failure = exc.result, exc
        model = build_model(result.values, variant, gamma)
        result.extras["dropped_zero_field_points"] = dropped
    result.extras.update(kind=cfg.fit_kind, source=source, input=Path(path).name)

    if model is not None:
        tags = result.extras.get("branch_assignment", ["lower"] * len(table))
        lower, upper = variant_branches(model, table.mu0_H)
        pred = np.where(np.array(tags) == "upper", upper, lower)
        rows = [
            [_r(h * 1e3), _r(fo / 1e9), _r(fm / 1e9), _r((fo - fm) / 1e6), t]
            for h, fo, fm, t in zip(table.mu0_H, table.f, pred, tags)
        ]
        _write_csv(out / "fit_residuals.csv",
                   ("mu0_H_mT", "f_obs_GHz", "f_model_GHz", "residual_MHz", "branch"), rows)
        if emit_plots:
            from .plots import plot_curves

            hh = np.linspace(table.mu0_H.min(), table.mu0_H.max(), 400)
            lo, up = variant_branches(model, hh)
            plot_curves(out / "fit.svg", hh * 1e3, {"lower": lo / 1e9, "upper": up / 1e9},
                        "mu0 H (mT)", "f (GHz)", points=(table.mu0_H * 1e3, table.f / 1e9))
    # per-point labels live in the residual table
    result.extras.pop("branch_assignment", None)
    (out / "fit_result.json").write_text(result.to_json() + "\n")
    if failure is not None:
        raise CommandFailed(failure)


# -- bloch-siegert -------------------------------------------------------------

def _bs_full_variant(cfg, override):
    full = ModelVariant(override or cfg.bs_full_variant)
    if not full.counter_rotating:
        raise ConfigError("the Bloch-Siegert comparison needs a counter-rotating variant "
                          "(dicke or hopfield)", key="bs_full_variant")
    return full


def cmd_bloch_siegert(cfg, out, emit_plots=False, variant_override=None):
    full = _bs_full_variant(cfg, variant_override)
    model = cfg.model(variant=full)
    h = cfg.field_axis()
    rows, lows, ups = [], [], []
    failed = None
    for hv in h:
        try:
            dl, du = (float(x) for x in bloch_siegert_curve(model, hv, full))
            status = "ok"
        except SupercriticalError as exc:
            dl = du = math.nan
            status = "supercritical"
            failed = failed or exc
        lows.append(dl)
        ups.append(du)
        fmt = (lambda x: "" if math.isnan(x) else _r(x / 1e6))
        rows.append([_r(hv * 1e3), fmt(dl), fmt(du), status])
    _write_csv(out / "bloch_siegert.csv", BS_COLUMNS, rows)
    lows, ups = np.array(lows), np.array(ups)

    def peak(arr):
        if np.all(np.isnan(arr)):
            return None, None
        i = int(np.nanargmax(np.abs(arr)))
        return float(arr[i] / 1e6), float(h[i] * 1e3)

    summary = {"full_variant": full.value, "G_eff_MHz": model.G_eff / 1e6, "f_p_GHz": cfg.f_p_GHz}
    for name, arr in (("lower", lows), ("upper", ups)):
        v, at = peak(arr)
        summary[f"max_abs_{name}_MHz"] = None if v is None else abs(v)
        summary[f"signed_at_max_{name}_MHz"] = v
        summary[f"field_at_max_{name}_mT"] = at

    if cfg.bs_G_eff_MHz_list:
        fields_mT = cfg.bs_fields_mT or [65.0, 100.0, 140.0]
        lines = []
        for hm in fields_mT:
            samples = []
            for G in cfg.bs_G_eff_MHz_list:
                m = cfg.model(variant=full, G_eff=float(G) * 1e6)
                try:
                    dl, du = bloch_siegert_curve(m, hm * 1e-3, full)
                except SupercriticalError as exc:
                    failed = failed or exc
                    continue
                shift = float(dl if cfg.bs_branch == "lower" else du)
                samples.append((float(G) * 1e6, shift))
            entry = {"mu0_H_mT": float(hm), "samples": [
                {"G_eff_MHz": G / 1e6, "epsilon_sq_MHz": G**2 / cfg.f_p / 1e6, "delta_f_BS_MHz": s / 1e6}
                for G, s in samples
            ]}
            if len(samples) >= 2:
                line = fit_bs_scaling([(G**2 / cfg.f_p, s) for G, s in samples])
                entry.update(slope=line.slope, intercept_MHz=line.intercept / 1e6,
                             residual_MHz=line.residual / 1e6, r2=line.r2)
            lines.append(entry)
        summary["scaling"] = {"branch": cfg.bs_branch, "fields": lines}
    _write_json(out / "bloch_siegert.json", summary)
    if emit_plots:
        from .plots import plot_curves

        plot_curves(out / "bloch_siegert.svg", h * 1e3,
                    {"lower": lows / 1e6, "upper": ups / 1e6}, "mu0 H (mT)", "shift (MHz)")
    if failed is not None:
        raise CommandFailed(failed)


# -- report --------------------------------------------------------------------

def build_report(cfg):
    f_p = cfg.f_p
    if cfg.f_m_GHz is not None:
        f_m = cfg.f_m_GHz * 1e9
    elif cfg.mu0_H_mT is not None:
        f_m = float(kittel_frequency(cfg.mu0_H_mT * 1e-3, cfg.magnon()))
    else:
        f_m = f_p
    G = cfg.coupling().G_eff
    G_prime = rescaled_coupling(G, f_m, f_p)
    if cfg.D_MHz is not None:
        D = cfg.D_MHz * 1e6
    else:
        D = float(diamagnetic_D(cfg.diamagnetic(), f_m, G_prime))
    eta = coupling_ratio(G, f_p)
    trk = trk_analysis(G, f_m, D)
    G_c = critical_coupling(trk.B, f_p, f_m)
    report = {
        "f_p_GHz": f_p / 1e9,
        "f_m_GHz": f_m / 1e9,
        "G_eff_MHz": G / 1e6,
        "eta": eta.eta,
        "ultrastrong": eta.ultrastrong,
        "D_MHz": D / 1e6,
        "D_TRK_MHz": trk.D_TRK / 1e6,
        "B": trk.B,
        "G_c_GHz": G_c / 1e9,
        "G_c_over_G_eff": G_c / G if G > 0 else None,
        "regime": None,
        "cooperativity": None,
    }
    damping = cfg.damping(required=False)
    if damping is not None:
        r = classify_regime(G, damping)
        report["regime"] = r.regime.value
        report["cooperativity"] = _finite_or_none(r.cooperativity)
        report["kappa_p_MHz"] = damping.kappa_p / 1e6
        report["kappa_m_MHz"] = damping.kappa_m / 1e6
    return report


def cmd_report(cfg, out, emit_plots=False):
    _write_json(out / "report.json", build_report(cfg))


# -- scaling -------------------------------------------------------------------

def cmd_scaling(cfg, out, emit_plots=False):
    if not cfg.scaling_n or not cfg.scaling_G_eff_MHz:
        raise ConfigError("scaling needs scaling_n and scaling_G_eff_MHz", key="scaling_n")
    n = cfg.scaling_n
    G = [g * 1e6 for g in cfg.scaling_G_eff_MHz]
    if len(n) != len(G):
        raise ConfigError("scaling_n and scaling_G_eff_MHz differ in length", key="scaling_G_eff_MHz")
    fp = cfg.scaling_f_p_GHz if cfg.scaling_f_p_GHz is not None else cfg.f_p_GHz
    fps = [x * 1e9 for x in fp] if isinstance(fp, list) else [fp * 1e9] * len(n)
    if len(fps) != len(n):
        raise ConfigError("scaling_f_p_GHz differs in length from scaling_n", key="scaling_f_p_GHz")
    fit = fit_sqrt_n_scaling(list(zip(n, G, fps)))
    result = {"alpha_sqrtHz": fit.alpha, "residual_sqrtHz": fit.residual, "n_samples": fit.n_samples,
              "g_s_Hz": None}
    if cfg.N_spins is not None:
        result["g_s_Hz"] = infer_gs(fit.alpha, cfg.f_p, cfg.N_spins)
    _write_json(out / "scaling.json", result)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "bloch-siegert": cmd_bloch_siegert,
    "report": cmd_report,
    "scaling": cmd_scaling,
}


def build_parser():
    p = argparse.ArgumentParser(prog="magpol", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"magpol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--variant", choices=[v.value for v in ModelVariant], default=None)
        s.add_argument("--emit-plots", action="store_true", help="also write SVG renderings")
    return p


def _emit_error(exc, key=None):
    line = {"error": type(exc).__name__, "message": str(exc), "key": key}
    sys.stderr.write(json.dumps(line, sort_keys=True) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.variant is not None and args.command != "bloch-siegert":
            cfg.variant = args.variant
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "bloch-siegert":
            cmd_bloch_siegert(cfg, args.out, args.emit_plots, args.variant)
        else:
            COMMANDS[args.command](cfg, args.out, args.emit_plots)
    except ConfigError as exc:
        _emit_error(exc, exc.key)
        return EXIT_CONFIG
    except CommandFailed as exc:
        _emit_error(exc.error)
        return EXIT_FAIL
    except NoGoError as exc:
        _emit_error(exc)
        return EXIT_FAIL
    except (DomainError, OSError) as exc:
        _emit_error(exc)
        return EXIT_CONFIG
    except MagpolError as exc:
        _emit_error(exc)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
