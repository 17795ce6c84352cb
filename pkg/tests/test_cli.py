import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import F_P, G_FIT, MEFF, BETA
from magpol.cli import main
from magpol.core import ModelVariant
from magpol.estimation import FitResult, read_points
from magpol.estimation.dispersion import build_model
from magpol.estimation.io import PointTable, write_points
from magpol.solver import variant_branches
from magpol.spectrum import read_grid

BASE = {
    "f_p_GHz": 5.041,
    "mu0_Meff_T": 1.108,
    "G_eff_MHz": 512.3,
    "kappa_m_MHz": 30.0,
    "field_points": 59,
    "freq_points": 401,
}


def run(tmp_path, command, cfg, *extra, name="cfg.json", out="out"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / out
    code = main([command, "--config", str(path), "--out", str(out_dir), *extra])
    return code, out_dir


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def stderr_json(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


# -- simulate ----------------------------------------------------------------------

def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, "simulate", BASE)
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"grid.csv", "grid.json", "grid_raw_mag.csv", "grid_raw_phase.csv", "grid_raw.json",
            "dispersion.csv", "metadata.json"} <= names
    rows = read_csv(out / "dispersion.csv")
    assert list(rows[0]) == ["mu0_H_mT", "f_lower_GHz", "f_upper_GHz",
                             "photon_frac_lower", "photon_frac_upper"]
    assert len(rows) == 59
    grid = read_grid(out / "grid.json")
    assert grid.values.shape == (59, 401)
    assert grid.reference_field == 0.0
    assert np.all(grid.values[0] == 1.0)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["variant"] == "dicke" and meta["config"]["G_eff_MHz"] == 512.3


def test_simulate_byte_identical(tmp_path):
    cfg = dict(BASE, snr_dB=30.0, seed=7)
    _, a = run(tmp_path, "simulate", cfg, out="a")
    _, b = run(tmp_path, "simulate", cfg, out="b")
    for p in sorted(a.iterdir()):
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name
    _, c = run(tmp_path, "simulate", cfg, "--seed", "8", out="c")
    assert (a / "grid.csv").read_bytes() != (c / "grid.csv").read_bytes()


def test_simulate_zero_coupling_rows_identical(tmp_path):
    code, out = run(tmp_path, "simulate", dict(BASE, G_eff_MHz=0.0))
    assert code == 0
    raw = read_grid(out / "grid_raw.json")
    assert np.all(raw.values == raw.values[0])
    assert np.all(read_grid(out / "grid.csv").values == 1.0)


def test_simulate_dip_loci_overlay_dispersion(tmp_path):
    # line shapes are RWA, so compare against the RWA dispersion written alongside
    cfg = dict(BASE, freq_points=2401, variant="rwa")
    code, out = run(tmp_path, "simulate", cfg)
    assert code == 0
    raw = read_grid(out / "grid_raw.json")
    disp = read_csv(out / "dispersion.csv")
    step = raw.freq_axis[1] - raw.freq_axis[0]
    kappa_p = F_P / 7200
    for row, d in zip(np.abs(raw.values), disp):
        f_dip = raw.freq_axis[int(np.argmin(row))]
        branches = [float(d["f_lower_GHz"]) * 1e9, float(d["f_upper_GHz"]) * 1e9]
        assert min(abs(f_dip - b) for b in branches) <= 0.5 * step + kappa_p


def test_simulate_requires_magnon_damping(tmp_path, capsys):
    cfg = dict(BASE)
    cfg.pop("kappa_m_MHz")
    code, _ = run(tmp_path, "simulate", cfg)
    assert code == 2
    assert stderr_json(capsys)["key"] == "kappa_m_MHz"


def test_simulate_plots_deterministic(tmp_path):
    _, a = run(tmp_path, "simulate", BASE, "--emit-plots", out="a")
    _, b = run(tmp_path, "simulate", BASE, "--emit-plots", out="b")
    for name in ("grid.svg", "dispersion.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / name).read_text().lstrip().startswith("<?xml")


# -- fit ---------------------------------------------------------------------------

def test_fit_dispersion_csv_round_trip(tmp_path):
    _, sim = run(tmp_path, "simulate", dict(BASE, field_min_mT=-145.0, field_points=145), out="sim")
    cfg = {"input_path": str(sim / "dispersion.csv")}
    code, out = run(tmp_path, "fit", cfg, name="fit.json", out="fit")
    assert code == 0
    res = FitResult.from_json((out / "fit_result.json").read_text())
    assert res.converged
    assert res["f_p"] == pytest.approx(F_P, rel=1e-7)
    assert res["mu0_Meff"] == pytest.approx(MEFF, rel=1e-7)
    assert res["G_eff"] == pytest.approx(G_FIT, rel=1e-7)
    assert res.units["G_eff"] == "Hz"
    resid = read_csv(out / "fit_residuals.csv")
    assert len(resid) == 2 * 145 - 1  # the H = 0 lower branch sits at zero frequency
    assert max(abs(float(r["residual_MHz"])) for r in resid) < 1e-3


def test_fit_grid_round_trip(tmp_path):
    sim_cfg = dict(BASE, field_min_mT=-145.0, field_points=291, freq_points=1201,
                   snr_dB=40.0, seed=3, reference_field_mT=-145.0)
    _, sim = run(tmp_path, "simulate", sim_cfg, out="sim")
    cfg = {"input_path": str(sim / "grid_raw.json")}
    code, out = run(tmp_path, "fit", cfg, "--variant", "rwa", name="fit.json", out="fit")
    assert code == 0
    res = FitResult.from_json((out / "fit_result.json").read_text())
    assert res["f_p"] == pytest.approx(F_P, rel=5e-4)
    assert res["mu0_Meff"] == pytest.approx(MEFF, rel=1e-2)
    assert res["G_eff"] == pytest.approx(G_FIT, rel=1e-2)
    assert res.extras["source"] == "grid"


def test_fit_empty_input(tmp_path, capsys):
    (tmp_path / "empty.csv").write_text("")
    code, _ = run(tmp_path, "fit", {"input_path": "empty.csv"})
    assert code == 2
    err = stderr_json(capsys)
    assert "empty input" in err["message"] and err["error"] == "DomainError"


def test_fit_malformed_line_number(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("mu0_H_mT,f_GHz,branch\n10,4.7,lower\n20,4.8\n")
    code, _ = run(tmp_path, "fit", {"input_path": "bad.csv"})
    assert code == 2
    assert "bad.csv:3:" in stderr_json(capsys)["message"]


def test_rwa_fit_of_hopfield_data_shows_counter_rotating_signature(tmp_path):
    h = np.linspace(0.002, 0.145, 144)
    model = build_model(dict(f_p=F_P, mu0_Meff=MEFF, G_eff=G_FIT, beta_dia=BETA), ModelVariant.HOPFIELD)
    lo, up = variant_branches(model, h)
    rng = np.random.default_rng(0)
    noise = 1e-4
    f = np.concatenate([lo, up]) * (1 + noise * rng.standard_normal(2 * h.size))
    table = PointTable(np.concatenate([h, h]), f, ["lower"] * h.size + ["upper"] * h.size,
                       np.full(2 * h.size, np.nan))
    write_points(tmp_path / "pts.csv", table)
    floor = noise * np.sqrt(np.mean(f**2))
    rms = {}
    for variant in ("rwa", "hopfield"):
        code, out = run(tmp_path, "fit", {"input_path": "pts.csv", "variant": variant},
                        name=f"{variant}.json", out=variant)
        assert code == 0
        res = FitResult.from_json((out / "fit_result.json").read_text())
        assert res.converged
        rms[variant] = res.residual_rms
    assert rms["hopfield"] == pytest.approx(floor, rel=0.2)
    assert rms["rwa"] > 3 * floor


def test_fit_linewidths_kind(tmp_path):
    from magpol.core import MagnonParams, kittel_frequency
    from magpol.estimation.linewidths import linewidth_model

    h = np.linspace(0.012, 0.05, 60)
    f_m = kittel_frequency(h, MagnonParams(mu0_Meff=MEFF))
    up, lo, k_up, k_lo = linewidth_model(5.0e9, f_m, 129e6, 0.53e6, 461e6)
    table = PointTable(np.concatenate([h, h]), np.concatenate([up, lo]),
                       ["upper"] * 60 + ["lower"] * 60, np.concatenate([k_up, k_lo]))
    write_points(tmp_path / "lw.csv", table)
    cfg = {"input_path": "lw.csv", "fit_kind": "linewidths", "f_p_GHz": 5.0, "mu0_Meff_T": MEFF}
    code, out = run(tmp_path, "fit", cfg)
    assert code == 0
    res = json.loads((out / "fit_result.json").read_text())
    assert res["parameters"]["G_eff"]["value"] == pytest.approx(129e6, rel=1e-4)
    assert res["extras"]["regime"]["regime"] == "purcell"


def test_fit_nonconvergence_writes_best_and_fails(tmp_path, capsys, monkeypatch):
    import magpol.cli as cli

    _, sim = run(tmp_path, "simulate", BASE, out="sim")
    real = cli.fit_dispersion
    monkeypatch.setattr(cli, "fit_dispersion", lambda *a, **k: real(*a, **dict(k, max_iter=1)))
    code, out = run(tmp_path, "fit", {"input_path": str(sim / "dispersion.csv")}, out="fit")
    assert code == 1
    assert stderr_json(capsys)["error"] == "ConvergenceError"
    res = FitResult.from_json((out / "fit_result.json").read_text())
    assert not res.converged and set(res.values) == {"f_p", "mu0_Meff", "G_eff"}


# -- bloch-siegert -------------------------------------------------------------------

def test_bs_zero_coupling(tmp_path):
    code, out = run(tmp_path, "bloch-siegert", dict(BASE, G_eff_MHz=0.0))
    assert code == 0
    rows = read_csv(out / "bloch_siegert.csv")
    assert all(float(r["delta_f_BS_lower_MHz"]) == 0.0 for r in rows)
    assert all(r["status"] == "ok" for r in rows)


def test_bs_order_of_magnitude_and_scaling(tmp_path):
    cfg = {
        "g_s_Hz": 28.4, "N_spins": 1.55e13, "n_stripes": 26, "f_p_GHz": 5.041,
        "field_min_mT": 0.0, "field_max_mT": 145.0, "field_points": 291,
        "bs_G_eff_MHz_list": [111.8 * math.sqrt(n) for n in range(1, 27)],
    }
    code, out = run(tmp_path, "bloch-siegert", cfg)
    assert code == 0
    summary = json.loads((out / "bloch_siegert.json").read_text())
    assert 30.0 <= summary["max_abs_lower_MHz"] <= 120.0
    assert summary["signed_at_max_lower_MHz"] < 0
    fields = summary["scaling"]["fields"]
    assert [f["mu0_H_mT"] for f in fields] == [65.0, 100.0, 140.0]
    for f in fields:
        assert f["slope"] < 0 and f["r2"] >= 0.99
        assert len(f["samples"]) == 26


def test_bs_supercritical_rows(tmp_path, capsys):
    code, out = run(tmp_path, "bloch-siegert", dict(BASE, G_eff_MHz=3000.0))
    assert code == 1
    rows = read_csv(out / "bloch_siegert.csv")
    bad = [r for r in rows if r["status"] == "supercritical"]
    assert bad and all(r["delta_f_BS_lower_MHz"] == "" for r in bad)
    assert stderr_json(capsys)["error"] == "SupercriticalError"


def test_bs_rejects_rwa_variant(tmp_path, capsys):
    code, _ = run(tmp_path, "bloch-siegert", BASE, "--variant", "rwa")
    assert code == 2
    assert stderr_json(capsys)["key"] == "bs_full_variant"


# -- report ----------------------------------------------------------------------

def test_report_reference_values(tmp_path):
    cfg = {"f_p_GHz": 5.041, "G_eff_MHz": 512.3, "beta_dia_rad2_Hz2": 4.89e17,
           "f_m_GHz": 5.041, "kappa_p_MHz": 0.53, "kappa_m_MHz": 461.0}
    code, out = run(tmp_path, "report", cfg)
    assert code == 0
    r = json.loads((out / "report.json").read_text())
    assert r["eta"] == pytest.approx(0.101, abs=1e-3) and r["ultrastrong"]
    assert r["D_MHz"] == pytest.approx(2.46, rel=5e-3)
    assert 0.044 <= r["B"] <= 0.050
    assert r["G_c_GHz"] == pytest.approx(2.59, rel=1e-2)
    assert 4.9 <= r["G_c_over_G_eff"] <= 5.2
    assert r["regime"] == "strong"


def test_report_zero_D_exact(tmp_path):
    cfg = {"f_p_GHz": 5.0, "f_m_GHz": 4.0, "G_eff_MHz": 100.0, "D_MHz": 0.0}
    _, out = run(tmp_path, "report", cfg)
    r = json.loads((out / "report.json").read_text())
    assert r["G_c_GHz"] == math.sqrt(5e9 * 4e9) / 2 / 1e9
    assert r["B"] == 0.0


def test_report_purcell(tmp_path):
    cfg = {"f_p_GHz": 5.0, "G_eff_MHz": 129.0, "kappa_p_MHz": 0.53, "kappa_m_MHz": 461.0}
    _, out = run(tmp_path, "report", cfg)
    r = json.loads((out / "report.json").read_text())
    assert r["regime"] == "purcell"
    assert r["cooperativity"] == pytest.approx(68.1, abs=0.1)


def test_report_no_go(tmp_path, capsys):
    code, _ = run(tmp_path, "report", {"G_eff_MHz": 512.3, "B_suppression": 1.0})
    assert code == 1
    err = stderr_json(capsys)
    assert err["error"] == "NoGoError" and "no-go / TRK limit" in err["message"]


# -- scaling -----------------------------------------------------------------------

def test_scaling_command(tmp_path):
    n = list(range(1, 27))
    G = [1520.0 * math.sqrt(k) * math.sqrt(F_P) / 1e6 for k in n]
    cfg = {"scaling_n": n, "scaling_G_eff_MHz": G, "N_spins": 1.55e13}
    code, out = run(tmp_path, "scaling", cfg)
    assert code == 0
    r = json.loads((out / "scaling.json").read_text())
    assert r["alpha_sqrtHz"] == pytest.approx(1520.0, rel=1e-12)
    assert r["g_s_Hz"] == pytest.approx(27.4, abs=0.1)


def test_scaling_length_mismatch(tmp_path, capsys):
    code, _ = run(tmp_path, "scaling", {"scaling_n": [1, 2], "scaling_G_eff_MHz": [1.0]})
    assert code == 2
    assert stderr_json(capsys)["key"] == "scaling_G_eff_MHz"


# -- schema and exit codes -----------------------------------------------------------

@pytest.mark.parametrize("doc,key", [
    ({"f_p_Hz": 5e9}, "f_p_Hz"),
    ({"f_p_GHz": "five"}, "f_p_GHz"),
    ({"field_points": 2.5}, "field_points"),
    ({"variant": "jaynes"}, "variant"),
    ({"G_eff_MHz": 500.0, "g_s_Hz": 28.4, "N_spins": 1.55e13, "n_stripes": 26}, "G_eff_MHz"),
])
def test_schema_errors(tmp_path, capsys, doc, key):
    code, _ = run(tmp_path, "report", doc)
    assert code == 2
    assert stderr_json(capsys)["key"] == key


def test_invalid_json(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text('{"f_p_GHz": 5.0,\n "x": }')
    code = main(["report", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path)])
    assert code == 2
    assert "cfg.json:2:" in stderr_json(capsys)["message"]


def test_missing_config_file(tmp_path, capsys):
    code = main(["report", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 2
    stderr_json(capsys)


def test_outputs_re_readable(tmp_path):
    _, sim = run(tmp_path, "simulate", BASE, out="sim")
    assert len(read_points(sim / "dispersion.csv")) == 2 * 59 - 1
    g = read_grid(sim / "grid.csv")
    assert g.reference_field == 0.0
    _, fit = run(tmp_path, "fit", {"input_path": str(sim / "grid.json"), "variant": "rwa"},
                 name="fit.json", out="fit")
    FitResult.from_json((fit / "fit_result.json").read_text())
    _, bs = run(tmp_path, "bloch-siegert", BASE, out="bs")
    rows = read_csv(bs / "bloch_siegert.csv")
    assert list(rows[0]) == ["mu0_H_mT", "delta_f_BS_lower_MHz", "delta_f_BS_upper_MHz", "status"]


def test_console_entry_point(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"G_eff_MHz": 512.3}))
    proc = subprocess.run(
        [sys.executable, "-m", "magpol.cli", "report", "--config", str(tmp_path / "cfg.json"),
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "o" / "report.json").read_text())["G_eff_MHz"] == 512.3
