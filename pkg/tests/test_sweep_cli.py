import json
import os

import numpy as np
import pytest

import cavitybec as cb
from cavitybec.cli import main
from cavitybec.sweep import run_point, spec_hash
from cavitybec import reports

from conftest import dot_params, evolve_seeded


def _tiny_spec(**kw):
    base = dict(
        axis1=cb.AxisSpec("delta_c", 9.0, 10.0, 2),
        axis2=cb.AxisSpec("eta", 3.0, 4.5, 2),
        base=cb.ModelParams(u0n=-12.0, kappa=10.0),
        tasks=("steady",),
    )
    base.update(kw)
    return cb.SweepSpec(**base)


def test_axis_validation():
    with pytest.raises(cb.ParameterError):
        cb.SweepSpec(cb.AxisSpec("bogus", 0, 1, 2), cb.AxisSpec("eta", 0, 1, 2)).validated()
    with pytest.raises(cb.ParameterError):
        cb.SweepSpec(cb.AxisSpec("eta", 0, 1, 2), cb.AxisSpec("eta", 0, 1, 2)).validated()


def test_single_point_matches_direct_classify():
    spec = cb.SweepSpec(
        axis1=cb.AxisSpec("delta_c", 9.0, 9.0, 1),
        axis2=cb.AxisSpec("eta", 6.4, 6.4, 1),
        base=cb.ModelParams(u0n=-12.0, kappa=10.0),
        tasks=("classify",),
    )
    result = cb.run_sweep(spec, workers=1)
    assert len(result.records) == 1
    rec = result.records[0]
    traj = evolve_seeded(dot_params("II"))
    lab = cb.classify_phase(traj, dot_params("II"))
    assert rec["label"] == lab.label == "SL"
    assert rec["ipr"] == pytest.approx(lab.ipr, rel=1e-9)
    assert rec["mean_intensity"] == pytest.approx(lab.mean_intensity, rel=1e-9)
    assert rec["eta_c_analytic"] == pytest.approx(cb.analytic_critical_pump(dot_params("II")))


def test_sweep_grid_order_and_steady_columns():
    result = cb.run_sweep(_tiny_spec(), workers=1)
    assert [r["index"] for r in result.records] == [0, 1, 2, 3]
    assert result.records[0]["axis1"] == 9.0 and result.records[0]["axis2"] == 3.0
    assert result.records[1]["axis1"] == 9.0 and result.records[1]["axis2"] == 4.5
    # eta=3 below threshold for both delta_c values: dark cavity
    for rec in result.records:
        if rec["axis2"] == 3.0:
            assert rec["intensity_ss"] < 1e-10
        else:
            assert rec["intensity_ss"] > 1e-3
        assert rec["error"] is None


def test_sweep_worker_count_equivalence():
    r1 = cb.run_sweep(_tiny_spec(), workers=1)
    r2 = cb.run_sweep(_tiny_spec(), workers=2)
    for a, b in zip(r1.records, r2.records):
        assert a == b


def test_sweep_checkpoint_resume_identical(tmp_path):
    spec = _tiny_spec()
    ck = tmp_path / "sweep.ckpt"
    partial = cb.run_sweep(spec, checkpoint=str(ck), workers=1, max_points=2)
    assert not partial.provenance["complete"]
    assert len(partial.records) == 2
    resumed = cb.run_sweep(spec, checkpoint=str(ck), workers=1)
    clean = cb.run_sweep(spec, workers=1)
    assert resumed.provenance["complete"]
    assert resumed.records == clean.records


def test_sweep_resume_rejects_config_change(tmp_path):
    ck = tmp_path / "sweep.ckpt"
    cb.run_sweep(_tiny_spec(), checkpoint=str(ck), workers=1, max_points=1)
    other = _tiny_spec(axis2=cb.AxisSpec("eta", 3.0, 5.0, 2))
    with pytest.raises(cb.ResumeMismatch):
        cb.run_sweep(other, checkpoint=str(ck), workers=1)


def test_sweep_contains_errors_not_raises():
    spec = _tiny_spec(
        axis1=cb.AxisSpec("delta_c", 9.0, 9.0, 1),
        axis2=cb.AxisSpec("g1d", 0.5, 0.5, 1),
        tasks=("stability",),
    )
    result = cb.run_sweep(spec, workers=1)
    rec = result.records[0]
    assert rec["label"] == "ERROR"
    assert "InteractionUnsupported" in rec["error"]


def test_spec_hash_stable_and_sensitive():
    assert spec_hash(_tiny_spec()) == spec_hash(_tiny_spec())
    assert spec_hash(_tiny_spec()) != spec_hash(_tiny_spec(seed_a0=2e-3))


def test_run_point_steady_fields():
    rec = run_point(_tiny_spec(), 0, 10.0, 4.0)
    assert rec["theta_ss"] is not None
    assert rec["residual"] < 1e-8


# ---------------------------------------------------------------- reports


def test_records_csv_roundtrip(tmp_path):
    path = tmp_path / "out.csv"
    recs = [{"a": 1.5, "b": "x", "c": None}, {"a": 2.5, "b": "y", "c": 3.0}]
    reports.write_records_csv(path, recs, ["a", "b", "c"], "meta line")
    lines = path.read_text().splitlines()
    assert lines[0] == "# meta line"
    assert lines[1] == "a,b,c"
    assert lines[2] == "1.5,x,"


def test_figures_render(tmp_path, dot_trajectories):
    traj = evolve_seeded(dot_params("I"), t_end=50.0)
    p1 = tmp_path / "traj.png"
    reports.plot_trajectory(traj, p1)
    assert p1.stat().st_size > 0

    spec = cb.intensity_spectrum(dot_trajectories["II"], (1500.0, 2000.0))
    p2 = tmp_path / "cls.png"
    reports.plot_classification(dot_trajectories["II"], "SL", spec, p2)
    assert p2.stat().st_size > 0

    orbit = cb.chi_orbit(dot_trajectories["II"], 1)
    p3 = tmp_path / "orbit.png"
    reports.plot_orbits([orbit], p3)
    assert p3.stat().st_size > 0


# ---------------------------------------------------------------- CLI


def test_cli_steady_normal_phase(tmp_path, capsys):
    out = tmp_path / "steady.csv"
    code = main(
        [
            "steady",
            "--set", "eta=3",
            "--set", "delta_c=10",
            "--set", "u0n=-12",
            "--out", str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "theta=" in captured.out
    # theta and the cavity field are zero in the normal phase
    import csv

    with open(out) as fh:
        row = next(csv.DictReader(fh))
    assert abs(float(row["theta"])) < 1e-6
    assert float(row["intensity"]) < 1e-12
    assert os.path.exists(tmp_path / "steady.png")


def test_cli_unknown_key_exits_one(capsys):
    code = main(["steady", "--set", "bogus=1"])
    captured = capsys.readouterr()
    assert code == 1
    assert "recognized keys" in captured.err
    assert "delta_c" in captured.err


def test_cli_invalid_value_exits_one(capsys):
    code = main(["steady", "--set", "kappa=0"])
    assert code == 1


def test_cli_classify_dot_two(tmp_path, capsys):
    out = tmp_path / "cls.csv"
    code = main(
        [
            "classify",
            "--set", "delta_c=9",
            "--set", "eta=6.4",
            "--set", "u0n=-12",
            "--out", str(out),
            "--format", "csv",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "label SL" in captured.out
    assert os.path.exists(out)
    assert os.path.exists(tmp_path / "cls.png")


def test_cli_evolve_json_and_no_plot(tmp_path):
    out = tmp_path / "traj.json"
    code = main(
        [
            "evolve",
            "--set", "eta=0",
            "--set", "t_end=1",
            "--set", "stride=0.1",
            "--out", str(out),
            "--format", "json",
            "--no-plot",
        ]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["t"]) == 11
    assert not os.path.exists(tmp_path / "traj.png")


def test_cli_twa_small(tmp_path, capsys):
    out = tmp_path / "twa.csv"
    code = main(
        [
            "twa",
            "--set", "delta_c=9",
            "--set", "eta=5.2",
            "--set", "u0n=-12",
            "--set", "t_end=20",
            "--set", "stride=0.25",
            "--ntraj", "3",
            "--seed", "5",
            "--threads", "1",
            "--out", str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "ensemble of 3 trajectories" in captured.out
    header = out.read_text().splitlines()
    assert any("mean_intensity" in line for line in header[:3])
    assert os.path.exists(tmp_path / "twa.png")


def test_cli_sweep_with_checkpoint(tmp_path):
    out = tmp_path / "sweep.csv"
    ck = tmp_path / "sweep.ckpt"
    args = [
        "sweep",
        "--set", "u0n=-12",
        "--axis1", "delta_c:9:10:2",
        "--axis2", "eta:3:4.5:2",
        "--tasks", "steady",
        "--checkpoint", str(ck),
        "--threads", "1",
        "--out", str(out),
    ]
    code = main(args)
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 5  # header + 4 records
    meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
    assert meta["complete"]
    assert os.path.exists(tmp_path / "sweep.png")
    # rerun resumes from the finished checkpoint and reproduces the table
    first = out.read_text()
    code = main(args)
    assert code == 0
    assert out.read_text() == first


def test_cli_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"delta_c": 10.0, "u0n": -12.0, "eta": 3.0}}))
    code = main(["steady", "--config", str(cfg), "--set", "eta=3.5"])
    captured = capsys.readouterr()
    assert code == 0
    assert "theta=" in captured.out


def test_cli_missing_config_exits_one(capsys):
    code = main(["steady", "--config", "/nonexistent/cfg.json"])
    assert code == 1
