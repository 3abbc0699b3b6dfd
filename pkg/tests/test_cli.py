import json
import math

import numpy as np
import pytest

from morphwing import aero, cli
from morphwing.reference import DESIGN_DERIVED, DESIGN_GIVEN, SURFACE_FITS

from conftest import synthetic_record


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_record(path, rec):
    lines = [",".join(aero.FORCE_COLUMNS)]
    for k in range(len(rec.t)):
        lines.append(",".join(repr(float(getattr(rec, c)[k])) for c in aero.FORCE_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def table_i(tmp_path):
    path = tmp_path / "design.json"
    path.write_text(json.dumps(DESIGN_GIVEN.to_dict()))
    return path


def test_synthesize_reproduces_table(capsys, table_i):
    code, out, _ = run(capsys, "synthesize", "--config", table_i)
    assert code == 0
    doc = json.loads(out)
    for name, value in DESIGN_DERIVED.to_dict().items():
        assert abs(doc["derived"][name] - value) < 1e-3


def test_synthesize_is_deterministic_and_atomic(capsys, table_i, tmp_path, monkeypatch):
    monkeypatch.setenv("MORPHWING_SEED", "12")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "synthesize", "--config", table_i, "--out", a)[0] == 0
    assert run(capsys, "synthesize", "--config", table_i, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_synthesis_output_feeds_kinematics(capsys, table_i, tmp_path):
    syn = tmp_path / "syn.json"
    run(capsys, "synthesize", "--config", table_i, "--out", syn)
    code, out, _ = run(capsys, "kinematics", "--config", syn, "--x-a", 45, "--x-a", 65, "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["theta_e_deg"] == pytest.approx(110, abs=0.05)
    assert rows[1]["theta_e_deg"] == pytest.approx(41, abs=0.05)
    code, out, _ = run(capsys, "kinematics", "--config", syn, "--sweep", 5)
    assert out.splitlines()[0].startswith("x_A_mm,theta_s_deg")
    assert len(out.splitlines()) == 6


def test_unknown_subcommand(capsys):
    code, out, err = run(capsys, "bogus")
    assert code == 2
    assert "usage:" in err
    assert out == ""


def test_module_error_becomes_json(capsys, table_i):
    code, out, err = run(capsys, "kinematics", "--config", table_i, "--x-a", 500)
    assert code == 1
    doc = json.loads(err)
    assert doc["error"] == "OutOfRange"
    assert doc["command"] == "kinematics"


def test_missing_file_is_reported(capsys, tmp_path):
    code, _, err = run(capsys, "trim", "--surfaces", tmp_path / "nope.json")
    assert code == 1
    assert json.loads(err)["error"] == "FileNotFoundError"


def test_trajectory_with_roll(capsys, tmp_path):
    project = {
        "linkage": DESIGN_GIVEN.to_dict(),
        "crm": {"R": 12.0, "H": 20.0, "gear_rate": 3.0, "mis_travel": [0.0, 20.0]},
        "wrist_mount_deg": 10.0,
    }
    path = tmp_path / "project.json"
    path.write_text(json.dumps(project))
    code, out, _ = run(capsys, "trajectory", "--config", path, "--cycles", 2, "--samples-per-cycle", 32,
                       "--roll", "left", "--roll-cycle", 1)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 1 + 2 * 64
    header = lines[0].split(",")
    sis = header.index("x_sis_mm")
    raised = [ln.split(",") for ln in lines[1:] if float(ln.split(",")[sis]) > 0]
    assert raised and all(r[1] == "left" for r in raised)
    assert len(raised) == 15  # the open downstroke half-cycle at 32 samples per cycle


def test_simulate_controller(capsys, tmp_path):
    events = tmp_path / "events.csv"
    events.write_text("t,kind,arg\n1.0,hall,\n1.4,hall,\n1.45,roll,right\n1.5,throttle,0\n1.8,hall,\n")
    code, out, _ = run(capsys, "simulate-controller", "--events", events)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,kind,side,start,duration"
    t, kind, side, start, duration = lines[1].split(",")
    assert (kind, side) == ("ServoPulse", "right")
    assert float(start) == pytest.approx(2.0) and float(duration) == pytest.approx(0.3)
    assert lines[2].split(",")[1] == "MotorStop"


def _force_conditions(tmp_path, theta):
    lift, thrust = (aero.AeroSurface.from_dict(SURFACE_FITS[k][theta]) for k in ("lift", "thrust"))
    g_offset = 5.886
    manifest = []
    for alpha in (0.0, 4.0, 8.0, 12.0):
        s, c = math.sin(math.radians(alpha)), math.cos(math.radians(alpha))
        for freq in (2.0, 2.5, 3.125, 4.0):
            L = lift(alpha, freq) * aero.G0 / 1000 - g_offset * s
            T = thrust(alpha, freq) * aero.G0 / 1000 - g_offset * c
            fx, fz = s * L + c * T, c * L - s * T
            rec = synthetic_record(
                freq=freq, n_cycles=4,
                fx=lambda ph, fx=fx: fx + 0.2 * math.sin(2 * math.pi * ph),
                fz=lambda ph, fz=fz: fz + 0.5 * math.cos(2 * math.pi * ph),
            )
            name = f"th{theta}_a{alpha:g}_f{freq:g}.csv"
            write_record(tmp_path / name, rec)
            manifest.append({"file": name, "alpha_deg": alpha, "freq_hint_hz": freq, "airspeed_ms": 8.0,
                             "g_offset_n": g_offset, "wrist_mount_deg": theta})
    return manifest


def test_fit_then_trim_round_trip(capsys, tmp_path):
    manifest = _force_conditions(tmp_path, 25)
    mpath = tmp_path / "manifest.json"
    mpath.write_text(json.dumps(manifest))
    fit_path = tmp_path / "fit.json"
    code, _, err = run(capsys, "fit", "--manifest", mpath, "--out", fit_path)
    assert code == 0, err
    doc = json.loads(fit_path.read_text())
    ref = SURFACE_FITS["lift"][25]
    for k in ("z0", "a", "b", "c", "d", "f"):
        assert doc["lift"][k] == pytest.approx(ref[k], abs=1e-5)
    code, out, _ = run(capsys, "trim", "--surfaces", fit_path, "--weight-g", 600)
    assert code == 0
    trim = json.loads(out)
    assert abs(trim["lift_at_trim_g"] - 600) < 1e-3
    assert abs(trim["thrust_at_trim_g"]) < 1e-6


def test_fit_fans_out_over_wrist_angles(capsys, tmp_path):
    manifest = _force_conditions(tmp_path, 10) + _force_conditions(tmp_path, 25)
    mpath = tmp_path / "manifest.json"
    mpath.write_text(json.dumps(manifest))
    fit_path = tmp_path / "fit.json"
    assert run(capsys, "fit", "--manifest", mpath, "--out", fit_path)[0] == 0
    doc = json.loads(fit_path.read_text())
    assert [c["wrist_mount_deg"] for c in doc["configurations"]] == [10.0, 25.0]
    code, out, _ = run(capsys, "trim", "--surfaces", fit_path)
    trims = json.loads(out)
    assert trims[0]["alpha_star_deg"] > trims[1]["alpha_star_deg"]


def test_trim_from_table(capsys, tmp_path):
    path = tmp_path / "t25.json"
    path.write_text(json.dumps({"lift": SURFACE_FITS["lift"][25], "thrust": SURFACE_FITS["thrust"][25]}))
    code, out, _ = run(capsys, "trim", "--weight-g", 600, "--surfaces", path)
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["lift_at_trim_g"] - 600) < 1e-3
    assert abs(doc["thrust_at_trim_g"]) < 1e-6


def test_filter(capsys, tmp_path):
    rec = synthetic_record(freq=2.0, n_cycles=4, mx=lambda ph: 0.1)
    path = tmp_path / "f.csv"
    write_record(path, rec)
    code, out, _ = run(capsys, "filter", "--input", path, "--column", "mx", "--cutoff-hz", 12, "--order", 5)
    assert code == 0
    rows = [ln.split(",") for ln in out.splitlines()[1:]]
    assert all(float(r[2]) == pytest.approx(0.1, abs=1e-12) for r in rows)
    code, _, err = run(capsys, "filter", "--input", path, "--cutoff-hz", 900)
    assert code == 1 and json.loads(err)["error"] == "InvalidCutoff"


def test_roll_moment(capsys, tmp_path):
    manifest = []
    for alpha in (4.0, 8.0):
        for freq in (2.0, 2.5, 4.0):
            mean = 0.01 * freq - 0.02 + alpha * 1e-3
            rec = synthetic_record(freq=freq, n_cycles=12, mx=lambda ph, m=mean: m)
            name = f"m{alpha:g}_{freq:g}.csv"
            write_record(tmp_path / name, rec)
            manifest.append({"file": name, "alpha_deg": alpha, "freq_hint_hz": freq})
    mpath = tmp_path / "roll.json"
    mpath.write_text(json.dumps(manifest))
    code, out, _ = run(capsys, "roll-moment", "--manifest", mpath)
    assert code == 0
    doc = json.loads(out)
    assert [r["slope"] for r in doc["regressions"]] == pytest.approx([0.01, 0.01], abs=1e-9)
    assert doc["within_bound"] is True


def test_agility(capsys, tmp_path):
    paths = []
    for k, rate in enumerate((34.0, 36.0, 38.0)):
        t = np.arange(0, 1.6, 0.005)
        tau = t * 5
        roll = rate * np.maximum(tau - 1, 0)
        lines = ["t,roll_deg,pitch_deg,yaw_deg,p_dps,q_dps,r_dps"]
        lines += [f"{float(a)!r},{float(b)!r},0,{k},0,0,0" for a, b in zip(t, roll)]
        p = tmp_path / f"log{k}.csv"
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    argv = ["agility", "--freq", 5, "--t0", 0, "--maneuver-marker", 1]
    for p in paths:
        argv += ["--log", p]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    doc = json.loads(out)
    assert doc["trials"][1] == pytest.approx(2.5, abs=1e-9)
    assert doc["ensemble"] == pytest.approx(2.5, abs=0.01)
    code, out, _ = run(capsys, *argv, "--format", "csv")
    assert out.splitlines()[0] == "tau,mean_roll,se_roll,mean_pitch,se_pitch,mean_yaw,se_yaw"
