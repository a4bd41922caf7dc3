import csv
import hashlib
import json
import math

from conftest import small_grid


def blob_sha1(data):
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_presets_list(run):
    r = run("presets", "list")
    assert r.returncode == 0
    for name in ("ground_state_epr", "ground_low_power", "ground_high_power", "excited_state"):
        assert name in r.stdout


def test_malformed_config_exits_2_without_outputs(run, tmp_path):
    out = tmp_path / "out"
    r = run("transmission", config="{\"preset\": ", out=out)
    assert r.returncode == 2
    assert not out.exists() or not any(out.iterdir())


def test_unknown_key_rejected(run, tmp_path):
    out = tmp_path / "out"
    r = run("transmission", config=small_grid(model={"cavity": {"frequency": 5e9}}), out=out)
    assert r.returncode == 2
    assert "frequency" in r.stderr
    assert not out.exists()


def test_outputs_and_byte_identical_rerun(run, tmp_path):
    cfg = small_grid(seed=3)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("transmission", config=cfg, out=a).returncode == 0
    assert run("transmission", config=cfg, out=b).returncode == 0
    csv_a = (a / "transmission.csv").read_bytes()
    assert csv_a == (b / "transmission.csv").read_bytes()
    assert csv_a.splitlines()[0] == b"axis1,axis2,re,im,db,converged"
    side = json.loads((a / "transmission.json").read_text())
    assert side["csv_sha1"] == blob_sha1(csv_a)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["convergence"]["cells"] == 27
    assert manifest["convergence"]["failed_cells"] == 0
    assert "transmission.csv" in manifest["outputs"]
    assert not list(a.glob("*.tmp.*"))


def test_env_var_sets_output_dir(run, tmp_path):
    target = tmp_path / "from_env"
    r = run("transmission", config=small_grid(), env={"SPINCAV_OUTPUT_DIR": str(target)})
    assert r.returncode == 0
    assert (target / "manifest.json").exists()
    flag = tmp_path / "from_flag"
    r = run("transmission", config=small_grid(), env={"SPINCAV_OUTPUT_DIR": str(target)}, out=flag)
    assert (flag / "manifest.json").exists()


def test_empty_cavity_linewidth(run, tmp_path):
    cfg = {
        "preset": "ground_state_epr",
        "model": {"ensemble": {"n_ions": 0.0}},
        "grid": {"drive_hz": {"start": 5.010e9, "stop": 5.030e9, "points": 2000}, "field_t": {"values": [0.0405]}},
    }
    out = tmp_path / "o"
    assert run("transmission", config=cfg, out=out).returncode == 0
    rows = read_rows(out / "transmission.csv")
    f = [float(r["axis1"]) for r in rows]
    p = [float(r["re"]) ** 2 + float(r["im"]) ** 2 for r in rows]
    half = max(p) / 2
    cross = []
    for i in range(len(p) - 1):
        if (p[i] - half) * (p[i + 1] - half) < 0:
            cross.append(f[i] + (half - p[i]) * (f[i + 1] - f[i]) / (p[i + 1] - p[i]))
    assert len(cross) == 2
    assert math.isclose(cross[1] - cross[0], 4.0e6, rel_tol=1e-4)


def test_schedule_without_probe_is_config_error(run, tmp_path):
    cfg = {
        "preset": "ground_state_epr",
        "recovery": {
            "schedule": {
                "low_power_dbm": -60.0,
                "segments": [{"kind": "saturate", "duration_s": 5.0, "power_dbm": 5.0, "interval_s": 1.0}],
            }
        },
    }
    r = run("t1", config=cfg, out=tmp_path / "o")
    assert r.returncode == 2


def test_t1_from_trace(run, tmp_path):
    trace = tmp_path / "trace.csv"
    lines = ["t_s,splitting_hz,sigma_hz"]
    for i in range(1, 41):
        t = 1.5 * i
        lines.append(f"{t},{40e6 * math.sqrt(1 - math.exp(-t / 8.0)) * (1 + 0.01 * math.sin(7 * i))},")
    trace.write_text("\n".join(lines) + "\n")
    r = run("t1", "--trace", str(trace), out=tmp_path / "o")
    assert r.returncode == 0, r.stderr
    fit = json.loads((tmp_path / "o" / "t1_fit.json").read_text())
    assert abs(fit["t1_s"] - 8.0) < 0.5
    assert fit["ci_low_s"] < fit["t1_s"] < fit["ci_high_s"]


def test_t1_simulated(run, tmp_path):
    out = tmp_path / "o"
    r = run("t1", "--preset", "ground_state_epr", out=out)
    assert r.returncode == 0, r.stderr
    rows = read_rows(out / "recovery_trace.csv")
    assert list(rows[0].keys()) == ["t_s", "splitting_hz", "sigma_hz"]
    fit = json.loads((out / "t1_fit.json").read_text())
    assert abs(fit["t1_s"] - 10.0) < 1.0


def test_convergence_failures_exit_3(run, tmp_path):
    cfg = small_grid(model={"quadrature": {"max_level": 1, "rel_tol": 1e-15}})
    r = run("transmission", config=cfg, out=tmp_path / "o")
    assert r.returncode == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["convergence"]["failed_cells"] > 0


def test_oracle_check(run, tmp_path):
    out = tmp_path / "o"
    r = run("oracle-check", config={"oracle_check": {"instances": 4}}, out=out)
    assert r.returncode == 0, r.stderr
    rep = json.loads((out / "oracle_check.json").read_text())
    assert rep["passed"] == 4
