import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarred import cli, serialize, verify
from polarred.config import ConfigError, RunConfig, from_mapping, merge, parse_orbit


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# --- config -------------------------------------------------------------------------

def test_defaults_valid():
    cfg = RunConfig().validate()
    assert cfg.model == "su2-conj" and cfg.dt == 1e-4


@pytest.mark.parametrize("bad", [
    {"dt": 0.0}, {"dt": -1e-3}, {"t_end": "1"}, {"grid_n": 1}, {"k": 0}, {"seed": -1},
    {"model": "su9-conj"}, {"scheme": "euler"}, {"rep": "spinor"}, {"assembly": "fem"},
    {"grid_n": 2.5}, {"k": True}])
def test_invalid_values(bad):
    with pytest.raises(ConfigError):
        from_mapping(bad)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        from_mapping({"model": "su2-conj", "timestep": 0.1})
    with pytest.raises(ConfigError):
        from_mapping([1, 2])


def test_flags_override_file():
    base = from_mapping({"model": "su3-conj", "dt": 1e-3})
    cfg = merge(base, {"dt": 1e-2, "model": None})
    assert cfg.model == "su3-conj" and cfg.dt == 1e-2


def test_orbit_strings(su2, su3):
    assert parse_orbit("zero", su3).description == "zero"
    assert parse_orbit("su2:r=2", su2).params["r"] == 2.0
    assert parse_orbit("kks:nu=0.5", su3).params["nu"] == 0.5
    a = parse_orbit("random:scale=0.3", su3, seed=4).base_point
    assert np.array_equal(a, parse_orbit("random:scale=0.3", su3, seed=4).base_point)
    assert np.linalg.norm(a) == pytest.approx(0.3)
    for bad in ("spiral", "kks:nu", "kks:nu=x", "su2:r=1"):
        with pytest.raises(ConfigError):
            parse_orbit(bad, su3)


# --- exit codes ---------------------------------------------------------------------

def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["derive", "--config", str(bad)], capsys)[0] == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"modle": "su2-conj"}))
    code, _, err = run(["simulate", "--config", str(unknown)], capsys)
    assert code == 2 and "unknown config keys" in err
    assert run(["simulate", "--dt", "0"], capsys)[0] == 2
    assert run(["spectrum", "--grid-n", "10", "--k", "11"], capsys)[0] == 2
    assert run(["spectrum", "--model", "su4-conj", "--grid-n", "10"], capsys)[0] == 2
    assert run(["simulate", "--q0", "7.0"], capsys)[0] == 2
    assert run(["simulate", "--model", "su3-conj", "--q0", "1.0"], capsys)[0] == 2
    assert run(["derive", "--model", "su3-conj", "--orbit", "generic:0,0,0,0,0,0,1,0"], capsys)[0] == 2


def test_argparse_rejects_unknown_model(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["derive", "--model", "so5"])
    assert exc.value.code == 2


def test_derive_su2(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(["derive", "--orbit", "su2:r=1", "--q-samples", "10", "--output", str(out)], capsys)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["sutherland_fit"]["coefficient"] == pytest.approx(0.125, rel=1e-12)
    assert data["zero_potential"] is False
    assert data["dimensions"] == {"rank": 1, "K": 1, "K_perp": 2, "V": 1, "V_K": 1}
    assert len(data["samples"]) == 10
    assert all(s["measure_term"] == pytest.approx(-0.25, abs=1e-10) for s in data["samples"])


def test_derive_zero_orbit_flag(capsys):
    code, out, _ = run(["derive", "--model", "su3-conj", "--orbit", "zero", "--q-samples", "3"], capsys)
    data = json.loads(out)
    assert code == 0 and data["zero_potential"] is True and data["sutherland_fit"]["free_model"] is True


def test_derive_non_conjugation(capsys):
    code, out, _ = run(["derive", "--model", "su2-hermann-so2", "--q-samples", "3"], capsys)
    data = json.loads(out)
    assert code == 0 and "sutherland_fit" not in data and data["dimensions"]["K"] == 0


def test_simulate_with_oracle_and_csv(tmp_path, capsys):
    csv = tmp_path / "t.csv"
    code, out, _ = run(["simulate", "--model", "su3-conj", "--orbit", "kks:nu=1", "--t-end", "0.2",
                        "--dt", "1e-3", "--oracle", "--csv", str(csv)], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["oracle"]["passed"] and data["oracle"]["max_deviation"] < 1e-6
    assert data["drift_below_threshold"] and not data["wall_collision"]
    header = csv.read_text().splitlines()[0]
    assert header.startswith("t,q_1,q_2,p_1,p_2,xi_1") and header.endswith(",H,casimir,xi_k_norm")


def test_simulate_oracle_failure_exits_1(capsys, monkeypatch):
    def broken(*args, **kwargs):
        return {"max_deviation": 1.0}
    monkeypatch.setattr(cli.classical, "compare_flows", broken)
    code, out, _ = run(["simulate", "--t-end", "0.01", "--dt", "1e-3", "--oracle"], capsys)
    assert code == 1 and json.loads(out)["oracle"]["passed"] is False


def test_spectrum_command(tmp_path, capsys):
    dump = tmp_path / "op.bin"
    code, out, _ = run(["spectrum", "--grid-n", "400", "--k", "3", "--dump-operator", str(dump)], capsys)
    data = json.loads(out)
    assert code == 0
    assert np.allclose(data["eigenvalues"], [0, 0.375, 1], atol=5e-3)
    assert max(data["deviations"]) < 5e-3
    assert dump.stat().st_size == 16 + 16 * 400 ** 2
    code, out, _ = run(["spectrum", "--model", "su3-conj", "--rep", "adjoint", "--grid-n", "12",
                        "--k", "2"], capsys)
    data = json.loads(out)
    assert code == 0 and "wall_note" in data and "oracle" not in data


def test_verify_subset_and_negative_control():
    report = verify.run_suite(0, only={"lie.structure", "classical.constraint_residual"})
    assert report["passed"] and len(report["checks"]) == 2
    bad = verify.check_constraint(0, vertical_sign=+1.0)
    assert not bad.passed and bad.value > bad.tolerance


def test_verify_failure_exits_1(capsys, monkeypatch):
    fail = verify.CheckResult("fake", False, 1.0, 0.0, {})
    monkeypatch.setattr(verify, "checks", lambda: [("fake", lambda seed: fail)])
    code, _, err = run(["verify"], capsys)
    assert code == 1 and "verification failed: fake" in err


# --- output format ------------------------------------------------------------------

@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert json.loads(serialize.dumps({"x": x}))["x"] == x


def test_serializer_types():
    text = serialize.dumps({"a": np.float64(2.0), "b": np.array([1, 2]), "c": 1 + 2j,
                            "d": math.nan, "e": [np.True_, None], "f": {}})
    data = json.loads(text)
    assert data == {"a": 2.0, "b": [1, 2], "c": [1.0, 2.0], "d": None, "e": [True, None], "f": {}}
    assert '"a": 2.0' in text
    assert serialize.dumps(0.1).strip() == "0.10000000000000001"
    with pytest.raises(TypeError):
        serialize.dumps(object())


def test_runs_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        subprocess.run([sys.executable, "-m", "polarred.cli", "simulate", "--model", "su3-conj",
                        "--t-end", "0.05", "--dt", "1e-3", "--output", str(path)], check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
