import copy
from dataclasses import replace

import numpy as np
import pytest
import yaml

from conftest import quiet_config, sync_unit
from gridfreq import ConfigError, PRESETS, SystemParams, compare_scenarios, load_config, reserve_calc, run_scenario
from gridfreq.cli import main
from gridfreq.disturbances import DisturbanceConfig, OuParams, Trip
from gridfreq.scenario import TRACE_COLUMNS, config_from_dict, config_to_dict


def _yaml(tmp_path, d, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(d))
    return str(p)


def test_presets_are_the_four_scenarios():
    assert set(PRESETS) == {"s1-conv-agc", "s2-conv-agc-pfc", "s3-conv-pfc", "s4-ibr"}


def _diff(a, b, path=""):
    """Paths at which two plain-data configs differ."""
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            out += _diff(a.get(k), b.get(k), f"{path}.{k}")
        return out
    if isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out += _diff(x, y, f"{path}[{i}]")
        return out
    return [] if a == b else [path]


def test_preset_fidelity():
    s1, s2, s3 = (config_to_dict(PRESETS[n]()) for n in ("s1-conv-agc", "s2-conv-agc-pfc", "s3-conv-pfc"))
    assert _diff(s2, s3) == [".agc.enabled", ".name"]
    d12 = _diff(s1, s2)
    assert ".name" in d12
    wind = [i for i, r in enumerate(s1["resources"]) if r["kind"] == "WindPlant"]
    assert sorted(set(d12) - {".name"}) == sorted(f".resources[{i}].pfc.enabled" for i in wind)


def test_ibr_preset_has_no_synchronous_machines():
    cfg = PRESETS["s4-ibr"]()
    kinds = {r.kind.value for r in cfg.resources}
    assert "SyncGen" not in kinds and "GfmConverter" in kinds
    assert not cfg.agc.enabled


def test_zero_disturbance_run_is_flat():
    cfg = PRESETS["s2-conv-agc-pfc"](duration=900.0)
    cfg.disturbances = DisturbanceConfig(ou=OuParams(sigma=0.0))
    res = run_scenario(cfg)
    assert np.all(res.trace.delta_f == 0.0)
    m = res.metrics
    assert m.sigma_f == 0 and m.pct_out_200 == 0 and m.nadir == 0 and m.zenith == 0 and m.time_error == 0


def test_outputs_written(tmp_path):
    res = run_scenario(PRESETS["s3-conv-pfc"](duration=60.0), out_dir=str(tmp_path))
    header = open(res.trace_path).readline().strip()
    assert header == ",".join(TRACE_COLUMNS)
    data = np.loadtxt(res.trace_path, delimiter=",", skiprows=1)
    assert data.shape == (600, len(TRACE_COLUMNS))
    np.testing.assert_allclose(np.diff(data[:, 0]), 0.1)
    # load column is demand plus the three components
    np.testing.assert_allclose(data[:, 2] - 7000.0, data[:, 3] + data[:, 4] + data[:, 5], atol=2e-5)
    for key in ("histogram", "dispatch", "metrics", "config"):
        assert (tmp_path / res.files[key].split("/")[-1]).exists()


def test_columns_decompose_exactly():
    res = run_scenario(PRESETS["s1-conv-agc"](seed=4, duration=300.0))
    c = res.columns
    assert np.array_equal(c["p_load_mw"], 7000.0 + (c["p_ou_mw"] + c["p_ramp_mw"] + c["p_jump_mw"]))


def test_config_echo_reproduces_run(tmp_path):
    cfg = PRESETS["s2-conv-agc-pfc"](seed=11, duration=300.0)
    first = run_scenario(cfg)
    path = tmp_path / "echo.yaml"
    path.write_text(yaml.safe_dump(first.config_echo))
    again = run_scenario(load_config(str(path)))
    assert np.array_equal(first.trace.delta_f, again.trace.delta_f)


def test_yaml_preset_with_overrides(tmp_path):
    p = _yaml(tmp_path, {"preset": "s3-conv-pfc", "seed": 5, "duration": 120.0,
                         "resource_overrides": {"W1": {"pfc": {"deadband": 200.0}}}})
    cfg = load_config(p)
    assert cfg.seed == 5 and cfg.duration == 120.0
    w1 = next(r for r in cfg.resources if r.id == "W1")
    assert w1.pfc.deadband == 200.0 and w1.pfc.droop_pct == 4.0


@pytest.mark.parametrize("bad", [
    {"preset": "s9"},
    {"preset": "s3-conv-pfc", "colour": "red"},
    {"preset": "s3-conv-pfc", "resource_overrides": {"nope": {"p_max": 1.0}}},
    {"preset": "s3-conv-pfc", "disturbances": {"trips": [{"time": 10.0, "resource_id": "nope"}]}},
    {"preset": "s3-conv-pfc", "agc": {"participation": {"G1": 0.5, "nope": 0.5}}},
    {"preset": "s3-conv-pfc", "duration": -1.0},
    {"preset": "s3-conv-pfc", "resource_overrides": {"G1": {"kind": "Steam"}}},
])
def test_bad_configs(tmp_path, bad):
    with pytest.raises(ConfigError):
        load_config(_yaml(tmp_path, bad))


def test_roundtrip_dict():
    cfg = PRESETS["s4-ibr"]()
    assert config_to_dict(config_from_dict(config_to_dict(cfg))) == config_to_dict(cfg)


def test_compare_keeps_order_and_duplicates():
    a = PRESETS["s3-conv-pfc"](seed=2, duration=300.0)
    b = PRESETS["s1-conv-agc"](seed=2, duration=300.0)
    comp = compare_scenarios([a, b, a])
    assert [r["scenario"] for r in comp.rows] == ["s3-conv-pfc", "s1-conv-agc", "s3-conv-pfc"]
    assert comp.rows[0] == comp.rows[2]
    csv = comp.to_csv().splitlines()
    assert csv[0].startswith("scenario,sigma_f_mhz,pct_out_200")
    assert len(comp.to_text().splitlines()) == 5
    with pytest.raises(ConfigError):
        compare_scenarios([a])


def test_reserve_calc():
    assert reserve_calc(20000.0, 1.7, 150.0, 15.0, 50.0) == pytest.approx(3176.47, abs=0.01)
    assert reserve_calc(5000.0, 5.0, 10.0, 15.0) == 0.0
    assert reserve_calc(20000.0, 1.7, -150.0, 15.0) == reserve_calc(20000.0, 1.7, 150.0, 15.0)
    with pytest.raises(ConfigError):
        reserve_calc(20000.0, 0.0, 150.0, 15.0)


def test_trip_in_run_is_logged():
    cfg = PRESETS["s3-conv-pfc"](duration=120.0)
    cfg.disturbances = DisturbanceConfig(ou=OuParams(sigma=0.0), trips=[Trip(30.0, "G2")])
    res = run_scenario(cfg)
    (ev,) = res.events
    assert ev["id"] == "G2" and ev["t"] == 30.0 and ev["lost_mw"] > 0
    assert res.trace.delta_f[3000] == 0.0 and res.trace.delta_f[3001] < 0
    assert len(res.metrics.recovery_times) == 1


def test_step_size_convergence():
    cfg = PRESETS["s2-conv-agc-pfc"](seed=1, duration=3600.0)
    cfg.disturbances.ou = OuParams(sigma=0.0)
    fine = copy.deepcopy(cfg)
    fine.system = replace(cfg.system, dt=0.005)
    a = np.abs(run_scenario(cfg).trace.delta_f).max()
    b = np.abs(run_scenario(fine).trace.delta_f).max()
    assert a > 50.0
    assert abs(a - b) / b < 0.01


def test_cli_run_and_reserve_calc(tmp_path, capsys):
    assert main(["reserve-calc", "--fleet-mw", "20000", "--droop-pct", "1.7", "--delta-f-mhz", "150",
                 "--deadband-mhz", "15"]) == 0
    assert capsys.readouterr().out.strip() == "3176.5 MW"
    assert main(["run", "s4-ibr", "--seed", "3", "--duration", "30", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "s4-ibr_trace.csv").exists()
    assert main(["analyze", str(tmp_path / "s4-ibr_trace.csv"), "--json"]) == 0
    assert '"sigma_f"' in capsys.readouterr().out


def test_cli_compare(tmp_path, capsys):
    assert main(["compare", "s1-conv-agc", "s3-conv-pfc", "--duration", "30", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "s1-conv-agc" in out and "s3-conv-pfc" in out
    assert (tmp_path / "comparison.csv").exists()


def test_cli_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    infeasible = _yaml(tmp_path, {"preset": "s2-conv-agc-pfc", "demand": 12000.0, "duration": 10.0}, "inf.yaml")
    assert main(["run", infeasible, "--out", str(tmp_path)]) == 4
    unstable = _yaml(tmp_path, {"preset": "s3-conv-pfc", "duration": 10.0,
                                "resource_overrides": {"B1": {"tau_resp": 1e-4}}}, "nan.yaml")
    with np.errstate(all="ignore"):
        assert main(["run", unstable, "--out", str(tmp_path)]) == 3
    assert main(["reserve-calc", "--fleet-mw", "1", "--droop-pct", "0", "--delta-f-mhz", "1",
                 "--deadband-mhz", "0"]) == 2
