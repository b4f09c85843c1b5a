import csv
import json

import pytest

from lambda_absorb.cli import PRESETS, main
from lambda_absorb.config import RunConfig, validate_config, to_dict
from lambda_absorb.errors import ConfigurationError
from lambda_absorb.model import CascadeParams
from lambda_absorb.obe import ObeParams
from lambda_absorb.plot import emit_plot, render_svg
from lambda_absorb.runner import CSV_HEADER, run


def test_empty_config_is_canonical():
    cfg = validate_config("{}")
    assert cfg == RunConfig()
    assert cfg.params == CascadeParams()
    assert cfg.n_traj == 10_000 and cfg.integrator.dt == 1e-3 and cfg.integrator.t_end == 100.0


@pytest.mark.parametrize("text,where", [
    ('{"bogus": 1}', "bogus"),
    ('{"params": {"gamma31_S": -1}}', "gamma31_S"),
    ('{"params": {"eta": 1.5}}', "eta"),
    ('{"params": {"gama31_S": 1}}', "params.gama31_S"),
    ('{"params": {"pulse": {"tau": "x"}}}', "params.pulse.tau"),
    ('{"ensemble": {"n_traj": 0}}', "ensemble.n_traj"),
    ('{"ensemble": {"n_traj": 2.5}}', "ensemble.n_traj"),
    ('{"scenario": "nope"}', "scenario"),
    ('{"engine": "fast"}', "engine"),
    ('{"sweep": {"path": "params.pulse", "values": [1]}}', "sweep.path"),
    ('{"sweep": {"path": "params.eta", "values": []}}', "sweep.values"),
    ('{"sweep": {"path": "params.eta", "values": [2.0]}}', "sweep.values"),
    ('{"integrator": {"dt": 0}}', "dt"),
    ("[1, 2]", "object"),
    ("{not json", "JSON"),
])
def test_invalid_configs(text, where):
    with pytest.raises(ConfigurationError, match=where.replace(".", r"\.")):
        validate_config(text)


@pytest.mark.parametrize("text", [
    "{}",
    '{"scenario": "coherent_obe", "params": {"beta": [0.01, 0.02], "gamma32": 3}}',
    '{"scenario": "polarization_entanglement", "params": {"eta": 0.3, "eta_S": 0.3},'
    ' "sweep": {"path": "params.eta", "values": [0.1, 0.2]}, "outputs": {"svg": "a.svg"}}',
])
def test_round_trip(text):
    cfg = validate_config(text)
    assert validate_config(json.dumps(to_dict(cfg))) == cfg


def test_beta_forms():
    a = validate_config('{"scenario": "coherent_obe", "params": {"beta": 0.5}}').params
    b = validate_config('{"scenario": "coherent_obe", "params": {"beta": [0.5, 0.0]}}').params
    assert isinstance(a, ObeParams) and complex(a.beta) == complex(b.beta) == 0.5


def _small(tmp_path, **extra):
    raw = {
        "scenario": "lambda_basic",
        "ensemble": {"n_traj": 20, "master_seed": 3},
        "sweep": {"path": "params.gamma32_T", "values": [0.5, 1.0]},
        "outputs": {"csv": "r.csv", "json": "r.json", "svg": "r.svg"},
    }
    raw.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def test_run_outputs_are_reproducible(tmp_path):
    cfg_path = _small(tmp_path)
    outs = []
    for d in ("a", "b"):
        assert main(["run", "--config", str(cfg_path), "--out-dir", str(tmp_path / d)]) == 0
        outs.append(((tmp_path / d / "r.csv").read_bytes(), (tmp_path / d / "r.svg").read_bytes()))
    assert outs[0] == outs[1]
    rows = list(csv.reader((tmp_path / "a" / "r.csv").read_text().splitlines()))
    assert tuple(rows[0]) == CSV_HEADER
    engines = {r[2] for r in rows[1:]}
    assert engines == {"mcwf", "oracle"}
    for r in rows[1:]:
        assert r[6] == ("20" if r[2] == "mcwf" else "0")
        assert r[7] == ("3" if r[2] == "mcwf" else "")
    summary = json.loads((tmp_path / "a" / "r.json").read_text())
    assert summary["version"].startswith("0.1.0")
    assert summary["config"]["ensemble"]["n_traj"] == 20
    assert summary["derived"]["oracle"]["peak_ratio"] == 1.0


def test_seed_override_changes_mcwf_only(tmp_path):
    cfg_path = _small(tmp_path, sweep=None)
    main(["run", "--config", str(cfg_path), "--out-dir", str(tmp_path / "a")])
    main(["run", "--config", str(cfg_path), "--out-dir", str(tmp_path / "b"), "--seed", "4"])
    read = lambda d: {(r[2], r[3]): r[4] for r in csv.reader((tmp_path / d / "r.csv").read_text().splitlines()[1:])}  # noqa: E731
    a, b = read("a"), read("b")
    assert a[("oracle", "absorbed")] == b[("oracle", "absorbed")]
    assert a[("mcwf", "absorbed")] != b[("mcwf", "absorbed")]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"params": {"eta": 7}}')
    assert main(["run", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "params" in err and "eta" in err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    # a step size the master equation cannot follow is a runtime failure
    unstable = tmp_path / "unstable.json"
    unstable.write_text(json.dumps({"engine": "oracle", "integrator": {"dt": 2.0}, "outputs": {"csv": "u.csv"}}))
    assert main(["run", "--config", str(unstable), "--out-dir", str(tmp_path)]) == 1
    assert "IntegratorError" in capsys.readouterr().err


def test_obe_rejects_mcwf(tmp_path):
    assert main(["obe", "--engine", "mcwf", "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize("preset", ["jitter", "entangle", "obe", "sweep-eta"])
def test_presets_small(preset, tmp_path):
    args = [preset, "--out-dir", str(tmp_path), "--seed", "1"]
    if preset != "obe":
        args += ["--n-traj", "10"]
    assert main(args) == 0
    out = PRESETS[preset]["outputs"]
    assert (tmp_path / out["csv"]).exists() and (tmp_path / out["json"]).exists()
    if out.get("svg"):
        assert (tmp_path / out["svg"]).read_text().startswith("<svg")


def test_run_function_direct(tmp_path):
    cfg = validate_config('{"engine": "oracle", "scenario": "polarization_entanglement"}')
    summary = run(cfg, tmp_path)
    assert summary["derived"]["oracle"]["bell_fidelity"][0] == pytest.approx(1.0, abs=1e-9)


def test_plot_single_point_and_empty(tmp_path):
    p = emit_plot({"x": ([1.0], [0.5], None)}, tmp_path / "one.svg", xlabel="a", ylabel="b", title="t")
    text = p.read_text()
    assert text.startswith("<svg") and "<circle" in text
    assert render_svg({"x": ([1.0], [0.5], None)}, xlabel="a", ylabel="b", title="t") == text
    with pytest.raises(ConfigurationError):
        emit_plot({}, tmp_path / "none.svg", xlabel="a", ylabel="b", title="t")
