import dataclasses
import json

import numpy as np
import pytest

from coreset_forge import io as cfio
from coreset_forge.cli import main, resolve_threads
from coreset_forge.errors import InvalidParameter
from coreset_forge.evaluate import SolutionSuite
from coreset_forge.experiment import RunConfig, generate_instance, parse_generator, run_experiment
from coreset_forge.sampler import SamplerConfig

SMALL_SUITES = (SolutionSuite("RandomBox", 5), SolutionSuite("CoresetAdversarial", 2))


def small_config(tmp_path, name="run", **kw):
    base = dict(source="gmm n=1500 d=3 k=3 seed=2", k=3, z=2, epsilon=0.2, seed=7, suites=SMALL_SUITES, out_dir=str(tmp_path / name))
    base.update(kw)
    return RunConfig(**base)


def test_generator_spec_basis():
    assert parse_generator("basis k=2 eps=1/12") == ("basis", {"k": 2, "eps": 1 / 12})
    P, info = generate_instance("basis k=2 eps=1/12")
    assert info["d"] == 8 and P.n == 8 and P.d == 16


def test_generator_spec_errors():
    for spec in ("basis k=2", "basis k=2.5 eps=0.1", "cube n=3", "gmm n=10 d=2 k=2 color=3"):
        with pytest.raises(InvalidParameter):
            parse_generator(spec)


def test_run_experiment_deterministic(tmp_path):
    a = run_experiment(small_config(tmp_path, "a"))
    b = run_experiment(small_config(tmp_path, "b"))
    assert (tmp_path / "a" / "coreset.csv").read_bytes() == (tmp_path / "b" / "coreset.csv").read_bytes()
    assert (tmp_path / "a" / "coreset.csv.json").read_bytes() == (tmp_path / "b" / "coreset.csv.json").read_bytes()
    assert a.report.max == b.report.max
    bundle = json.loads((tmp_path / "a" / "bundle.json").read_text())
    assert bundle["passed"] == a.passed and bundle["report"]["n_solutions"] == 7


def test_rerun_from_echoed_config(tmp_path):
    first = run_experiment(small_config(tmp_path, "a"))
    echo = dict(first.config)
    echo["out_dir"] = str(tmp_path / "b")
    run_experiment(RunConfig.from_dict(json.loads(json.dumps(echo))))
    for name in ("coreset.csv", "report.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_echo_complete(tmp_path):
    cfg = small_config(tmp_path)
    echo = cfg.to_dict()
    assert set(echo) == {f.name for f in dataclasses.fields(RunConfig)}
    assert set(echo["sampler"]) == {f.name for f in dataclasses.fields(SamplerConfig)}
    assert echo["suites"][0] == {"kind": "RandomBox", "count": 5, "seed": 0}


def test_missing_input_leaves_no_output(tmp_path):
    cfg = small_config(tmp_path, source=str(tmp_path / "missing.csv"))
    with pytest.raises(FileNotFoundError):
        run_experiment(cfg)
    assert not (tmp_path / "run").exists()


def test_run_experiment_projection(tmp_path):
    cfg = small_config(tmp_path, source="gmm n=800 d=6 k=3 seed=1", sampler=SamplerConfig(project_dim=3))
    bundle = run_experiment(cfg)
    assert cfio.load_coreset(bundle.coreset_path).d == 3


def test_run_experiment_file_source(tmp_path):
    P, _ = generate_instance("gmm n=500 d=2 k=2 seed=4")
    cfio.save_points(P, tmp_path / "pts.bin", "f64le-binary")
    bundle = run_experiment(small_config(tmp_path, source=str(tmp_path / "pts.bin"), k=2))
    assert bundle.instance["kind"] == "file"


def test_cli_build_eval_exit_codes(tmp_path, capsys):
    src = "gmm n=1500 d=3 k=3 seed=2"
    out = tmp_path / "c.csv"
    assert main(["--seed", "3", "build", "-i", src, "-k", "3", "--eps", "0.2", "-o", str(out)]) == 0
    assert out.exists() and (tmp_path / "c.csv.json").exists()
    args = ["eval", "-i", src, "-k", "3", "--eps", "0.2", "-c", str(out), "--suite", "RandomBox=5"]
    assert main(["--json-out", str(tmp_path / "e.json")] + args) == 0
    assert json.loads((tmp_path / "e.json").read_text())["passed"] is True
    assert main(args + ["--max-distortion", "0"]) == 2
    assert main(["build", "-i", str(tmp_path / "nope.csv"), "-k", "3", "-o", str(tmp_path / "x.csv")]) == 1
    assert main(["build", "-k", "3"]) == 1
    assert main(["eval", "-i", src, "-k", "3", "--suite", "Bogus=3", "-c", str(out)]) == 1
    capsys.readouterr()


def test_cli_eval_baseline(tmp_path, capsys):
    code = main(["eval", "-i", "gmm n=800 d=2 k=2", "-k", "2", "--baseline-size", "40", "--suite", "DzSeeded=3"])
    data = json.loads(capsys.readouterr().out)
    assert code in (0, 2) and data["n_solutions"] == 3


def test_cli_lb_gen(tmp_path, capsys):
    assert main(["lb-gen", "basis", "-k", "2", "--eps", "1/12", "-o", str(tmp_path / "b.bin")]) == 0
    P = cfio.load_points(tmp_path / "b.bin")
    assert P.coords.shape == (8, 16)
    assert main(["--seed", "1", "lb-gen", "star", "-k", "4", "--eps", "0.25", "--clients", "16", "-o", str(tmp_path / "s.bin")]) == 0
    assert cfio.load_discrete(tmp_path / "s.bin").d_inf == 256.0
    assert main(["lb-gen", "basis", "-k", "2", "--eps", "1/6", "-o", str(tmp_path / "x.bin")]) == 1
    capsys.readouterr()


def test_cli_approx_inspect_mc(tmp_path, capsys):
    assert main(["approx", "-i", "gmm n=500 d=2 k=3", "-k", "3", "-o", str(tmp_path / "c.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["k"] == 3
    assert cfio.load_points(tmp_path / "c.csv").n == 3
    assert main(["inspect", "-i", "gmm n=500 d=2 k=3", "-k", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["n_points"] == 500
    assert main(["mc", "anticoncentration", "--trials", "2000"]) == 0
    assert json.loads(capsys.readouterr().out)["trials"] == 2000
    assert main(["mc", "unbiasedness", "-i", "gmm n=300 d=2 k=2", "-k", "2", "--trials", "200", "--delta", "10"]) == 0
    rows = json.loads(capsys.readouterr().out)["groups"]
    for row in rows:
        assert abs(row["mean_estimate"] - row["true_cost"]) <= 0.2 * row["true_cost"]


def test_cli_config_defaults_and_run(tmp_path, capsys):
    conf = tmp_path / "opts.json"
    conf.write_text(json.dumps({"input": "gmm n=400 d=2 k=2", "k": 2, "seed": 5}))
    assert main(["--config", str(conf), "inspect"]) == 0
    assert json.loads(capsys.readouterr().out)["n_points"] == 400
    conf.write_text(json.dumps({"input": "gmm n=400 d=2 k=2", "colour": 1}))
    assert main(["--config", str(conf), "inspect"]) == 1

    run_conf = tmp_path / "run.json"
    cfg = small_config(tmp_path, "bundle").to_dict()
    run_conf.write_text(json.dumps(cfg))
    code = main(["--config", str(run_conf), "run"])
    data = json.loads(capsys.readouterr().out)
    assert code == (0 if data["passed"] else 2)
    assert (tmp_path / "bundle" / "coreset.csv").exists()
    assert main(["run"]) == 1
    capsys.readouterr()


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv("CORESET_FORGE_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("CORESET_FORGE_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("CORESET_FORGE_THREADS", "x")
    with pytest.raises(InvalidParameter):
        resolve_threads(None)
