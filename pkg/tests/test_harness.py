import csv

import numpy as np
import pytest

from fennsim.formats import save_events, save_weights
from fennsim.harness.cli import UsageError, build_spec, main, parse_config
from fennsim.harness.experiments import ExperimentSpec, run_experiment, run_seed

SMALL_RSNN = ["--set", "n_hidden=32", "--set", "steps=10", "--set", "n_in=8", "--set", "n_out=3"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_config():
    cfg = parse_config("# comment\nseed = 7\n\nlambda=2.5  # trailing\n")
    assert cfg == {"seed": "7", "lambda": "2.5"}
    with pytest.raises(UsageError):
        parse_config("a = 1\na = 2\n")
    with pytest.raises(UsageError):
        parse_config("just words\n")


def test_build_spec_types_and_errors():
    spec = build_spec("poisson", {"lambda": "3", "n": "0x40", "seed": "9"})
    assert spec.seed == 9 and spec.param("lambda") == 3.0 and spec.param("n") == 64
    with pytest.raises(UsageError):
        build_spec("poisson", {"mu": "3"})
    with pytest.raises(UsageError):
        build_spec("poisson", {"n": "many"})
    with pytest.raises(UsageError):
        build_spec("poisson", {"seed": "-1"})
    assert build_spec("rsnn", {"check_oracle": "off"}).param("check_oracle") is False


def test_repeat_seeds_are_distinct():
    assert len({run_seed(1, r) for r in range(32)}) == 32
    assert run_seed(2 ** 64 - 1, 0) == 0


def test_unknown_experiment_param_rejected():
    with pytest.raises(ValueError):
        run_experiment(ExperimentSpec("poisson", 1, 1, {"bogus": 1}))


def test_cli_poisson_writes_tables(tmp_path, capsys):
    assert main(["poisson", "--set", "n=320", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "poisson_summary.csv")
    assert rows[0][0] == "lambda"
    assert "wrote" in capsys.readouterr().out


def test_cli_bad_lambda_exits_2(tmp_path, capsys):
    assert main(["poisson", "--set", "lambda=-1", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_unknown_param_exits_2(tmp_path):
    assert main(["poisson", "--set", "nonsense=1", "--out", str(tmp_path)]) == 2
    assert main(["poisson", "--set", "novalue", "--out", str(tmp_path)]) == 2


def test_cli_missing_experiment_exits_2(tmp_path):
    assert main(["--out", str(tmp_path)]) == 2


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = rounding-hist\nn_pairs = 300\nseed = 4\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "rounding_summary.csv")
    assert rows[0][:2] == ["mode", "n"] and rows[1][1] == "300"


def test_outputs_are_byte_identical_on_rerun(tmp_path):
    for d in ("a", "b"):
        assert main(["rsnn", *SMALL_RSNN, "--seed", "5", "--out", str(tmp_path / d)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["rsnn_mix.csv", "rsnn_outputs.csv", "rsnn_raster.csv", "rsnn_summary.csv"]
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_rsnn_from_files(tmp_path):
    g = np.random.default_rng(0)
    wdir = tmp_path / "net"
    wdir.mkdir()
    save_weights(wdir / "w_in.bin", g.integers(-3000, 3000, (8, 32)), 14)
    save_weights(wdir / "w_rec.bin", g.integers(-300, 300, (32, 32)), 14)
    save_weights(wdir / "w_out.bin", g.integers(-300, 300, (32, 3)), 14)
    save_events(tmp_path / "e.bin", [(0, 1), (3, 2), (3, 7)])
    args = ["rsnn", *SMALL_RSNN, "--set", f"weights={wdir}", "--set", f"events={tmp_path / 'e.bin'}"]
    assert main([*args, "--out", str(tmp_path / "o")]) == 0
    summary = read_csv(tmp_path / "o" / "rsnn_summary.csv")
    assert summary[1][summary[0].index("input_events")] == "3"
    save_weights(wdir / "w_out.bin", g.integers(-300, 300, (32, 3)), 12)
    assert main([*args, "--out", str(tmp_path / "p")]) == 2


def test_alif_compare_staircase_headers(tmp_path):
    assert main(["alif-compare", "--set", "regime=staircase", "--repeats", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "alif_staircase.csv")
    assert rows[0] == ["regime", "config", "rounding", "additive", "repeats", "nrmse_v_mean", "nrmse_v_sd",
                       "nrmse_a_mean", "nrmse_a_sd"]
    assert [r[1] for r in rows[1:]] == ["wrap", "saturate"]
    with pytest.raises(ValueError):
        run_experiment(ExperimentSpec("alif-compare", 1, 1, {"regime": "zigzag"}))


def test_instr_mix_table():
    r = run_experiment(build_spec("instr-mix", {"n_hidden": "32", "steps": "5", "n_in": "8", "n_out": "3"}))
    mix = r.tables["instr_mix"]
    assert mix.header[:2] == ["region", "op_class"]
    assert {row[0] for row in mix.rows} >= {"spike_processing", "neuron_update"}
