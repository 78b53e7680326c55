import pytest

import main
from config import Config
from core_model import parse_bitstrings


def run_cli(args, capsys):
    code = main.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_params_command(capsys):
    code, out, _ = run_cli(["params", "--n", "994", "--k", "14", "--delta", "3"], capsys)
    assert code == 0
    values = dict(line.split("=", 1) for line in out.splitlines())
    assert values["ell"] == "71"
    assert values["num_blocks"] == "14"
    assert values["redundancy_D"] == "65"
    assert values["rate"] == "0.934608"
    assert float(values["delta_star"]) > 0


def test_params_selects_delta(capsys):
    code, out, _ = run_cli(["params", "--n", "2000", "--k", "10", "--alpha", "0.75"], capsys)
    assert code == 0
    assert "delta=5" in out.splitlines()


def test_sample_corrupt_reconstruct_pipeline(tmp_path, capsys):
    codeword = tmp_path / "x.txt"
    traces = tmp_path / "y.txt"
    estimate = tmp_path / "xhat.txt"
    common = ["--n", "994", "--k", "14", "--delta", "3"]

    assert main.main(["sample", *common, "--seed", "3", "--output", str(codeword)]) == 0
    assert main.main(["corrupt", str(codeword), "--t", "3", "--p", "0", "--output", str(traces)]) == 0
    assert main.main(["reconstruct", str(traces), *common, "--output", str(estimate)]) == 0
    capsys.readouterr()

    x = parse_bitstrings(codeword.read_text())
    ys = parse_bitstrings(traces.read_text())
    xhat = parse_bitstrings(estimate.read_text())
    assert len(x) == 1 and len(ys) == 3
    assert xhat[0].tolist() == x[0].tolist()


def test_sample_writes_to_stdout(capsys):
    code, out, err = run_cli(["sample", "--n", "994", "--k", "14", "--delta", "3", "--count", "2",
                              "--scheme", "coded-bma"], capsys)
    assert code == 0
    assert [len(s) for s in parse_bitstrings(out)] == [994, 994]
    assert "✅" in err


def test_experiment_command_saves_run(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(Config, "RESULTS_DIR", tmp_path / "results")
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("scheme=ours\nn=994\nk=14\ndelta=3\nt=2\ntrials=2\n")
    code, out, err = run_cli(["experiment", str(cfg), "--save"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("scheme,n,k,alpha,delta,ell,t")
    assert len(list((tmp_path / "results").glob("*.json"))) == 1

    code, out, _ = run_cli(["runs"], capsys)
    assert code == 0
    assert "schemes=ours" in out


def test_usage_errors_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main.main(["params"])
    assert exc.value.code == 1

    bad = tmp_path / "bad.cfg"
    bad.write_text("n=100\nwidth=3\n")
    code, _, err = run_cli(["experiment", str(bad)], capsys)
    assert code == 1
    assert "❌" in err

    code, _, _ = run_cli(["params", "--n", "1000", "--k", "10", "--delta", "10"], capsys)
    assert code == 1


def test_corrupt_rejects_channel_exit_one(tmp_path, capsys):
    codeword = tmp_path / "x.txt"
    codeword.write_text("0110\n")
    # k/n = 3/4 is not below 1/2
    code, _, err = run_cli(["corrupt", str(codeword), "--t", "2", "--k", "3"], capsys)
    assert code == 1
    assert "invalid channel" in err
    code, _, _ = run_cli(["corrupt", str(codeword), "--t", "0", "--p", "0.1"], capsys)
    assert code == 1


@pytest.mark.parametrize("override", [["--trials", "0"], ["--seed", "-1"]])
def test_experiment_overrides_are_validated(tmp_path, capsys, override):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("scheme=ours\nn=994\nk=14\ndelta=3\nt=2\ntrials=2\n")
    code, out, err = run_cli(["experiment", str(cfg), *override], capsys)
    assert code == 1
    assert out == ""
    assert "invalid configuration" in err


def test_format_error_exit_one(tmp_path, capsys):
    traces = tmp_path / "y.txt"
    traces.write_text("01x1\n")
    code, _, err = run_cli(["reconstruct", str(traces), "--n", "994", "--k", "14", "--delta", "3"], capsys)
    assert code == 1
    assert "line 1" in err


def test_runtime_errors_exit_two(tmp_path, capsys):
    code, _, _ = run_cli(["experiment", str(tmp_path / "missing.cfg")], capsys)
    assert code == 2


def test_no_command(capsys):
    assert main.main([]) == 1
