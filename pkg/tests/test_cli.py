import shutil
import subprocess

import numpy as np
import pytest

from spic.cli import main


def run_cli(argv):
    return main(argv)


def strip_timing(csv_text):
    lines = csv_text.strip().split("\n")
    return [",".join(line.split(",")[:-1]) for line in lines]


def test_run_on_inline_sbm(tmp_path, capsys):
    out = tmp_path / "report.csv"
    code = run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--k", "2",
                    "--runs", "2", "--epochs", "15", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "+-" in stdout
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "model,dataset,k,beta,runs,epochs,metric,mean,std,seconds_per_run"
    row = lines[1].split(",")
    assert row[0] == "dad" and row[1] == "sbm2x20" and row[2] == "2" and row[4] == "2"
    assert (tmp_path / "report.png").exists()


def test_run_no_figures(tmp_path):
    out = tmp_path / "r.csv"
    code = run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "da", "--k", "2",
                    "--runs", "1", "--epochs", "10", "--out", str(out), "--no-figures"])
    assert code == 0
    assert out.exists()
    assert not (tmp_path / "r.png").exists()


def test_run_rl_am_on_inline_sbm(tmp_path):
    out = tmp_path / "rl.csv"
    code = run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "rl_am", "--k", "3",
                    "--runs", "1", "--epochs", "10", "--out", str(out), "--no-figures"])
    assert code == 0
    assert out.read_text().count("\n") == 2


def test_run_is_byte_stable_apart_from_timing(tmp_path):
    args = ["run", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--k", "2",
            "--runs", "2", "--epochs", "15", "--no-figures"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_alpha_outside_unit_interval_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "appnp", "--alpha", "1.5",
                 "--k", "3"])
    assert err.value.code == 2
    assert "alpha must be in (0,1)" in capsys.readouterr().err


def test_alpha_requires_appnp(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--alpha", "0.2"])
    assert err.value.code == 2
    assert "appnp" in capsys.readouterr().err


def test_random_laplacian_rejects_shift(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "rl_am", "--beta", "1.0"])
    assert err.value.code == 2
    assert "beta" in capsys.readouterr().err


def test_bad_sbm_text_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["run", "--sbm", "2x20:0.4", "--model", "dad"])
    assert err.value.code == 2
    assert "BLOCKSxSIZE:PIN:POUT:LABELED" in capsys.readouterr().err


def test_missing_data_directory_is_runtime_error(tmp_path, capsys):
    code = run_cli(["run", "--data", str(tmp_path / "nope"), "--model", "dad", "--k", "2",
                    "--runs", "1", "--out", str(tmp_path / "r.csv"), "--no-figures"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_sbm_command_writes_loadable_directory(tmp_path):
    out = tmp_path / "toy"
    code = run_cli(["sbm", "--blocks", "2", "--size", "15", "--pin", "0.4", "--pout", "0.05",
                    "--labeled", "3", "--dim", "8", "--out", str(out), "--seed", "7"])
    assert code == 0
    from spic.graphdata import load_graph

    g = load_graph(out)
    assert g.num_nodes == 30
    assert g.num_features == 8

    again = tmp_path / "toy2"
    run_cli(["sbm", "--blocks", "2", "--size", "15", "--pin", "0.4", "--pout", "0.05",
             "--labeled", "3", "--dim", "8", "--out", str(again), "--seed", "7"])
    for name in ("graph.json", "edges.tsv", "features.tsv", "labels.tsv", "masks.tsv"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_entropy_da_matches_log_degree(tmp_path, capsys):
    data = tmp_path / "g"
    run_cli(["sbm", "--blocks", "2", "--size", "12", "--pin", "0.5", "--pout", "0.1",
             "--labeled", "2", "--dim", "6", "--out", str(data), "--seed", "3"])
    out = tmp_path / "entropy.tsv"
    code = run_cli(["entropy", "--data", str(data), "--model", "da", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "mean entropy" in stdout and "nats" in stdout

    from spic.graphdata import load_graph

    g = load_graph(data)
    deg = np.asarray(g.adjacency.sum(axis=1)).ravel()
    values = np.array([float(line) for line in out.read_text().strip().split("\n")])
    # the TSV keeps 6 significant digits
    np.testing.assert_allclose(values, np.log(deg + 1.0), rtol=1e-5, atol=1e-5)
    hist = tmp_path / "entropy_hist.csv"
    assert hist.exists()
    assert hist.read_text().startswith("bin_lo,bin_hi,count\n")
    assert (tmp_path / "entropy.png").exists()


def test_oracle_check_reports_gap_and_convergence(tmp_path, capsys):
    data = tmp_path / "g"
    run_cli(["sbm", "--blocks", "2", "--size", "12", "--pin", "0.6", "--pout", "0.2",
             "--labeled", "2", "--dim", "6", "--out", str(data), "--seed", "4"])
    out = tmp_path / "conv.csv"
    code = run_cli(["oracle-check", "--data", str(data), "--model", "dad", "--kmax", "40",
                    "--out", str(out), "--no-figures"])
    assert code == 0
    assert "spectral gap |lambda_2|/|lambda_1| =" in capsys.readouterr().out
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "k,similarity"
    assert len(lines) == 42
    sims = np.array([float(line.split(",")[1]) for line in lines[1:]])
    burn = 5
    assert (np.diff(sims[burn:]) >= -1e-9).all()
    assert sims[-1] > sims[0]


def test_sweep_combined_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = run_cli(["sweep", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--axis", "k",
                    "--values", "3,2", "--runs", "1", "--epochs", "10", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert [line.split(",")[2] for line in lines[1:]] == ["2", "3"]
    assert (tmp_path / "sweep.png").exists()
    assert capsys.readouterr().out.count("+-") == 2


def test_sweep_beta_restricted_to_shiftable_families(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["sweep", "--sbm", "2x20:0.4:0.02:4", "--model", "rl_am", "--axis", "beta",
                 "--values", "0,1"])
    assert err.value.code == 2
    assert "beta" in capsys.readouterr().err


def test_sweep_bad_values_text(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["sweep", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--axis", "k",
                 "--values", "2,x"])
    assert err.value.code == 2


def test_threads_env_fallback_invalid(monkeypatch, capsys):
    monkeypatch.setenv("SPIC_THREADS", "banana")
    with pytest.raises(SystemExit) as err:
        run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--k", "2"])
    assert err.value.code == 2
    assert "SPIC_THREADS" in capsys.readouterr().err


def test_threads_flag_accepted(tmp_path, monkeypatch):
    monkeypatch.delenv("SPIC_THREADS", raising=False)
    out = tmp_path / "r.csv"
    code = run_cli(["run", "--sbm", "2x20:0.4:0.02:4", "--model", "dad", "--k", "2",
                    "--runs", "1", "--epochs", "5", "--threads", "2", "--out", str(out),
                    "--no-figures"])
    assert code == 0


def test_installed_entry_point(tmp_path):
    exe = shutil.which("spic")
    assert exe is not None, "spic console script missing from PATH"
    data = tmp_path / "g"
    gen = subprocess.run([exe, "sbm", "--blocks", "2", "--size", "12", "--pin", "0.5",
                          "--pout", "0.05", "--labeled", "2", "--out", str(data)],
                         capture_output=True, text=True)
    assert gen.returncode == 0, gen.stderr
    run = subprocess.run([exe, "run", "--data", str(data), "--model", "dad", "--k", "2",
                          "--runs", "1", "--epochs", "5", "--out", str(tmp_path / "r.csv"),
                          "--no-figures"], capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert "+-" in run.stdout
    usage = subprocess.run([exe, "run", "--model", "dad"], capture_output=True, text=True)
    assert usage.returncode == 2
