import numpy as np
import pytest

from itebench.cli import main


def test_gen_dumps_deterministic_csv(capsys):
    argv = ["gen", "--n-train", "5", "--regime", "constant", "--seed", "4"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    lines = first.strip().split("\n")
    assert lines[0].startswith("# scenario=const0.5")
    assert lines[1] == "x1,x2,t,y_obs,y1,y0"
    assert len(lines) == 7
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_gen_writes_file(tmp_path, capsys):
    out = tmp_path / "draw.csv"
    assert main(["gen", "--n-train", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text().count("\n") == 5


def test_orders_report(tmp_path, capsys):
    rng = np.random.default_rng(1)
    base = np.abs(rng.normal(size=400))
    scores = np.column_stack([2.0 * base + 0.5, base])  # pseudo dominates
    path = tmp_path / "scores.txt"
    np.savetxt(path, scores)
    assert main(["orders", "--scores", str(path)]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "relation,holds,max_violation,tolerance"
    assert out[1].startswith("fosd,1,")
    assert out[2].startswith("sosd,1,")
    assert out[3].startswith("mcx,1,")
    assert out[4].startswith("alpha_star,1.000000")


def test_orders_rejects_wrong_shape(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    np.savetxt(path, np.zeros((5, 3)))
    assert main(["orders", "--scores", str(path)]) == 2


def test_rate_table(capsys):
    assert main(["rate", "--n-grid", "200,400", "--reps", "1", "--oracle-mu",
                 "--n-test", "500", "--seed", "2"]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "n_train,m_mean,mean_abs_cov_error"
    assert len(out) == 3
    n200 = float(out[1].split(",")[1])
    assert n200 == pytest.approx(50.0, rel=0.2)


def test_probe_table(capsys):
    assert main(["probe", "--method", "split_pair", "--regime", "constant",
                 "--n-train", "120", "--n-test", "150", "--reps", "1",
                 "--seed", "3"]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "y,containment"
    assert len(out) == 4
    values = [float(row.split(",")[1]) for row in out[1:]]
    assert all(0.0 <= v <= 1.0 for v in values)


def test_bench_runs_grid_file(tmp_path, capsys):
    grid = tmp_path / "grid.txt"
    grid.write_text(
        "reps = 1\nn_train = 150\nn_test = 150\n"
        "[scenario]\npropensity = constant\nsignal = zero\n"
        "[method]\nname = split_pair\n"
    )
    out = tmp_path / "result.csv"
    assert main(["bench", "--grid", str(grid), "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "scenario,method,target,coverage,cov_se,mean_length,inf_fraction,reps"
    assert len(lines) == 2
    assert lines[1].startswith("const0.5-homo-ind-flat-rho0,split_pair,0.900000,")


def test_bench_plot_dir(tmp_path):
    grid = tmp_path / "grid.txt"
    grid.write_text(
        "reps = 1\nn_train = 150\nn_test = 100\ntargets = 0.8,0.9\n"
        "[scenario]\npropensity = constant\nsignal = zero\n"
        "[method]\nname = split_pair\n"
    )
    plots = tmp_path / "plots"
    assert main(["bench", "--grid", str(grid), "--out", str(tmp_path / "r.csv"),
                 "--plot-dir", str(plots)]) == 0
    assert (plots / "coverage_vs_target.svg").exists()
    assert (plots / "length_vs_target.svg").exists()


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bench"])  # missing required --grid
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["teleport"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["gen", "--regime", "sorted"])
    assert e.value.code == 1


def test_runtime_errors_exit_two(capsys):
    assert main(["bench", "--grid", "/nonexistent/grid.txt"]) == 2
    err = capsys.readouterr().err
    assert "itebench:" in err
