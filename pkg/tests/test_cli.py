import csv

import numpy as np
import pytest

from lsnn.cli import (CPWL_HEADER, EXIT_CHECK, EXIT_CONFIG, EXIT_IO, EXIT_OK, cmd_cpwl_check,
                      main)
from lsnn.metrics import REPORT_HEADER, read_report_csv
from lsnn.network import NetworkShape, init_random, load_params, save_params

TINY = ["--set", "h=0.1", "--set", "total_iters=6", "--set", "warmup_restarts=2",
        "--set", "warmup_iters=3"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults(capsys):
    assert main(["defaults"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "h = 0.01" in out and "rho = auto" in out
    assert main(["defaults", "--preset", "desk", "--problem", "3d-cylinder"]) == EXIT_OK
    assert "shape = 3-" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["train", "--set", "h=0.03"],
    ["train", "--set", "colour=blue"],
    ["train", "--problem", "2d-curve", "--shape", "3-5-1"],
    ["train", "--preset", "desk"],
    ["table", "--shapes", "2-5", "--out", "x.csv"],
])
def test_config_errors_exit_2(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("h = 0.02\nwarmup = 7\n")
    assert main(["train", "--config", str(path)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_missing_params_file_is_io_error(tmp_path):
    assert main(["dump", str(tmp_path / "none.bin"), "--problem", "2d-curve",
                 "--out-dir", str(tmp_path)]) == EXIT_IO


def test_train_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--problem", "2d-curve", "--shape", "2-3-1", "--output-dir",
                 str(out)] + TINY + ["--set", "checkpoint_every=2"]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"config.txt", "loss.csv", "params.bin", "report.csv", "checkpoints"} <= names
    assert len(read_rows(out / "loss.csv")) == 1 + 6
    assert load_params(out / "params.bin").shape.label() == "2-3-1"
    assert read_report_csv(out / "report.csv")[0].parameters == 13
    assert capsys.readouterr().out.splitlines()[0] == ",".join(REPORT_HEADER)


def test_train_zero_iterations_keeps_best_warmup(tmp_path):
    out = tmp_path / "run"
    argv = ["train", "--problem", "2d-curve", "--shape", "2-3-1", "--output-dir", str(out),
            "--set", "h=0.1", "--set", "total_iters=0", "--set", "warmup_iters=2",
            "--set", "warmup_restarts=2"]
    assert main(argv) == EXIT_OK
    assert len(read_rows(out / "loss.csv")) == 1 + 2


def test_empty_table_has_header_only(tmp_path):
    path = tmp_path / "t.csv"
    assert main(["table", "--problem", "2d-curve", "--out", str(path)]) == EXIT_OK
    assert read_rows(path) == [REPORT_HEADER]


def test_table_is_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for i, path in enumerate(paths):
        argv = ["table", "--problem", "2d-curve", "--shapes", "2-3-1,2-2-2-1",
                "--seeds", "0,10", "--output-dir", str(tmp_path / f"r{i}"),
                "--out", str(path)] + TINY
        assert main(argv) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert [r[0] for r in read_rows(paths[0])[1:]] == ["2-3-1", "2-2-2-1"]


def test_grad_check(capsys):
    assert main(["grad-check", "--problem", "2d-curve", "--shape", "2-3-3-1",
                 "--draws", "2", "--h", "0.25"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS")
    assert main(["grad-check", "--problem", "2d-curve", "--shape", "2-3-3-1",
                 "--draws", "2", "--h", "0.25", "--corrupt"]) == EXIT_CHECK
    assert capsys.readouterr().out.startswith("FAIL")


def test_cpwl_check(tmp_path):
    path = tmp_path / "c.csv"
    assert main(["cpwl-check", "--eps", "0.1,0.05", "--out", str(path)]) == EXIT_OK
    rows = read_rows(path)
    assert rows[0] == CPWL_HEADER and len(rows) == 3
    for eps, l2, der, graph, bound in (map(float, r) for r in rows[1:]):
        assert der == 0.0 and graph <= bound


def test_cpwl_check_empty():
    assert cmd_cpwl_check([]) == ([], True)


@pytest.mark.parametrize("problem,dim", [("2d-three-segment", 2), ("3d-plane", 3)])
def test_dump(problem, dim, tmp_path):
    params = init_random(NetworkShape((dim, 4, 4, 1)), 0)
    save_params(params, tmp_path / "p.bin")
    out = tmp_path / "dump"
    assert main(["dump", str(tmp_path / "p.bin"), "--problem", problem,
                 "--resolution", "11", "--out-dir", str(out)]) == EXIT_OK
    grid = read_rows(out / "grid.csv")
    assert len(grid) == 1 + 11 * 11
    trace = np.array(read_rows(out / "trace.csv")[1:], dtype=float)
    assert len(trace) == 1001
    for layer in (1, 2):
        assert (out / f"breaking_layer{layer}.csv").exists()
    if dim == 3:
        assert {r[2] for r in grid[1:]} == {"0.5"}


def test_dump_dimension_mismatch(tmp_path):
    save_params(init_random(NetworkShape((3, 2, 1)), 0), tmp_path / "p.bin")
    assert main(["dump", str(tmp_path / "p.bin"), "--problem", "2d-curve",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
