"""Acceptance criteria, one test per criterion (or per table row).

Each test prints a ``PASS``/``FAIL`` line and the run ends with a summary
section.  Criteria 6 to 8 train full desk-scale tables and take hours on a
single core; they run only with ``LSNN_RUN_SLOW=1``.  ``LSNN_SLOW_ROWS``
(comma-separated problem ids) restricts them to some table rows and
``LSNN_SLOW_SEEDS`` overrides the base seeds ``0,100,200``.
"""

import os
from dataclasses import replace

import numpy as np
import pytest

from lsnn.cli import cmd_cpwl_check, cmd_gradcheck, cmd_table, remark_fit, train_once
from lsnn.config import preset
from lsnn.cpwl import characteristic_jump, remark_network
from lsnn.metrics import diagonal_trace, probe_grid, sign_changes
from lsnn.network import NetworkShape, forward, param_count
from lsnn.optim import TrainSchedule
from lsnn.problems import PROBLEMS, PUBLISHED_TABLES, get_problem, make_remark_target

SLOW = os.environ.get("LSNN_RUN_SLOW") == "1"
SLOW_ROWS = [r for r in os.environ.get("LSNN_SLOW_ROWS", ",".join(PROBLEMS)).split(",") if r]
SLOW_SEEDS = [int(s) for s in os.environ.get("LSNN_SLOW_SEEDS", "0,100,200").split(",")]


def three_layer(name):
    return next(row[0] for row in PUBLISHED_TABLES[name] if row[0].count("-") == 3)


def two_layer(name):
    return next(row[0] for row in PUBLISHED_TABLES[name] if row[0].count("-") == 2)


def skip_slow(verdict, label):
    if not SLOW:
        verdict(label, None, "needs LSNN_RUN_SLOW=1")
        pytest.skip("desk-scale training; set LSNN_RUN_SLOW=1")
    if label.split("[")[-1].rstrip("]") not in SLOW_ROWS and "[" in label:
        verdict(label, None, "row not selected in LSNN_SLOW_ROWS")
        pytest.skip("row not selected")


# --- 1 --------------------------------------------------------------------

@pytest.mark.parametrize("name", list(PROBLEMS))
def test_criterion_1_gradient(name, verdict):
    dim = get_problem(name).dim
    shape = f"{dim}-5-5-1"
    res = cmd_gradcheck(name, shape, seed=0, draws=20, h=0.1 if dim == 2 else 0.2)
    ok = res.passed and res.max_deviation < 1e-5 and res.draws == 20
    verdict(f"criterion 1 gradient [{name}]", ok,
            f"{shape}, {res.draws} nets, max rel deviation {res.max_deviation:.2e} < 1e-5")
    assert ok


# --- 2 --------------------------------------------------------------------

def test_criterion_2_cpwl_bound(verdict):
    rows, within = cmd_cpwl_check([0.1, 0.04, 0.01])
    ratios = []
    for (e1, l1, *_), (e2, l2, *_) in zip(rows, rows[1:]):
        ratios.append((l1 / l2) / np.sqrt(e1 / e2))
    scaling = all(abs(r - 1) <= 0.10 for r in ratios)
    detail = ", ".join(f"eps={e:g}: {g:.4f} <= {b:.4f}" for e, _, _, g, b in rows)
    detail += "; sqrt-eps ratios " + ", ".join(f"{r:.3f}" for r in ratios)
    verdict("criterion 2 CPWL bound", within and scaling, detail)
    assert within and scaling


# --- 3 --------------------------------------------------------------------

def test_criterion_3_constructive_network(verdict):
    pts, _ = probe_grid(((0.0, 1.0), (0.0, 1.0)), 101)
    net = remark_network(0.2, pad_to=(4, 4))
    err = float(np.max(np.abs(forward(net, pts) - make_remark_target(0.2)(pts))))
    ok = net.shape.label() == "2-4-4-1" and err < 1e-12
    verdict("criterion 3 exact 2-4-4-1 network", ok, f"max abs error {err:.2e} < 1e-12")
    assert ok


# --- 4 --------------------------------------------------------------------

FIT_SEEDS = [0, 100, 200, 300, 400]
FIT_SCHEDULE = TrainSchedule(total_iters=40000, warmup_iters=2000)


def test_criterion_4_depth_separation(verdict):
    deep = []
    for seed in FIT_SEEDS:
        deep.append(remark_fit("2-4-4-1", 0.2, seed, schedule=FIT_SCHEDULE)[0])
        if deep[-1] <= 1e-3:
            break  # the best of the five can only be lower
    shallow = [remark_fit("2-8-1", 0.2, seed, schedule=FIT_SCHEDULE)[0] for seed in FIT_SEEDS]
    ok = min(deep) <= 1e-3 and min(shallow) > 0.1
    verdict("criterion 4 depth separation", ok,
            f"2-4-4-1 best {min(deep):.2e} <= 1e-3 (runs {len(deep)}); "
            f"2-8-1 best {min(shallow):.3f} > 0.1")
    assert ok


# --- 5 --------------------------------------------------------------------

JUMP_SMAX = {"2d-three-segment": 2.0, "2d-four-segment": 3.0, "2d-curve": 1.0,
             "2d-curve-uhat": 1.1, "3d-plane": 1.2, "3d-cylinder": 1.1}


def test_criterion_5_jump_constancy(verdict):
    worst = 0.0
    for name in PROBLEMS:
        prob = get_problem(name)
        trace = characteristic_jump(prob, prob.discontinuity, JUMP_SMAX[name], steps=2000)
        worst = max(worst, float(np.max(np.abs(trace.jump - trace.jump[0]))))
    trace = characteristic_jump(get_problem("2d-curve"), (0.0, 0.125), 0.9, steps=1000)
    x, y = trace.points.T
    parabola = float(np.max(np.abs(y - (x ** 2 + 0.125))))
    ok = worst <= 1e-6 and parabola <= 1e-6
    verdict("criterion 5 jump constancy", ok,
            f"max jump deviation {worst:.1e}, parabola deviation {parabola:.1e}")
    assert ok


# --- 6 to 8 -----------------------------------------------------------------

ROW_LIMITS = {"2d-three-segment": 0.15, "2d-four-segment": 0.17, "2d-curve": 0.13,
              "2d-curve-uhat": 0.10, "3d-plane": 0.11, "3d-cylinder": 0.10}

_runs = {}


def desk_run(name, shape):
    """Best-of-seeds desk-scale training, shared by criteria 6 to 8."""
    key = (name, shape)
    if key not in _runs:
        cfg = preset(name, "desk", shape)
        best = None
        for seed in SLOW_SEEDS:
            result, report = train_once(replace(cfg, seed=seed))
            print(f"  {name} {shape} seed {seed}: loss {result.final_loss:.4e} "
                  f"rel L2 {report.rel_l2:.4f}")
            if best is None or result.final_loss < best[0].final_loss:
                best = (result, report)
        _runs[key] = best
    return _runs[key]


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_criterion_6_table_row(name, verdict):
    label = f"criterion 6 table row [{name}]"
    skip_slow(verdict, label)
    shape = three_layer(name)
    _, report = desk_run(name, shape)
    ok = report.rel_l2 <= ROW_LIMITS[name]
    verdict(label, ok, f"{shape} rel L2 {report.rel_l2:.4f} <= {ROW_LIMITS[name]}")
    assert ok


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_criterion_7_depth_necessity(name, verdict):
    label = f"criterion 7 depth necessity [{name}]"
    skip_slow(verdict, label)
    deep, shallow = three_layer(name), two_layer(name)
    e3 = desk_run(name, deep)[1].rel_l2
    e2 = desk_run(name, shallow)[1].rel_l2
    ok = e2 >= 2 * e3
    verdict(label, ok, f"{shallow} {e2:.4f} >= 2 x {deep} {e3:.4f}")
    assert ok


def test_criterion_8_no_gibbs(verdict):
    label = "criterion 8 no-Gibbs trace [2d-three-segment]"
    skip_slow(verdict, label)
    name = "2d-three-segment"
    result, _ = desk_run(name, three_layer(name))
    _, _, _, v = diagonal_trace(result.params, get_problem(name))
    crossings = sign_changes(v)
    ok = bool(np.all(np.abs(v) <= 1.15)) and crossings == 1
    verdict(label, ok, f"range [{v.min():.3f}, {v.max():.3f}] within 1.15, "
                       f"{crossings} zero crossing(s)")
    assert ok


# --- 9 --------------------------------------------------------------------

def test_criterion_9_parameter_counts(verdict):
    expected = {51, 1201, 67, 3901, 4551, 56, 1501, 2801, 7501, 12001, 16001}
    mismatches = []
    counts = set()
    for name, rows in PUBLISHED_TABLES.items():
        for row in rows:
            n = param_count(NetworkShape.parse(row[0]))
            counts.add(n)
            if n != row[-1]:
                mismatches.append(f"{name} {row[0]}: {n} vs {row[-1]}")
    ok = not mismatches and counts == expected
    verdict("criterion 9 parameter counts", ok,
            "; ".join(mismatches) or f"{len(counts)} distinct counts all match")
    assert ok


# --- 10 -------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path, verdict):
    outputs = []
    for run in ("a", "b"):
        cfg = replace(preset("2d-curve", "desk", "2-4-4-1"), h=0.05, total_iters=60,
                      warmup_restarts=3, warmup_iters=20, chunk_size=97, n_jobs=2,
                      output_dir=str(tmp_path / run))
        table = tmp_path / f"table_{run}.csv"
        cmd_table(cfg, ["2-4-4-1", "2-6-1"], seeds=[0, 5], path=table)
        cpwl = tmp_path / f"cpwl_{run}.csv"
        cmd_cpwl_check([0.2, 0.1], path=cpwl)
        outputs.append((table.read_bytes(), cpwl.read_bytes()))
    ok = outputs[0] == outputs[1]
    verdict("criterion 10 determinism", ok, "table and cpwl-check CSVs byte-identical"
            if ok else "CSV bytes differ between identical runs")
    assert ok
