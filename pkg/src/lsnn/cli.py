"""Command-line entry point: ``lsnn <subcommand> ...``.

Subcommands
-----------
train       train one network from a config and write its artifacts
table       train several shapes and write one report row per shape
cpwl-check  measure the CPWL transition error against its bound
grad-check  compare analytic and finite-difference gradients
dump        grid values, breaking lines and diagonal trace of saved params
defaults    print the default (or preset) configuration

Exit codes: 0 success, 1 a check failed, 2 bad configuration or arguments,
3 numerical failure (non-finite loss or gradient), 4 file I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checks import gradcheck
from .config import ConfigError, RunConfig, apply_overrides, load_config, preset
from .cpwl import (measure_transition_error, straight_line_spec, transition_error_bound)
from .functional import L2FitObjective, LSObjective, TransportConfig
from .metrics import (REPORT_HEADER, ErrorReport, breaking_lines, diagonal_points,
                      make_report, probe_grid, write_breaking_csv,
                      write_grid_csv, write_report_csv, write_trace_csv)
from .network import NetworkParams, NetworkShape, forward, load_params, save_params
from .optim import TrainSchedule, multistart_train, write_history_csv
from .problems import PROBLEMS, get_problem, make_remark_target
from .quadrature import build_domain_mesh, build_inflow_mesh

logger = logging.getLogger("lsnn")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


class CheckFailed(Exception):
    pass


# --- commands (callable from Python) --------------------------------------

def train_once(cfg: RunConfig, checkpoint_dir=None):
    """Train per ``cfg``; returns ``(TrainResult, ErrorReport)`` without writing files."""
    cfg.validate()
    prob = get_problem(cfg.problem)
    dmesh = build_domain_mesh(prob.box, cfg.h)
    bmesh = build_inflow_mesh(prob, cfg.h)
    tcfg = TransportConfig(cfg.rho_value)
    obj = LSObjective(prob, dmesh, bmesh, tcfg,
                      chunk_size=cfg.chunk_size or None, n_jobs=cfg.n_jobs,
                      deterministic=cfg.deterministic)
    result = multistart_train(obj, cfg.network_shape, cfg.schedule(), seed=cfg.seed,
                              checkpoint_dir=checkpoint_dir,
                              checkpoint_every=cfg.checkpoint_every)
    return result, make_report(result.params, prob, dmesh, bmesh, tcfg)


def cmd_train(cfg: RunConfig) -> ErrorReport:
    """Train and write ``config.txt``, ``loss.csv``, ``params.bin``,
    ``report.csv`` and ``checkpoints/`` under ``cfg.output_dir``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    result, report = train_once(cfg, checkpoint_dir=out / "checkpoints")
    write_history_csv(result.history, out / "loss.csv")
    save_params(result.params, out / "params.bin")
    write_report_csv([report], out / "report.csv")
    return report


def cmd_table(cfg: RunConfig, shapes, seeds=None, path=None) -> list[ErrorReport]:
    """One row per shape; with several ``seeds`` the lowest final loss wins."""
    seeds = [cfg.seed] if not seeds else list(seeds)
    rows = []
    for shape in shapes:
        best = None
        for seed in seeds:
            run = replace(cfg, shape=shape, seed=seed,
                          output_dir=str(Path(cfg.output_dir) / f"{shape}_seed{seed}"))
            result, report = train_once(run)
            logger.info("%s seed %d: loss %.6e, rel L2 %.4f", shape, seed,
                        result.final_loss, report.rel_l2)
            if best is None or result.final_loss < best[0]:
                best = (result.final_loss, report)
        rows.append(best[1])
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        write_report_csv(rows, path)
    return rows


CPWL_HEADER = ["eps", "l2", "derivative", "graph", "bound"]


def cmd_cpwl_check(eps_list, path=None, h=None):
    """Transition error of the straight-interface approximant versus its bound.

    All ``eps`` share one mesh fine enough for the smallest layer.  Returns
    ``(rows, passed)``.
    """
    spec = straight_line_spec()
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        rows = []
    else:
        if h is None:
            h = 1.0 / int(np.ceil(4.0 / min(eps_list)))
        dmesh = build_domain_mesh(spec.box, h)
        rows = []
        for eps in eps_list:
            err = measure_transition_error(spec, eps, spec.tangent, dmesh)
            rows.append((eps, err.l2, err.derivative, err.graph,
                         transition_error_bound(spec, eps)))
    if path is not None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CPWL_HEADER)
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])
    return rows, all(r[3] <= r[4] for r in rows)


def remark_fit(shape, eps: float = 0.2, seed: int = 0, h: float = 0.01,
               schedule: TrainSchedule | None = None):
    """L2-fit a network to the example transition target on a midpoint mesh.

    Returns ``(relative L2 error, TrainResult)``.
    """
    shape = NetworkShape.parse(shape) if isinstance(shape, str) else shape
    mesh = build_domain_mesh(((0.0, 1.0), (0.0, 1.0)), h)
    target = make_remark_target(eps)(mesh.points)
    obj = L2FitObjective(mesh.points, target)
    schedule = schedule or TrainSchedule(total_iters=40000, warmup_iters=2000)
    result = multistart_train(obj, shape, schedule, seed=seed)
    err = forward(result.params, mesh.points) - target
    return float(np.linalg.norm(err) / np.linalg.norm(target)), result


FIT_HEADER = ["structure", "eps", "seed", "rel_l2"]


def cmd_remark_fit(shapes, eps: float, seeds, schedule, path=None):
    rows = []
    for shape in shapes:
        for seed in seeds:
            err, _ = remark_fit(shape, eps, seed, schedule=schedule)
            rows.append((shape, eps, seed, err))
    if path is not None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FIT_HEADER)
            for shape, e, seed, err in rows:
                writer.writerow([shape, repr(float(e)), seed, repr(float(err))])
    return rows


def cmd_gradcheck(problem: str, shape: str, seed: int = 0, draws: int = 20,
                  h: float = 0.1, corrupt: bool = False):
    prob = get_problem(problem)
    return gradcheck(prob, NetworkShape.parse(shape), seed=seed, draws=draws, h=h,
                     corrupt=corrupt)


def cmd_dump(params: NetworkParams, problem: str, resolution: int, layers, out_dir):
    """Write ``grid.csv``, ``breaking_layer{l}.csv`` and ``trace.csv``.

    3D problems are sliced at ``z = 0.5``.
    """
    prob = get_problem(problem)
    if params.shape.input_dim != prob.dim:
        raise ConfigError(f"params take {params.shape.input_dim} inputs, "
                          f"problem {problem} is {prob.dim}-dimensional")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixed = {2: 0.5} if prob.dim == 3 else None
    pts, _ = probe_grid(prob.box, resolution, fixed)
    write_grid_csv(pts, prob.exact_u(pts), forward(params, pts), out / "grid.csv")
    for layer in layers:
        bl = breaking_lines(params, layer, prob.box, resolution, fixed=fixed)
        write_breaking_csv(bl, out / f"breaking_layer{layer}.csv")
    t, tpts = diagonal_points(prob.box, 1001, fixed)
    write_trace_csv(t, tpts, prob.exact_u(tpts), forward(params, tpts), out / "trace.csv")


# --- argument parsing -----------------------------------------------------

def _load_cfg(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        if not args.problem:
            raise ConfigError("--preset needs --problem")
        cfg = preset(args.problem, args.preset, args.shape)
    else:
        cfg = RunConfig()
    cli = []
    for key in ("problem", "shape", "seed", "output_dir"):
        value = getattr(args, key, None)
        if value is not None:
            cli.append(f"{key} = {value}")
    cfg = apply_overrides(cfg, cli + list(args.set or []))
    return cfg.validate()


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsnn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--preset", choices=["desk", "full"], help="start from a preset")
        p.add_argument("--problem", choices=list(PROBLEMS))
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")

    p = sub.add_parser("train", help="train one network")
    config_args(p)
    p.add_argument("--shape")

    p = sub.add_parser("table", help="report rows for several shapes")
    config_args(p)
    p.add_argument("--shapes", default="", help="comma-separated shapes; empty gives a header-only CSV")
    p.add_argument("--seeds", default="", help="comma-separated base seeds; best final loss wins")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(shape=None)

    p = sub.add_parser("cpwl-check", help="transition error versus bound")
    p.add_argument("--eps", default="0.1,0.04,0.01")
    p.add_argument("--out", required=True)
    p.add_argument("--fit", action="store_true", help="also run the L2 fitting comparison")
    p.add_argument("--fit-shapes", default="2-8-1,2-4-4-1")
    p.add_argument("--fit-eps", type=float, default=0.2)
    p.add_argument("--fit-seeds", default="0")
    p.add_argument("--fit-iters", type=int, default=40000)
    p.add_argument("--fit-warmup", type=int, default=2000)
    p.add_argument("--fit-out", help="CSV for the fitting comparison")

    p = sub.add_parser("grad-check", help="analytic vs finite-difference gradient")
    p.add_argument("--problem", required=True, choices=list(PROBLEMS))
    p.add_argument("--shape", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--h", type=float, default=0.1, help="mesh size for the check")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("dump", help="grid, breaking lines and trace of saved params")
    p.add_argument("params")
    p.add_argument("--problem", required=True, choices=list(PROBLEMS))
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--layers", default="1,2")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("defaults", help="print the default configuration")
    p.add_argument("--preset", choices=["desk", "full"])
    p.add_argument("--problem", choices=list(PROBLEMS))
    return parser


def _run(args) -> int:
    if args.command == "train":
        report = cmd_train(_load_cfg(args))
        print(",".join(REPORT_HEADER))
        print(",".join(report.as_row()))
    elif args.command == "table":
        cfg = _load_cfg(args)
        shapes = [s.strip() for s in args.shapes.split(",") if s.strip()]
        for s in shapes:
            NetworkShape.parse(s)
        cmd_table(cfg, shapes, _ints(args.seeds), args.out)
    elif args.command == "cpwl-check":
        rows, ok = cmd_cpwl_check(_floats(args.eps), args.out)
        for eps, l2, der, graph, bound in rows:
            print(f"eps={eps:g} graph={graph:.6g} bound={bound:.6g} "
                  f"{'ok' if graph <= bound else 'VIOLATED'}")
        if args.fit:
            sched = TrainSchedule(total_iters=args.fit_iters, warmup_iters=args.fit_warmup)
            fit = cmd_remark_fit(args.fit_shapes.split(","), args.fit_eps,
                                 _ints(args.fit_seeds), sched, args.fit_out)
            for shape, eps, seed, err in fit:
                print(f"fit {shape} eps={eps:g} seed={seed} rel_l2={err:.6g}")
        if not ok:
            raise CheckFailed("measured transition error exceeds the bound")
    elif args.command == "grad-check":
        res = cmd_gradcheck(args.problem, args.shape, args.seed, args.draws, args.h,
                            args.corrupt)
        print(f"{'PASS' if res.passed else 'FAIL'} max_deviation={res.max_deviation:.3e} "
              f"draws={res.draws} skipped={res.skipped} tol={res.tol:g}")
        if not res.passed:
            raise CheckFailed("gradient check failed")
    elif args.command == "dump":
        cmd_dump(load_params(args.params), args.problem, args.resolution,
                 _ints(args.layers), args.out_dir)
    elif args.command == "defaults":
        if args.preset:
            if not args.problem:
                raise ConfigError("--preset needs --problem")
            cfg = preset(args.problem, args.preset)
        else:
            cfg = RunConfig()
        sys.stdout.write(cfg.to_text())
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
