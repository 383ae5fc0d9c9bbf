"""Error norms, breaking lines, and CSV reports for trained networks."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .functional import ls_ratio
from .network import NetworkParams, forward, param_count, preactivations


@dataclass(frozen=True)
class ErrorReport:
    """One table row: relative L2, relative graph norm, LS ratio, parameters."""

    structure: str
    rel_l2: float
    rel_graph: float
    ls_ratio: float
    parameters: int

    def __post_init__(self):
        for name in ("rel_l2", "rel_graph", "ls_ratio"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")

    def as_row(self) -> list[str]:
        return [self.structure, repr(self.rel_l2), repr(self.rel_graph),
                repr(self.ls_ratio), str(self.parameters)]


REPORT_HEADER = ["structure", "rel_l2", "rel_graph", "ls_ratio", "parameters"]


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for rep in reports:
            writer.writerow(rep.as_row())


def read_report_csv(path) -> list[ErrorReport]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [ErrorReport(r["structure"], float(r["rel_l2"]), float(r["rel_graph"]),
                        float(r["ls_ratio"]), int(r["parameters"])) for r in rows]


def relative_l2_error(params: NetworkParams, problem, dmesh) -> float:
    """``||u - v|| / ||u||`` by the midpoint rule on ``dmesh``."""
    X = dmesh.points
    u = problem.exact_u(X)
    den = np.sum(dmesh.weights * u * u)
    if den == 0.0:
        raise ZeroDivisionError("exact solution has zero L2 norm")
    err = u - forward(params, X)
    return float(np.sqrt(np.sum(dmesh.weights * err * err) / den))


def _stencil(problem, X, rho):
    B = problem.beta(X)
    speed = np.linalg.norm(B, axis=1)
    unit = np.divide(B, speed[:, None], out=np.zeros_like(B), where=speed[:, None] > 0)
    return speed, X - rho * unit


def relative_graph_error(params: NetworkParams, problem, dmesh, cfg) -> float:
    """Relative ``|||u - v|||_beta`` with the difference-quotient ``v_beta``.

    The L2 parts use every node.  The derivative parts skip nodes whose
    backward stencil ``x - rho beta_bar`` lies in the other region, where
    ``u_beta`` does not exist; there the analytic ``u_beta`` is compared
    with the difference quotient of ``v``.
    """
    X = dmesh.points
    w = dmesh.weights
    speed, Xs = _stencil(problem, X, cfg.rho)
    keep = problem.region(X) == problem.region(Xs)
    v = forward(params, X)
    v_beta = speed * (v - forward(params, Xs)) / cfg.rho
    u = problem.exact_u(X)
    u_beta = problem.exact_u_beta(X)
    num = np.sum(w * (u - v) ** 2) + np.sum((w * (u_beta - v_beta) ** 2)[keep])
    den = np.sum(w * u * u) + np.sum((w * u_beta ** 2)[keep])
    if den == 0.0:
        raise ZeroDivisionError("exact solution has zero graph norm")
    return float(np.sqrt(num / den))


def make_report(params: NetworkParams, problem, dmesh, bmesh, cfg) -> ErrorReport:
    return ErrorReport(
        params.shape.label(),
        relative_l2_error(params, problem, dmesh),
        relative_graph_error(params, problem, dmesh, cfg),
        ls_ratio(params, problem, dmesh, bmesh, cfg),
        param_count(params.shape),
    )


# --- probe lattices, breaking lines, traces -------------------------------

def probe_grid(box, resolution: int, fixed: dict[int, float] | None = None):
    """Lattice of ``resolution`` points per free axis (box edges included).

    ``fixed`` pins axes to a value, e.g. ``{2: 0.5}`` for the slice
    ``z = 0.5``.  Returns ``(points, lattice_shape)`` with the first free
    axis varying fastest.
    """
    fixed = fixed or {}
    free = [i for i in range(len(box)) if i not in fixed]
    axes = [np.linspace(box[i][0], box[i][1], resolution) for i in free]
    mesh = np.meshgrid(*axes, indexing="ij")
    n = mesh[0].size
    points = np.empty((n, len(box)))
    for j, i in enumerate(free):
        points[:, i] = mesh[j].ravel(order="F")
    for i, value in fixed.items():
        points[:, i] = value
    return points, tuple(len(a) for a in axes)


@dataclass
class BreakingLineSet:
    layer: int
    points: np.ndarray
    components: np.ndarray


def breaking_lines(params: NetworkParams, layer: int, box, resolution: int = 201,
                   tol: float | None = None, fixed=None) -> BreakingLineSet:
    """Lattice points next to the zero set of some layer-``layer`` pre-activation.

    A lattice edge is marked when a component changes sign along it (exact
    zeros count as their own sign, two zeros do not); of its two endpoints
    the one with smaller ``|z|`` is flagged.  Points with ``|z| < tol`` are
    flagged too; by default ``tol`` is ``1e-3`` times the layer RMS.
    """
    if not 1 <= layer <= params.shape.depth:
        raise ValueError(f"layer must be in 1..{params.shape.depth}, got {layer}")
    pts, lat = probe_grid(box, resolution, fixed)
    Z = preactivations(params, pts)[layer - 1]
    k = Z.shape[1]
    # lattice arrays in (axis0 fastest) order -> reshape with Fortran order
    Zl = Z.reshape(lat + (k,), order="F")
    if tol is None:
        tol = 1e-3 * float(np.sqrt(np.mean(Z * Z)))
    flag = np.abs(Zl) < tol
    sign = np.sign(Zl)
    absz = np.abs(Zl)
    for axis in range(len(lat)):
        a = [slice(None)] * (len(lat) + 1)
        b = [slice(None)] * (len(lat) + 1)
        a[axis] = slice(0, -1)
        b[axis] = slice(1, None)
        a, b = tuple(a), tuple(b)
        change = sign[a] != sign[b]
        pick_a = change & (absz[a] <= absz[b])
        pick_b = change & ~pick_a
        flag[a] |= pick_a
        flag[b] |= pick_b
    any_flag = flag.any(axis=-1).reshape(-1, order="F")
    comp = np.argmax(flag, axis=-1).reshape(-1, order="F")
    return BreakingLineSet(layer, pts[any_flag], comp[any_flag])


def write_breaking_csv(bl: BreakingLineSet, path) -> None:
    d = bl.points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["component"])
        for p, c in zip(bl.points, bl.components):
            writer.writerow([repr(float(v)) for v in p] + [int(c)])


def diagonal_points(box, n: int = 1001, fixed=None):
    """Points on the diagonal of the first two axes; other axes pinned to the middle."""
    t = np.linspace(0.0, 1.0, n)
    pts = np.empty((n, len(box)))
    for i, (lo, hi) in enumerate(box):
        pts[:, i] = lo + t * (hi - lo) if i < 2 else 0.5 * (lo + hi)
    for i, value in (fixed or {}).items():
        pts[:, i] = value
    return t, pts


def diagonal_trace(params: NetworkParams, problem, n: int = 1001):
    """``(t, points, u_exact, u_net)`` along the diagonal ``y = x``."""
    t, pts = diagonal_points(problem.box, n)
    return t, pts, problem.exact_u(pts), forward(params, pts)


def sign_changes(values, tol: float = 0.0) -> int:
    """Number of sign changes in a sequence, ignoring entries with ``|v| <= tol``."""
    v = np.asarray(values, dtype=np.float64)
    s = np.sign(v[np.abs(v) > tol])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def write_trace_csv(t, pts, u_exact, u_net, path) -> None:
    d = pts.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i}" for i in range(d)] + ["u_exact", "u_net"])
        for row in zip(t, pts, u_exact, u_net):
            writer.writerow([repr(float(row[0]))] + [repr(float(c)) for c in row[1]]
                            + [repr(float(row[2])), repr(float(row[3]))])


def write_grid_csv(pts, u_exact, u_net, path) -> None:
    d = pts.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["u_exact", "u_net"])
        for p, ue, un in zip(pts, u_exact, u_net):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(ue)), repr(float(un))])
