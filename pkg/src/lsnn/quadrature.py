"""Composite midpoint rule on axis-aligned boxes.

Domain integrals use cell centers of a uniform grid; inflow-boundary
integrals use centers of the boundary faces where the velocity points
into the domain, weighted by ``|beta . n|``.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

Box = tuple[tuple[float, float], ...]


class MeshError(ValueError):
    pass


def _cells_per_side(box: Box, h: float) -> list[int]:
    if h <= 0:
        raise MeshError(f"mesh size must be positive, got {h}")
    counts = []
    for lo, hi in box:
        ratio = (hi - lo) / h
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > 1e-12 * max(1.0, ratio):
            raise MeshError(f"side [{lo}, {hi}] is not an integer multiple of h={h}")
        counts.append(n)
    return counts


def _centers(lo: float, n: int, h: float) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * h


@dataclass(frozen=True)
class DomainMesh:
    points: np.ndarray
    weight: float
    h: float
    box: Box

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.points), self.weight)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class InflowMesh:
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    h: float

    def __len__(self):
        return len(self.points)


def build_domain_mesh(box: Box, h: float) -> DomainMesh:
    """Cell centers of the uniform grid of size ``h`` tiling ``box``.

    >>> m = build_domain_mesh(((0, 1), (0, 1)), 0.5)
    >>> m.points.tolist(), m.weight
    ([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]], 0.25)
    """
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    counts = _cells_per_side(box, h)
    axes = [_centers(lo, n, h) for (lo, _), n in zip(box, counts)]
    # x varies fastest
    grids = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel(order="F") for g in grids], axis=1)
    return DomainMesh(points, float(h) ** len(box), float(h), box)


def boundary_faces(box: Box, h: float):
    """Yield ``(points, normal)`` for the face centers of each box face."""
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    counts = _cells_per_side(box, h)
    d = len(box)
    for axis in range(d):
        others = [i for i in range(d) if i != axis]
        axes = [_centers(box[i][0], counts[i], h) for i in others]
        grid = np.array(list(itertools.product(*axes[::-1])))[:, ::-1] if axes else np.zeros((1, 0))
        for side, value in ((-1.0, box[axis][0]), (1.0, box[axis][1])):
            pts = np.empty((len(grid), d))
            pts[:, others] = grid
            pts[:, axis] = value
            normal = np.zeros(d)
            normal[axis] = side
            yield pts, normal


def build_inflow_mesh(problem, h: float) -> InflowMesh:
    """Face centers on the inflow boundary with weights ``|beta . n| h^(d-1)``.

    A face belongs to the inflow part when ``beta . n < 0`` at its center.
    """
    box = problem.box
    pts_all, w_all, n_all = [], [], []
    for pts, normal in boundary_faces(box, h):
        bn = problem.beta(pts) @ normal
        keep = bn < 0.0
        if not np.any(keep):
            continue
        pts_all.append(pts[keep])
        w_all.append(-bn[keep] * h ** (len(box) - 1))
        n_all.append(np.broadcast_to(normal, (int(keep.sum()), len(box))))
    if not pts_all:
        d = len(box)
        return InflowMesh(np.zeros((0, d)), np.zeros(0), np.zeros((0, d)), float(h))
    return InflowMesh(np.concatenate(pts_all), np.concatenate(w_all),
                      np.concatenate(n_all).copy(), float(h))


def integrate(mesh, integrand: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> float:
    """Midpoint-rule sum ``sum_K w_K f(x_K)``.

    ``integrand`` is either a vectorized callable on ``(n, d)`` points or an
    array of precomputed nodal values.
    """
    values = integrand(mesh.points) if callable(integrand) else integrand
    values = np.broadcast_to(np.asarray(values, dtype=np.float64), (len(mesh.points),))
    bad = ~np.isfinite(values)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise FloatingPointError(
            f"integrand is {values[k]} at node {k}, x = {mesh.points[k].tolist()}"
        )
    return float(np.sum(mesh.weights * values))


def dump_mesh_csv(mesh, path) -> None:
    d = mesh.points.shape[1]
    weights = mesh.weights
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["weight"])
        for p, w in zip(mesh.points, weights):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(w))])
