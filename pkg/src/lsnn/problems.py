"""Benchmark advection-reaction problems with discontinuous solutions.

Every problem solves ``u_beta + gamma u = f`` on a box with ``u = g`` on the
inflow boundary.  All evaluators are vectorized: they take points of shape
``(n, d)`` and return ``(n,)`` (scalars) or ``(n, d)`` (velocity).

Region tests follow the strict / non-strict inequalities of the original
problem statements exactly, so points on dividing lines land on a fixed side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]

SQRT2 = np.sqrt(2.0)
_ON_FACE = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """One advection-reaction benchmark.

    ``region`` returns 1 on ``Omega_1`` and 2 on ``Omega_2``; the solution
    jumps across their common boundary.  ``alpha1`` / ``alpha2`` are the
    plateau values of the step part of the solution on the two regions and
    ``discontinuity`` is the inflow point where ``g`` jumps (in 3D: one
    point of the jump curve).
    """

    name: str
    dim: int
    box: tuple[tuple[float, float], ...]
    beta: Field
    gamma: Field
    f: Field
    g: Field
    exact_u: Field
    exact_u_beta: Field
    region: Field
    alpha1: float
    alpha2: float
    discontinuity: tuple[float, ...]
    shapes: tuple[str, str] = ("", "")
    published_iters: int = 200000
    description: str = ""
    extra: dict = field(default_factory=dict)

    def inflow_sample(self, n: int, seed: int = 0) -> np.ndarray:
        """Random points on the inflow faces (``beta . n < 0`` per point)."""
        from .quadrature import boundary_faces

        rng = np.random.default_rng(seed)
        d = self.dim
        faces = []
        for pts, normal in boundary_faces(self.box, _coarse_h(self.box)):
            if np.all(self.beta(pts) @ normal < 0.0):
                faces.append(normal)
        out = np.empty((n, d))
        for k in range(n):
            normal = faces[rng.integers(len(faces))]
            axis = int(np.argmax(np.abs(normal)))
            p = np.array([rng.uniform(lo, hi) for lo, hi in self.box])
            p[axis] = self.box[axis][0] if normal[axis] < 0 else self.box[axis][1]
            out[k] = p
        return out


def _coarse_h(box) -> float:
    return min(hi - lo for lo, hi in box) / 4.0


def _cols(X):
    X = np.asarray(X, dtype=np.float64)
    return [X[:, i] for i in range(X.shape[1])]


def _piecewise_beta(X, masks_and_vectors):
    out = np.empty_like(np.asarray(X, dtype=np.float64))
    for mask, vec in masks_and_vectors:
        out[mask] = vec
    return out


def _const(value):
    def fn(X):
        return np.full(len(X), float(value))
    return fn


def _zero_u_beta(X):
    return np.zeros(len(X))


# --- 2D: three line segments ---------------------------------------------

def make_2d_three_segment() -> ProblemSpec:
    """Piecewise-constant velocity with a three-segment polyline interface."""
    a = 43.0 / 64.0
    b1 = np.array([-1.0, SQRT2 - 1.0])
    b2 = np.array([1.0 - SQRT2, 1.0])
    g_split = 1.0 - SQRT2 + SQRT2 / 2.0 * a

    def upsilon(X):
        x, y = _cols(X)
        u1 = y >= x
        u2 = (x - a / 2 <= y) & (y < x)
        u3 = y < x - a / 2
        return u1, u2, u3

    def region(X):
        x, y = _cols(X)
        u1, u2, u3 = upsilon(X)
        h1 = u1 & (y < (1 - SQRT2) * x + a)
        h2 = u2 & (y < (x - a / SQRT2) / (1 - SQRT2) + a / SQRT2)
        h3 = u3 & (y < (1 - SQRT2) * x + SQRT2 / 2 * a)
        return np.where(h1 | h2 | h3, 1, 2)

    def beta(X):
        u1, u2, u3 = upsilon(X)
        return _piecewise_beta(X, [(u1, b1), (u2, b2), (u3, b1)])

    def f(X):
        return np.where(region(X) == 1, -1.0, 1.0)

    def g(X):
        x, y = _cols(X)
        top = (np.abs(x - 1.0) <= _ON_FACE) & (y >= g_split) & (y < 1.0)
        return np.where(top, 1.0, -1.0)

    return ProblemSpec(
        name="2d-three-segment", dim=2, box=((0.0, 1.0), (0.0, 1.0)),
        beta=beta, gamma=_const(1.0), f=f, g=g, exact_u=f,
        exact_u_beta=_zero_u_beta, region=region, alpha1=-1.0, alpha2=1.0,
        discontinuity=(1.0, g_split), shapes=("2-5-5-1", "2-300-1"),
        published_iters=200000,
        description="piecewise constant beta, 3 line segment interface",
        extra={"a": a, "g_split": g_split},
    )


# --- 2D: four line segments on (0, 2)^2 ----------------------------------

def make_2d_four_segment() -> ProblemSpec:
    """Piecewise-constant velocity with a four-segment interface on (0, 2)^2."""
    b1 = np.array([-1.0, SQRT2 - 1.0])
    b2 = np.array([1.0 - SQRT2, 1.0])

    def upsilon(X):
        x, y = _cols(X)
        return (y >= x + 1), (x <= y) & (y < x + 1), (x - 1 <= y) & (y < x), (y < x - 1)

    def region(X):
        x, y = _cols(X)
        u1, u2, u3, u4 = upsilon(X)
        h1 = u1 & (y < (1 - SQRT2) * x + 2)
        h2 = u2 & (y < (x - 1) / (1 - SQRT2) + 1)
        h3 = u3 & (y < (1 - SQRT2) * (x - 1) + 1)
        h4 = u4 & (y < x / (1 - SQRT2) + 2 / (SQRT2 - 1))
        return np.where(h1 | h2 | h3 | h4, 1, 2)

    def beta(X):
        u1, u2, u3, u4 = upsilon(X)
        return _piecewise_beta(X, [(u1, b1), (u2, b2), (u3, b1), (u4, b2)])

    def f(X):
        return np.where(region(X) == 1, -1.0, 1.0)

    def g(X):
        x, _ = _cols(X)
        return np.where(np.abs(x - 2.0) <= _ON_FACE, 1.0, -1.0)

    return ProblemSpec(
        name="2d-four-segment", dim=2, box=((0.0, 2.0), (0.0, 2.0)),
        beta=beta, gamma=_const(1.0), f=f, g=g, exact_u=f,
        exact_u_beta=_zero_u_beta, region=region, alpha1=-1.0, alpha2=1.0,
        discontinuity=(2.0, 0.0), shapes=("2-6-6-1", "2-300-1"),
        published_iters=200000,
        description="piecewise constant beta, 4 line segment interface",
    )


# --- 2D: parabola --------------------------------------------------------

def make_2d_curve() -> ProblemSpec:
    """Velocity ``(1, 2x)``; the interface is the parabola ``y = x^2 + 1/8``."""

    def beta(X):
        x, _ = _cols(X)
        return np.stack([np.ones_like(x), 2.0 * x], axis=1)

    def region(X):
        x, y = _cols(X)
        return np.where(y < x ** 2 + 1.0 / 8.0, 1, 2)

    def f(X):
        return np.where(region(X) == 1, 0.0, 1.0)

    def g(X):
        x, y = _cols(X)
        left = (np.abs(x) <= _ON_FACE) & (y >= 1.0 / 8.0) & (y < 1.0)
        return np.where(left, 1.0, 0.0)

    return ProblemSpec(
        name="2d-curve", dim=2, box=((0.0, 1.0), (0.0, 1.0)),
        beta=beta, gamma=_const(1.0), f=f, g=g, exact_u=f,
        exact_u_beta=_zero_u_beta, region=region, alpha1=0.0, alpha2=1.0,
        discontinuity=(0.0, 1.0 / 8.0), shapes=("2-60-60-1", "2-3000-1"),
        published_iters=300000,
        description="variable beta = (1, 2x), parabolic interface",
    )


# --- 2D: circle with nonzero continuous part -----------------------------

def make_2d_curve_uhat() -> ProblemSpec:
    """Rotational velocity ``(-y, x)``; solution ``+-1 + x^2 + y^2``."""
    r = 2.0 / 3.0

    def beta(X):
        x, y = _cols(X)
        return np.stack([-y, x], axis=1)

    def region(X):
        x, y = _cols(X)
        inside = np.zeros(len(x), dtype=bool)
        ok = x ** 2 <= r ** 2
        inside[ok] = y[ok] < np.sqrt(r ** 2 - x[ok] ** 2)
        return np.where(inside, 1, 2)

    def f(X):
        x, y = _cols(X)
        return np.where(region(X) == 1, -1.0, 1.0) + x ** 2 + y ** 2

    def g(X):
        x, y = _cols(X)
        low = (np.abs(y) <= _ON_FACE) & (x > 0.0) & (x < r)
        return np.where(low, -1.0, 1.0) + x ** 2 + y ** 2

    def u_beta(X):
        x, y = _cols(X)
        # beta . grad(x^2 + y^2) = -y*2x + x*2y
        return -y * 2.0 * x + x * 2.0 * y

    return ProblemSpec(
        name="2d-curve-uhat", dim=2, box=((0.0, 1.0), (0.0, 1.0)),
        beta=beta, gamma=_const(1.0), f=f, g=g, exact_u=f,
        exact_u_beta=u_beta, region=region, alpha1=-1.0, alpha2=1.0,
        discontinuity=(r, 0.0), shapes=("2-65-65-1", "2-4000-1"),
        published_iters=200000,
        description="variable beta = (-y, x), circular interface, u_hat = x^2 + y^2",
    )


# --- 3D: piecewise plane -------------------------------------------------

def make_3d_plane() -> ProblemSpec:
    """Pure transport (``gamma = f = 0``) of a unit step in the unit cube."""
    b1 = np.array([1.0 - SQRT2, 1.0, 0.0])
    b2 = np.array([-1.0, SQRT2 - 1.0, 0.0])

    def beta(X):
        x, y, _ = _cols(X)
        return _piecewise_beta(X, [(y < x, b1), (y >= x, b2)])

    def region(X):
        x, y, _ = _cols(X)
        inside = (y < (1 - SQRT2) * x + 0.7) & (y < (x - 0.7) / (1 - SQRT2))
        return np.where(inside, 1, 2)

    def u(X):
        return np.where(region(X) == 1, 0.0, 1.0)

    def g(X):
        x, y, _ = _cols(X)
        low = (np.abs(y) <= _ON_FACE) & (x > 0.0) & (x < 0.7)
        return np.where(low, 0.0, 1.0)

    return ProblemSpec(
        name="3d-plane", dim=3, box=((0.0, 1.0),) * 3,
        beta=beta, gamma=_const(0.0), f=_const(0.0), g=g, exact_u=u,
        exact_u_beta=_zero_u_beta, region=region, alpha1=0.0, alpha2=1.0,
        discontinuity=(0.7, 0.0, 0.5), shapes=("3-5-5-1", "3-300-1"),
        published_iters=100000,
        description="piecewise constant beta, piecewise plane interface",
    )


# --- 3D: cylinder --------------------------------------------------------

def make_3d_cylinder() -> ProblemSpec:
    """Rotational velocity ``(-y, x, 0)``; interface is a cylinder of radius 0.7."""
    r = 0.7

    def beta(X):
        x, y, _ = _cols(X)
        return np.stack([-y, x, np.zeros_like(x)], axis=1)

    def region(X):
        x, y, _ = _cols(X)
        inside = np.zeros(len(x), dtype=bool)
        ok = x ** 2 <= r ** 2
        inside[ok] = y[ok] < np.sqrt(r ** 2 - x[ok] ** 2)
        return np.where(inside, 1, 2)

    def f(X):
        return np.where(region(X) == 1, 0.0, 1.0)

    def g(X):
        x, y, _ = _cols(X)
        low = (np.abs(y) <= _ON_FACE) & (x > 0.0) & (x < r)
        return np.where(low, 0.0, 1.0)

    return ProblemSpec(
        name="3d-cylinder", dim=3, box=((0.0, 1.0),) * 3,
        beta=beta, gamma=_const(1.0), f=f, g=g, exact_u=f,
        exact_u_beta=_zero_u_beta, region=region, alpha1=0.0, alpha2=1.0,
        discontinuity=(r, 0.0, 0.5), shapes=("3-50-50-1", "3-1500-1"),
        published_iters=150000,
        description="variable beta = (-y, x, 0), cylindrical interface",
    )


def make_remark_target(eps: float) -> Field:
    """Two-piece CPWL target with a ramp of width ``eps`` between -1 and 1.

    The ramp is ``-1 + 2/eps * (l(x, y) - 0.8 + eps/2)`` with
    ``l = y + x/2`` above the diagonal and ``l = y/2 + x`` below it,
    clamped to ``[-1, 1]``.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    def target(X):
        x, y = _cols(X)
        ell = np.where(y >= x, y + 0.5 * x, 0.5 * y + x)
        return np.clip(-1.0 + 2.0 / eps * (ell - 0.8 + eps / 2.0), -1.0, 1.0)

    return target


PROBLEMS: dict[str, Callable[[], ProblemSpec]] = {
    "2d-three-segment": make_2d_three_segment,
    "2d-four-segment": make_2d_four_segment,
    "2d-curve": make_2d_curve,
    "2d-curve-uhat": make_2d_curve_uhat,
    "3d-plane": make_3d_plane,
    "3d-cylinder": make_3d_cylinder,
}

# Reference rows: (shape, rel L2, rel graph norm, LS ratio, parameters).
PUBLISHED_TABLES: dict[str, list[tuple[str, float, float, float, int]]] = {
    "2d-three-segment": [("2-300-1", 0.279867, 0.404376, 0.300774, 1201),
                         ("2-5-5-1", 0.074153, 0.079193, 0.044987, 51)],
    "2d-four-segment": [("2-300-1", 0.288282, 0.358756, 0.306695, 1201),
                        ("2-6-6-1", 0.085817, 0.091800, 0.069808, 67)],
    "2d-curve": [("2-3000-1", 0.134514, 0.181499, 0.078832, 12001),
                 ("2-60-60-1", 0.066055, 0.106095, 0.030990, 3901)],
    "2d-curve-uhat": [("2-4000-1", 0.088349, 0.108430, 0.058213, 16001),
                      ("2-65-65-1", 0.048278, 0.073095, 0.015012, 4551)],
    "3d-plane": [("3-300-1", 0.185006, 0.214390, 0.189820, 1501),
                 ("3-5-5-1", 0.055365, 0.055370, 0.045902, 56)],
    "3d-cylinder": [("3-1500-1", 0.125142, 0.158393, 0.117929, 7501),
                    ("3-50-50-1", 0.050217, 0.073780, 0.018976, 2801)],
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        known = ", ".join(PROBLEMS)
        raise KeyError(f"unknown problem {name!r}; known problems: {known}") from None
