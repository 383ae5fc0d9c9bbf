"""CPWL approximation of step functions and the characteristic jump oracle.

A step function ``chi`` equal to ``alpha1`` on ``Omega_1`` and ``alpha2`` on
``Omega_2`` is approximated, on each subregion ``Upsilon_i`` of a partition,
by a ramp of width ``eps`` normal to the facet ``xi_i . x = b_i``:

    p_i(x) = alpha1 + (alpha2 - alpha1)/eps * (relu(t) - relu(t - eps)),
    t = xi_i . x - b_i.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .network import NetworkParams

relu = lambda t: np.maximum(t, 0.0)  # noqa: E731


@dataclass(frozen=True)
class Facet:
    """Hyperplane ``normal . x = offset`` with a unit normal pointing into Omega_2."""

    normal: np.ndarray
    offset: float
    contains: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError(f"facet normal must be a unit vector, got {n}")
        object.__setattr__(self, "normal", n)

    def signed(self, X):
        return X @ self.normal - self.offset


@dataclass(frozen=True)
class StepFunctionSpec:
    """Piecewise-constant ``chi`` with a facet list describing its interface.

    ``membership`` returns 1 on ``Omega_1`` and 2 on ``Omega_2``.
    ``interface_measure`` is the (d-1)-dimensional measure of the interface.
    """

    membership: Callable[[np.ndarray], np.ndarray]
    alpha1: float
    alpha2: float
    facets: tuple[Facet, ...]
    interface_measure: float
    box: tuple[tuple[float, float], ...]
    tangent: Callable[[np.ndarray], np.ndarray] | None = None

    def chi(self, X):
        return np.where(self.membership(X) == 1, self.alpha1, self.alpha2)

    def facet_index(self, X) -> np.ndarray:
        """Index of the subregion containing each point (-1 if none)."""
        X = np.asarray(X, dtype=np.float64)
        idx = np.full(len(X), -1)
        for i, facet in enumerate(self.facets):
            mask = (idx < 0) & facet.contains(X)
            idx[mask] = i
        return idx


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def straight_line_spec(alpha1: float = -1.0, alpha2: float = 1.0) -> StepFunctionSpec:
    """Interface ``y = x`` in the unit square; Omega_1 is ``y <= x``.

    The attached ``tangent`` field ``(1, 1)`` runs along the interface, the
    configuration in which the interface is a streamline.
    """
    facet = Facet(_unit([-1.0, 1.0]), 0.0, lambda X: np.ones(len(X), dtype=bool))

    def membership(X):
        return np.where(facet.signed(np.asarray(X, dtype=np.float64)) <= 0.0, 1, 2)

    def tangent(X):
        return np.ones((len(X), 2))

    return StepFunctionSpec(membership, alpha1, alpha2, (facet,), float(np.sqrt(2.0)),
                            ((0.0, 1.0), (0.0, 1.0)), tangent)


def three_segment_spec() -> StepFunctionSpec:
    """Facet list for the three-segment interface of ``2d-three-segment``.

    Subregions are the three strips ``y >= x``, ``x - a/2 <= y < x`` and
    ``y < x - a/2``; each carries the interface segment crossing it.
    """
    from .problems import make_2d_three_segment

    prob = make_2d_three_segment()
    a = prob.extra["a"]
    s2 = np.sqrt(2.0)
    c = a / s2
    k = 1.0 / (1.0 - s2)
    # y < (1-s2) x + a  <=>  (s2-1) x + y - a < 0
    n1 = np.array([s2 - 1.0, 1.0])
    # y < k (x - c) + c  <=>  -k x + y - c (1 - k) < 0
    n2 = np.array([-k, 1.0])
    n3 = np.array([s2 - 1.0, 1.0])
    facets = (
        Facet(n1 / np.linalg.norm(n1), a / np.linalg.norm(n1),
              lambda X: X[:, 1] >= X[:, 0]),
        Facet(n2 / np.linalg.norm(n2), c * (1.0 - k) / np.linalg.norm(n2),
              lambda X: (X[:, 0] - a / 2 <= X[:, 1]) & (X[:, 1] < X[:, 0])),
        Facet(n3 / np.linalg.norm(n3), c / np.linalg.norm(n3),
              lambda X: X[:, 1] < X[:, 0] - a / 2),
    )
    # vertices: (0, a) -> (c, c) -> ((s2+1) c/2, c/2) -> (1, 1 - s2 + c)
    verts = np.array([[0.0, a], [c, c], [(s2 + 1.0) * c / 2.0, c / 2.0],
                      [1.0, 1.0 - s2 + c]])
    length = float(np.sum(np.linalg.norm(np.diff(verts, axis=0), axis=1)))
    return StepFunctionSpec(prob.region, prob.alpha1, prob.alpha2, facets, length,
                            prob.box, prob.beta)


def cpwl_step_approximant(spec: StepFunctionSpec, eps: float):
    """Return the vectorized CPWL approximant ``p`` of ``spec.chi``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    scale = (spec.alpha2 - spec.alpha1) / eps

    def p(X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        _check_inside(spec.box, X)
        idx = spec.facet_index(X)
        if np.any(idx < 0):
            raise ValueError("point not covered by any subregion")
        t = np.empty(len(X))
        for i, facet in enumerate(spec.facets):
            mask = idx == i
            t[mask] = facet.signed(X[mask])
        return spec.alpha1 + scale * (relu(t) - relu(t - eps))

    return p


def _check_inside(box, X, tol=1e-12):
    for i, (lo, hi) in enumerate(box):
        if np.any(X[:, i] < lo - tol) or np.any(X[:, i] > hi + tol):
            raise ValueError("point outside the domain")


def transition_error_bound(spec: StepFunctionSpec, eps: float) -> float:
    """``sqrt(2 |I|) |alpha1 - alpha2| sqrt(eps)``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return float(np.sqrt(2.0 * spec.interface_measure)
                 * abs(spec.alpha1 - spec.alpha2) * np.sqrt(eps))


@dataclass(frozen=True)
class TransitionError:
    l2: float
    derivative: float

    @property
    def graph(self) -> float:
        return float(np.hypot(self.l2, self.derivative))


def measure_transition_error(spec: StepFunctionSpec, eps: float, beta_field, dmesh) -> TransitionError:
    """Midpoint-rule ``|||chi - p|||_beta`` split into L2 and derivative parts.

    Inside the ramp ``p_beta = (alpha2 - alpha1)/eps * xi_i . beta``; ``chi``
    has zero directional derivative away from the interface.
    """
    if dmesh.h > eps / 4 + 1e-15:
        raise ValueError(f"mesh size {dmesh.h} does not resolve a layer of width {eps}")
    X = dmesh.points
    p = cpwl_step_approximant(spec, eps)
    diff = spec.chi(X) - p(X)
    idx = spec.facet_index(X)
    B = beta_field(X)
    dp = np.zeros(len(X))
    for i, facet in enumerate(spec.facets):
        mask = idx == i
        t = facet.signed(X[mask])
        inside = (t > 0.0) & (t < eps)
        dp[np.flatnonzero(mask)[inside]] = ((spec.alpha2 - spec.alpha1) / eps
                                            * (B[mask][inside] @ facet.normal))
    w = dmesh.weight
    return TransitionError(float(np.sqrt(w * np.sum(diff * diff))),
                           float(np.sqrt(w * np.sum(dp * dp))))


def build_transition_network(ell1, ell2, threshold: float, eps: float,
                             alpha1: float = -1.0, alpha2: float = 1.0,
                             bound: float = 10.0, box=((0.0, 1.0), (0.0, 1.0)),
                             pad_to: Sequence[int] | None = None) -> NetworkParams:
    """Depth-3 ReLU network equal to the clamped ramp of ``max(ell1, ell2)``.

    ``ell1`` and ``ell2`` are affine forms ``(coefficients, constant)``.  The
    network computes ``m = max(ell1, ell2) - threshold`` via
    ``relu(ell1 - ell2) + relu(ell2 + bound) - bound`` and returns
    ``alpha1 + (alpha2 - alpha1)/eps * (relu(m) - relu(m - eps))``.
    ``bound`` must keep ``ell2 + bound`` positive on ``box``.  ``pad_to``
    widens the hidden layers with inactive neurons (e.g. ``(4, 4)``).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    c1, k1 = np.asarray(ell1[0], dtype=np.float64), float(ell1[1])
    c2, k2 = np.asarray(ell2[0], dtype=np.float64), float(ell2[1])
    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(len(box), -1).T
    if np.min(corners @ c2 + k2 + bound) <= 0.0:
        raise ValueError("bound too small: ell2 + bound must stay positive on the box")

    # hidden layer 1: relu(ell1 - ell2), relu(ell2 + bound); bias is subtracted
    W1 = np.stack([c1 - c2, c2])
    b1 = np.array([-(k1 - k2), -(k2 + bound)])
    # hidden layer 2: relu(m), relu(m - eps) with m = h1 + h2 - bound - threshold
    W2 = np.ones((2, 2))
    b2 = np.array([bound + threshold, bound + threshold + eps])
    slope = (alpha2 - alpha1) / eps
    W3 = np.array([[slope, -slope]])
    b3 = np.array([-alpha1])

    if pad_to is not None:
        n1, n2 = pad_to
        if n1 < 2 or n2 < 2:
            raise ValueError("padding cannot shrink the network")
        # padded neurons: zero weights, bias 1 -> pre-activation -1, never active
        W1 = np.vstack([W1, np.zeros((n1 - 2, W1.shape[1]))])
        b1 = np.concatenate([b1, np.ones(n1 - 2)])
        W2 = np.vstack([np.hstack([W2, np.zeros((2, n1 - 2))]), np.zeros((n2 - 2, n1))])
        b2 = np.concatenate([b2, np.ones(n2 - 2)])
        W3 = np.hstack([W3, np.zeros((1, n2 - 2))])
    return NetworkParams.from_layers([W1, W2, W3], [b1, b2, b3])


def remark_network(eps: float, pad_to=None) -> NetworkParams:
    """The transition network for the two-piece example target."""
    return build_transition_network(([0.5, 1.0], 0.0), ([1.0, 0.5], 0.0),
                                    0.8 - eps / 2.0, eps, -1.0, 1.0, pad_to=pad_to)


# --- jump along characteristics ----------------------------------------

@dataclass
class JumpTrace:
    s: np.ndarray
    points: np.ndarray
    jump: np.ndarray
    truncated: bool


def _side_normal(b):
    """Unit normal to ``b`` on its left (2D) or ``e_z x b`` (3D)."""
    if b.shape[0] == 2:
        n = np.array([-b[1], b[0]])
    else:
        n = np.cross([0.0, 0.0, 1.0], b)
        if np.linalg.norm(n) < 1e-14:
            n = np.cross([1.0, 0.0, 0.0], b)
    return n / np.linalg.norm(n)


def _snap_to_boundary(p, x0, box, tol=1e-12):
    p = np.clip(p, [lo for lo, _ in box], [hi for _, hi in box])
    on_face = [(i, v) for i, (lo, hi) in enumerate(box) for v in (lo, hi)
               if abs(x0[i] - v) <= tol]
    if not any(abs(p[i] - v) <= tol for i, (lo, hi) in enumerate(box) for v in (lo, hi)):
        i, v = on_face[0]
        p[i] = v
    return p


def characteristic_jump(problem, x0, s_max: float, steps: int = 10000,
                        side_offset: float = 1e-3) -> JumpTrace:
    """Trace the streamline from ``x0`` and the solution jump along it.

    Integrates ``x' = beta(x)`` together with ``G' = gamma(x)`` and
    ``J' = exp(G) (f+ - f-)(x)`` by classical RK4, then returns
    ``exp(-G) |J + g+ - g-|``.  Sides ``+``/``-`` are probed at distances
    ``side_offset`` and ``2 * side_offset`` along the left normal of
    ``beta`` and the two differences are extrapolated to zero width.  Integration stops
    (``truncated=True``) once the streamline leaves the closed domain.
    """
    box = problem.box
    x0 = np.asarray(x0, dtype=np.float64)
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])

    def one(fn, x):
        return float(fn(x[None, :])[0])

    n0 = _side_normal(one_vec(problem.beta, x0))

    def dg(delta):
        plus = _snap_to_boundary(x0 + delta * n0, x0, box)
        minus = _snap_to_boundary(x0 - delta * n0, x0, box)
        return one(problem.g, plus) - one(problem.g, minus)

    def df(x, n, delta):
        return one(problem.f, x + delta * n) - one(problem.f, x - delta * n)

    # Richardson on the two probe widths removes the smooth part's O(delta) leak
    g_jump = 2.0 * dg(side_offset) - dg(2.0 * side_offset)

    def rhs(state):
        x = state[:-2]
        b = one_vec(problem.beta, x)
        n = _side_normal(b)
        f_jump = 2.0 * df(x, n, side_offset) - df(x, n, 2.0 * side_offset)
        return np.concatenate([b, [one(problem.gamma, x), np.exp(state[-2]) * f_jump]])

    ds = s_max / steps
    state = np.concatenate([x0, [0.0, 0.0]])
    s_vals, pts, jumps = [0.0], [x0.copy()], [abs(g_jump)]
    truncated = False
    for k in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * ds * k1)
        k3 = rhs(state + 0.5 * ds * k2)
        k4 = rhs(state + ds * k3)
        new = state + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        x = new[:-2]
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            truncated = True
            break
        state = new
        s_vals.append((k + 1) * ds)
        pts.append(x.copy())
        jumps.append(np.exp(-state[-2]) * abs(state[-1] + g_jump))
    return JumpTrace(np.array(s_vals), np.array(pts), np.array(jumps), truncated)


def one_vec(fn, x):
    return np.asarray(fn(np.asarray(x, dtype=np.float64)[None, :]), dtype=np.float64)[0]


def write_jump_csv(trace: JumpTrace, path) -> None:
    d = trace.points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s"] + [f"x{i}" for i in range(d)] + ["jump"])
        for s, p, j in zip(trace.s, trace.points, trace.jump):
            writer.writerow([repr(float(s))] + [repr(float(c)) for c in p] + [repr(float(j))])
