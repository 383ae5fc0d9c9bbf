"""Discrete least-squares functional for ``u_beta + gamma u = f``.

The directional derivative is replaced by the backward difference quotient

    v_beta(x) ~ |beta| (v(x) - v(x - rho * beta / |beta|)) / rho,

and both integrals use the midpoint rule.  The network is global, so the
shifted point may leave the domain near the inflow boundary.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from .network import NetworkParams, _backward, _forward_cache
from .quadrature import DomainMesh, InflowMesh


@dataclass(frozen=True)
class TransportConfig:
    """Finite-difference step ``rho`` (defaults to a quarter of the mesh size)."""

    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @classmethod
    def for_mesh(cls, h: float, factor: float = 0.25) -> "TransportConfig":
        return cls(rho=factor * h)


def fd_directional_derivative(v, x, beta_at_x, rho: float):
    """Backward difference quotient along ``beta`` scaled by ``|beta|``.

    ``v`` is vectorized over points.  ``x`` and ``beta_at_x`` are a single
    point/vector or matching batches.  Zero velocity gives zero.
    """
    x = np.asarray(x, dtype=np.float64)
    beta = np.asarray(beta_at_x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    B = np.broadcast_to(np.atleast_2d(beta), X.shape)
    speed = np.linalg.norm(B, axis=1)
    unit = np.divide(B, speed[:, None], out=np.zeros_like(B), where=speed[:, None] > 0)
    v0 = np.asarray(v(X), dtype=np.float64)
    v1 = np.asarray(v(X - rho * unit), dtype=np.float64)
    if not (np.all(np.isfinite(v0)) and np.all(np.isfinite(v1))):
        raise FloatingPointError("non-finite function value in difference quotient")
    out = speed * (v0 - v1) / rho
    return float(out[0]) if single else out


class LSObjective:
    """Discrete LS loss and gradient for one problem on fixed meshes.

    All point sets are stacked into one batch ``[x_K; x_K - rho*beta_bar; x_b]``
    so one forward and one backward pass give loss and gradient.

    Parameters
    ----------
    problem : ProblemSpec
    dmesh, bmesh : DomainMesh, InflowMesh
    cfg : TransportConfig
    zero_data : bool
        Use ``f = 0`` and ``g = 0`` (the homogeneous functional).
    chunk_size : int or None
        Split the batch into chunks whose gradients are summed in fixed
        chunk order.
    n_jobs : int
        Threads used for chunks.
    deterministic : bool
        If False and ``n_jobs > 1``, chunk gradients are summed in completion
        order, which may change the last bits.
    """

    def __init__(self, problem, dmesh: DomainMesh, bmesh: InflowMesh,
                 cfg: TransportConfig, zero_data: bool = False,
                 chunk_size: int | None = None, n_jobs: int = 1,
                 deterministic: bool = True):
        self.problem = problem
        self.dmesh = dmesh
        self.bmesh = bmesh
        self.cfg = cfg
        self.chunk_size = chunk_size
        self.n_jobs = n_jobs
        self.deterministic = deterministic

        X = dmesh.points
        B = problem.beta(X)
        speed = np.linalg.norm(B, axis=1)
        unit = np.divide(B, speed[:, None], out=np.zeros_like(B), where=speed[:, None] > 0)
        self.n = len(X)
        self.nb = len(bmesh)
        self.coef = speed / cfg.rho
        self.gamma = problem.gamma(X)
        self.f = np.zeros(self.n) if zero_data else problem.f(X)
        self.w = dmesh.weights
        self.wb = bmesh.weights
        self.g = np.zeros(self.nb) if zero_data else (problem.g(bmesh.points) if self.nb else np.zeros(0))
        self.batch = np.concatenate([X, X - cfg.rho * unit, bmesh.points])

    def with_zero_data(self) -> "LSObjective":
        return LSObjective(self.problem, self.dmesh, self.bmesh, self.cfg, zero_data=True,
                           chunk_size=self.chunk_size, n_jobs=self.n_jobs,
                           deterministic=self.deterministic)

    # split network values into residual pieces
    def _residuals(self, values):
        v0 = values[:self.n]
        v1 = values[self.n:2 * self.n]
        vb = values[2 * self.n:]
        r = self.coef * (v0 - v1) + self.gamma * v0 - self.f
        rb = vb - self.g
        return r, rb

    def _loss_from(self, r, rb) -> float:
        loss = float(np.sum(self.w * r * r) + np.sum(self.wb * rb * rb))
        if not np.isfinite(loss):
            bad = np.flatnonzero(~np.isfinite(r))
            where = f" (first bad node {int(bad[0])})" if bad.size else ""
            raise FloatingPointError(f"non-finite LS loss{where}")
        return loss

    def values(self, params: NetworkParams) -> np.ndarray:
        out = np.empty(len(self.batch))
        for sl in self._slices():
            zs, _ = _forward_cache(params, self.batch[sl])
            out[sl] = zs[-1][:, 0]
        return out

    def loss(self, params: NetworkParams) -> float:
        return self._loss_from(*self._residuals(self.values(params)))

    def residuals(self, params: NetworkParams):
        """Domain residuals ``v_beta + gamma v - f`` and boundary ``v - g``."""
        return self._residuals(self.values(params))

    def _slices(self):
        total = len(self.batch)
        size = self.chunk_size or total
        return [slice(s, min(s + size, total)) for s in range(0, total, size)]

    def loss_and_grad(self, params: NetworkParams) -> tuple[float, np.ndarray]:
        slices = self._slices()
        if len(slices) == 1:
            zs, acts = _forward_cache(params, self.batch)
            caches = [(zs, acts)]
            values = zs[-1][:, 0]
        else:
            caches = [_forward_cache(params, self.batch[sl]) for sl in slices]
            values = np.concatenate([c[0][-1][:, 0] for c in caches])
        r, rb = self._residuals(values)
        loss = self._loss_from(r, rb)
        wr = 2.0 * self.w * r
        up = np.concatenate([wr * (self.coef + self.gamma), -wr * self.coef,
                             2.0 * self.wb * rb])
        if len(slices) == 1:
            return loss, _backward(params, caches[0][0], caches[0][1], up)
        return loss, self._reduce(params, caches, slices, up)

    def _reduce(self, params, caches, slices, up):
        def job(k):
            zs, acts = caches[k]
            return _backward(params, zs, acts, up[slices[k]])

        grad = np.zeros_like(params.flat)
        if self.n_jobs <= 1:
            for k in range(len(slices)):
                grad += job(k)
            return grad
        with ThreadPoolExecutor(self.n_jobs) as pool:
            if self.deterministic:
                for part in pool.map(job, range(len(slices))):
                    grad += part
            else:
                futures = [pool.submit(job, k) for k in range(len(slices))]
                for fut in as_completed(futures):
                    grad += fut.result()
        return grad


def discrete_ls(params, problem, dmesh, bmesh, cfg) -> float:
    """Midpoint-rule LS functional with the difference-quotient derivative."""
    return LSObjective(problem, dmesh, bmesh, cfg).loss(params)


def discrete_ls_gradient(params, problem, dmesh, bmesh, cfg) -> np.ndarray:
    """Flat gradient of :func:`discrete_ls` w.r.t. all network parameters."""
    return LSObjective(problem, dmesh, bmesh, cfg).loss_and_grad(params)[1]


def ls_ratio(params, problem, dmesh, bmesh, cfg) -> float:
    """``sqrt(L(v; f, g)) / sqrt(L(v; 0, 0))``."""
    obj = LSObjective(problem, dmesh, bmesh, cfg)
    values = obj.values(params)
    num = obj._loss_from(*obj._residuals(values))
    zero = obj.with_zero_data()
    den = zero._loss_from(*zero._residuals(values))
    if den == 0.0:
        raise ZeroDivisionError("homogeneous LS functional vanishes (identically zero network?)")
    return float(np.sqrt(num / den))


def graph_norm_sq(params, problem, dmesh, bmesh, cfg) -> float:
    """Discrete ``||v||^2 + ||v_beta||^2 + ||v||^2_{-beta}`` for norm comparisons."""
    obj = LSObjective(problem, dmesh, bmesh, cfg, zero_data=True)
    values = obj.values(params)
    v0 = values[:obj.n]
    vb = values[2 * obj.n:]
    dv = obj.coef * (v0 - values[obj.n:2 * obj.n])
    return float(np.sum(obj.w * v0 * v0) + np.sum(obj.w * dv * dv) + np.sum(obj.wb * vb * vb))


class L2FitObjective:
    """Weighted least-squares fit ``sum_k w_k (v(x_k) - t_k)^2`` of a network.

    Used for approximating a fixed target rather than solving a PDE.
    """

    def __init__(self, points, targets, weights=None):
        self.points = np.asarray(points, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.float64)
        n = len(self.points)
        self.weights = (np.full(n, 1.0 / n) if weights is None
                        else np.asarray(weights, dtype=np.float64))

    def loss(self, params: NetworkParams) -> float:
        zs, _ = _forward_cache(params, self.points)
        r = zs[-1][:, 0] - self.targets
        return float(np.sum(self.weights * r * r))

    def loss_and_grad(self, params: NetworkParams):
        zs, acts = _forward_cache(params, self.points)
        r = zs[-1][:, 0] - self.targets
        loss = float(np.sum(self.weights * r * r))
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite L2 fitting loss")
        return loss, _backward(params, zs, acts, 2.0 * self.weights * r)
