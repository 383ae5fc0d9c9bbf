"""scikit-learn compatible estimators around the LSNN solver.

``LSNNSolver`` minimizes the discrete least-squares functional of an
advection-reaction problem; the problem supplies its own quadrature nodes,
so ``fit`` takes no data.  ``ReLUNetRegressor`` fits the same networks to
samples ``(X, y)`` in the weighted L2 sense.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .functional import L2FitObjective, LSObjective, TransportConfig
from .metrics import breaking_lines, make_report
from .network import NetworkShape, forward
from .optim import TrainSchedule, multistart_train
from .problems import ProblemSpec, get_problem
from .quadrature import build_domain_mesh, build_inflow_mesh


def _shape(n_in: int, hidden_layer_sizes) -> NetworkShape:
    hidden = tuple(int(w) for w in np.atleast_1d(hidden_layer_sizes))
    return NetworkShape((n_in,) + hidden + (1,))


class _TrainedNetMixin:
    def _schedule(self) -> TrainSchedule:
        return TrainSchedule(
            initial_lr=self.learning_rate_init,
            halving_period=self.halving_period,
            total_iters=self.max_iter,
            warmup_restarts=self.n_restarts,
            warmup_iters=self.warmup_iter,
        )

    def _store(self, result):
        self.params_ = result.params
        self.loss_curve_ = [loss for _, _, loss in result.history]
        self.history_ = result.history
        self.warmup_losses_ = result.warmup_losses
        self.best_restart_ = result.best_restart
        self.loss_ = result.final_loss
        self.n_iter_ = len(result.history)

    def predict(self, X):
        """Network values at the rows of ``X``."""
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        return forward(self.params_, X)

    def breaking_lines(self, layer: int, box=None, resolution: int = 201, fixed=None):
        check_is_fitted(self, "params_")
        if box is None:
            box = self._box()
        return breaking_lines(self.params_, layer, box, resolution, fixed=fixed)


class LSNNSolver(_TrainedNetMixin, RegressorMixin, BaseEstimator):
    """Least-squares ReLU network solver for ``u_beta + gamma u = f``.

    Parameters
    ----------
    problem : str or ProblemSpec
        Catalog identifier such as ``"2d-three-segment"`` or a problem object.
    hidden_layer_sizes : tuple of int
        Hidden widths; ``(5, 5)`` on a 2D problem gives a 2-5-5-1 network.
    h : float
        Midpoint-rule mesh size (domain and inflow boundary).
    rho : float or None
        Difference-quotient step; ``None`` means ``h / 4``.
    learning_rate_init, halving_period : float, int
        ADAM learning rate, halved every ``halving_period`` iterations.
    max_iter : int
        Iterations of the selected run, warm-up included.
    n_restarts, warmup_iter : int
        Number and length of the independent warm-up runs.
    random_state : int
        Base seed; warm-up run ``r`` uses ``random_state + r``.
    chunk_size, n_jobs, deterministic
        Batch splitting and threading of the gradient reduction.

    Attributes
    ----------
    params_ : NetworkParams
    loss_curve_ : list of float
    warmup_losses_ : list of float
    """

    def __init__(self, problem="2d-three-segment", hidden_layer_sizes=(5, 5), h=0.02,
                 rho=None, learning_rate_init=0.004, halving_period=50000,
                 max_iter=60000, n_restarts=10, warmup_iter=2000, random_state=0,
                 chunk_size=None, n_jobs=1, deterministic=True):
        self.problem = problem
        self.hidden_layer_sizes = hidden_layer_sizes
        self.h = h
        self.rho = rho
        self.learning_rate_init = learning_rate_init
        self.halving_period = halving_period
        self.max_iter = max_iter
        self.n_restarts = n_restarts
        self.warmup_iter = warmup_iter
        self.random_state = random_state
        self.chunk_size = chunk_size
        self.n_jobs = n_jobs
        self.deterministic = deterministic

    def _problem(self) -> ProblemSpec:
        return self.problem if isinstance(self.problem, ProblemSpec) else get_problem(self.problem)

    def _box(self):
        return self.problem_.box

    def _setup(self):
        self.problem_ = self._problem()
        self.dmesh_ = build_domain_mesh(self.problem_.box, self.h)
        self.bmesh_ = build_inflow_mesh(self.problem_, self.h)
        rho = self.h / 4.0 if self.rho is None else self.rho
        self.cfg_ = TransportConfig(rho)
        self.objective_ = LSObjective(self.problem_, self.dmesh_, self.bmesh_, self.cfg_,
                                      chunk_size=self.chunk_size, n_jobs=self.n_jobs,
                                      deterministic=self.deterministic)
        self.n_features_in_ = self.problem_.dim

    def fit(self, X=None, y=None, checkpoint_dir=None, checkpoint_every=10000):
        """Train on the problem's quadrature nodes.

        Parameters
        ----------
        X, y : ignored
            Present for API consistency; the PDE defines the data.

        Returns
        -------
        self
        """
        self._setup()
        shape = _shape(self.n_features_in_, self.hidden_layer_sizes)
        result = multistart_train(self.objective_, shape, self._schedule(),
                                  seed=self.random_state, checkpoint_dir=checkpoint_dir,
                                  checkpoint_every=checkpoint_every)
        self._store(result)
        return self

    def report(self):
        """Relative L2 / graph-norm errors, LS ratio and parameter count."""
        check_is_fitted(self, "params_")
        return make_report(self.params_, self.problem_, self.dmesh_, self.bmesh_, self.cfg_)


class ReLUNetRegressor(_TrainedNetMixin, RegressorMixin, BaseEstimator):
    """ReLU network fitted by weighted least squares with multi-start ADAM."""

    def __init__(self, hidden_layer_sizes=(4, 4), learning_rate_init=0.004,
                 halving_period=50000, max_iter=60000, n_restarts=10,
                 warmup_iter=2000, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate_init = learning_rate_init
        self.halving_period = halving_period
        self.max_iter = max_iter
        self.n_restarts = n_restarts
        self.warmup_iter = warmup_iter
        self.random_state = random_state

    def _box(self):
        return tuple(zip(self.data_min_, self.data_max_))

    def fit(self, X, y, sample_weight=None):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if sample_weight is not None:
            sample_weight = np.asarray(sample_weight, dtype=np.float64)
            if sample_weight.shape != y.shape:
                raise ValueError("sample_weight must have one entry per sample")
            sample_weight = sample_weight / sample_weight.sum()
        self.n_features_in_ = X.shape[1]
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        shape = _shape(self.n_features_in_, self.hidden_layer_sizes)
        objective = L2FitObjective(X, y, sample_weight)
        self._store(multistart_train(objective, shape, self._schedule(),
                                     seed=self.random_state))
        return self
