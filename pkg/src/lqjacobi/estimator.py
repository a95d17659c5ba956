"""scikit-learn style facade over :func:`lqjacobi.analysis.analyze`."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import AnalysisConfig, analyze
from .exceptions import ParameterError
from .model import HamiltonianField, LqProblem
from .serialization import parse_input
from .tolerances import DEFAULT_TOLERANCES


def _as_source(X):
    if isinstance(X, (LqProblem, HamiltonianField)):
        return X
    if isinstance(X, dict):
        return parse_input(X)
    if isinstance(X, (tuple, list)) and len(X) == 3:
        return LqProblem(*X)
    raise ParameterError("fit expects an LqProblem, a HamiltonianField, a problem dict or a tuple (A, B, Q)")


class ConjugateTimeAnalyzer(BaseEstimator):
    """Conjugate times of one LQ problem up to ``horizon``.

    ``fit`` runs the full analysis; ``predict`` evaluates the counting function
    ``N(t)``: the number of conjugate times in ``(0, t]`` with multiplicity.
    """

    def __init__(self, horizon=30.0, grid_step=None, eps_shift=None, seed=0, tol=None):
        self.horizon = horizon
        self.grid_step = grid_step
        self.eps_shift = eps_shift
        self.seed = seed
        self.tol = tol

    def fit(self, X, y=None):
        config = AnalysisConfig(self.horizon, self.grid_step, self.tol or DEFAULT_TOLERANCES,
                                self.eps_shift, self.seed)
        self.report_ = analyze(_as_source(X), config)
        self.conjugate_times_ = np.array([c.t for c in self.report_.conjugate_times])
        self.multiplicities_ = np.array([c.multiplicity for c in self.report_.conjugate_times], dtype=int)
        self.verdict_ = None if self.report_.verdict is None else self.report_.verdict.kind
        self.maslov_count_ = self.report_.maslov_count
        self.status_ = self.report_.status
        return self

    def predict(self, X):
        """``N(t)`` for each time in ``X`` (1-d), with ``0 <= t <= horizon``."""
        check_is_fitted(self, "report_")
        ts = check_array(X, ensure_2d=False, dtype=float).ravel()
        if np.any(ts < 0) or np.any(ts > self.horizon):
            raise ValueError(f"times must lie in [0, {self.horizon}]")
        cum = np.concatenate([[0], np.cumsum(self.multiplicities_)])
        return cum[np.searchsorted(self.conjugate_times_, ts, side="right")]
