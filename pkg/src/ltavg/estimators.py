"""scikit-learn style classifiers over (gamma, h) points.

Each estimator fixes the remaining oscillator parameters as hyper-parameters
and predicts Stable / Unstable / Indeterminate for rows of ``X = [gamma, h]``.
``fit`` only validates input: the methods are model-based, nothing is learned.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bound import LABELS
from .model import OscillatorParams
from .sweep import _map, classify_point, worker_count


def check_points(X) -> np.ndarray:
    """Validate an (n, 2) array of (gamma, h) with finite entries and h in [0, 1]."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (gamma, h), got {X.shape[1]}")
    if np.any(X[:, 1] < 0) or np.any(X[:, 1] > 1):
        raise ValueError("h must lie in [0, 1]")
    return X


def _verdict_task(args):
    return classify_point(*args)


class _PointClassifier(ClassifierMixin, BaseEstimator):
    method = "sos"

    def __init__(self, omega0=1.0, g=0.01, r=0.2, phi=0.0, n_jobs=None):
        self.omega0 = omega0
        self.g = g
        self.r = r
        self.phi = phi
        self.n_jobs = n_jobs

    def _settings(self) -> dict:
        return {}

    def _base(self) -> OscillatorParams:
        return OscillatorParams(omega0=self.omega0, g=self.g, r=self.r, phi=self.phi)

    def fit(self, X, y=None):
        X = check_points(X)
        self._base()  # validates hyper-parameters
        self.classes_ = np.array(LABELS)
        self.n_features_in_ = X.shape[1]
        return self

    def verdicts(self, X) -> list:
        check_is_fitted(self, "classes_")
        X = check_points(X)
        base, s = self._base(), self._settings()
        items = [(base.with_(gamma=float(g), h=float(h)), self.method, s) for g, h in X]
        return _map(_verdict_task, items, self.n_jobs or worker_count())

    def predict(self, X) -> np.ndarray:
        return np.array([v.label for v in self.verdicts(X)])


class SosClassifier(_PointClassifier):
    """Certified bound on the long-time average, with degree escalation."""

    method = "sos"

    def __init__(self, dV=8, dS=None, dV_max=10, stable_threshold=1e-3, omega0=1.0, g=0.01, r=0.2,
                 phi=0.0, n_jobs=None):
        super().__init__(omega0, g, r, phi, n_jobs)
        self.dV = dV
        self.dS = dS
        self.dV_max = dV_max
        self.stable_threshold = stable_threshold

    def _settings(self):
        return {"dV": self.dV, "dS": self.dS, "dV_max": self.dV_max, "stable_threshold": self.stable_threshold}

    def decision_function(self, X) -> np.ndarray:
        """Certified U (inf where no certificate exists)."""
        return np.array([np.inf if v.bound_value is None else v.bound_value for v in self.verdicts(X)])


class FloquetClassifier(_PointClassifier):
    """Truncated Hill determinant, ``variant`` in {"general", "simplified"}."""

    def __init__(self, variant="general", omega0=1.0, g=0.01, r=0.2, phi=0.0, n_jobs=None):
        super().__init__(omega0, g, r, phi, n_jobs)
        self.variant = variant

    @property
    def method(self):
        if self.variant not in ("general", "simplified"):
            raise ValueError(f"unknown variant {self.variant!r}")
        return "floquet-" + self.variant

    def decision_function(self, X) -> np.ndarray:
        """Largest growth rate Im(mu)."""
        return np.array([v.extra["max_growth"] for v in self.verdicts(X)])


class MonodromyClassifier(_PointClassifier):
    """Exact one-period monodromy of the linear system."""

    method = "monodromy"

    def decision_function(self, X) -> np.ndarray:
        return np.array([v.extra["max_growth"] for v in self.verdicts(X)])


class DnsClassifier(_PointClassifier):
    """Seeded ensemble of direct simulations."""

    method = "dns"

    def __init__(self, n_ic=3, seed=0, horizon_periods=200.0, omega0=1.0, g=0.01, r=0.2, phi=0.0, n_jobs=None):
        super().__init__(omega0, g, r, phi, n_jobs)
        self.n_ic = n_ic
        self.seed = seed
        self.horizon_periods = horizon_periods

    def _settings(self):
        return {"n_ic": self.n_ic, "seed": self.seed, "horizon_periods": self.horizon_periods}
