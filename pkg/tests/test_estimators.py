import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ltavg.estimators import (DnsClassifier, FloquetClassifier, MonodromyClassifier, SosClassifier,
                              check_points)

X = np.array([[2.0, 0.3], [1.5, 0.3], [1.0, 0.0]])
Y = np.array(["Unstable", "Stable", "Stable"])


def test_check_points():
    with pytest.raises(ValueError):
        check_points([[1.0, 2.0]])
    with pytest.raises(ValueError):
        check_points([[1.0, 0.1, 0.0]])
    with pytest.raises(ValueError):
        check_points([[np.nan, 0.1]])


@pytest.mark.parametrize("est", [FloquetClassifier(), FloquetClassifier("simplified"), MonodromyClassifier(),
                                 SosClassifier(dV=6)])
def test_predict(est):
    est.fit(X)
    assert list(est.classes_) == ["Stable", "Unstable", "Indeterminate"]
    assert np.array_equal(est.predict(X), Y)
    assert est.score(X, Y) == 1.0


def test_decision_functions():
    d = MonodromyClassifier().fit(X).decision_function(X)
    assert d[0] > 0 > d[1]
    u = SosClassifier(dV=6).fit(X).decision_function(X)
    assert u[1] < 1e-3 and (u[0] == np.inf or u[0] > 1e3)


def test_params_and_clone():
    est = FloquetClassifier(variant="simplified", r=0.4)
    c = clone(est)
    assert c.get_params()["variant"] == "simplified" and c.get_params()["r"] == 0.4
    with pytest.raises(NotFittedError):
        c.predict(X)
    with pytest.raises(ValueError):
        FloquetClassifier(variant="bogus").fit(X).predict(X)


def test_dns_classifier():
    pts = np.array([[2.0, 0.6]])
    est = DnsClassifier(n_ic=1, g=0.2).fit(pts)
    first = est.predict(pts)
    assert np.array_equal(first, MonodromyClassifier(g=0.2).fit(pts).predict(pts))
    assert np.array_equal(first, est.predict(pts))
