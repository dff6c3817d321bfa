import io
import json

import pytest

from ltavg.bound import LABELS, BoundPolicy, Verdict, bound_curve, classify, write_records
from ltavg.model import OscillatorParams


def test_verdict_json_roundtrip():
    v = Verdict("Stable", 1e-9, "sos", (8, 6), 0.1)
    rec = json.loads(v.to_json(OscillatorParams(gamma=1.0)))
    assert rec["label"] == "Stable" and rec["params"]["gamma"] == 1.0
    assert v.stable and not v.unstable


def test_classify_labels():
    assert classify(OscillatorParams(gamma=1.5, h=0.3)).label == "Stable"
    v = classify(OscillatorParams(gamma=2.0, h=0.3))
    assert v.label == "Unstable"
    # escalation ran through every degree up to dV_max
    assert [h["dV"] for h in v.extra["history"]] == [8, 10]


def test_threshold_controls_indeterminate():
    # U is ~1e-9 here; a negative threshold cannot be met, and no blow-up either
    pol = BoundPolicy(stable_threshold=-1.0, dV_max=4)
    v = classify(OscillatorParams(gamma=1.0, h=0.0), 4, policy=pol)
    assert v.label == "Indeterminate"
    assert v.label in LABELS


def test_bound_curve_and_records():
    ps = [OscillatorParams(gamma=g, h=0.0) for g in (0.5, 1.0)]
    vs = bound_curve(ps, 4)
    assert [v.label for v in vs] == ["Stable", "Stable"]
    buf = io.StringIO()
    write_records(vs, ps, buf)
    assert len(buf.getvalue().strip().splitlines()) == 2


def test_escalation_rejects_bad_degree():
    with pytest.raises(ValueError):
        classify(OscillatorParams(), 3)
