import json
import math

import numpy as np
import pytest

from percolab.critical import (
    BracketError,
    CriticalEstimate,
    CriticalLine,
    CriticalPoint,
    Phase,
    bisect_threshold,
    classify_phase,
    trace_critical_line,
)
from percolab.engine import GrowthLimits
from percolab.models import ModelSpec, ParameterError
from percolab.stats import SurvivalCurve, estimate_survival, size_grid

N = 10**4


def curve_from(f, total=N, top=2**13):
    n = size_grid(top)
    counts = np.round(total * np.array([f(float(k)) for k in n])).astype(np.int64)
    return SurvivalCurve(n, counts, total)


class TestClassifier:
    def test_power_law_is_critical(self):
        v = classify_phase(curve_from(lambda n: n**-0.112))
        assert v.label is Phase.CRITICAL

    def test_exponential_is_subcritical(self):
        v = classify_phase(curve_from(lambda n: 0.9 * math.exp(-n / 300)))
        assert v.label is Phase.SUBCRITICAL

    def test_plateau_is_supercritical(self):
        v = classify_phase(curve_from(lambda n: 0.6 + 0.4 * n**-0.5))
        assert v.label is Phase.SUPERCRITICAL

    def test_flat_is_supercritical(self):
        v = classify_phase(curve_from(lambda n: 1.0))
        assert v.label is Phase.SUPERCRITICAL and v.z_score == math.inf

    def test_empty_tail_is_subcritical(self):
        v = classify_phase(curve_from(lambda n: 0.5 if n < 64 else 0.0))
        assert v.label is Phase.SUBCRITICAL and v.z_score == -math.inf

    def test_short_window(self):
        with pytest.raises(ParameterError):
            classify_phase(curve_from(lambda n: n**-0.1), window=(16, 64))

    @pytest.mark.parametrize("p,label", [(0.49, Phase.SUBCRITICAL), (0.59, Phase.SUPERCRITICAL)])
    def test_a_ea_away_from_threshold(self, p, label):
        spec = ModelSpec("a-ea", p=p, width=1025, depth=512)
        c = estimate_survival(spec, 4, 3000, GrowthLimits(2**11))
        assert classify_phase(c).label is label


class TestBisection:
    def test_bad_bracket(self):
        with pytest.raises(BracketError):
            bisect_threshold(ModelSpec("a-ea", width=65, depth=32), "p", (0.7, 0.4), 0.01, 10)

    def test_bracket_not_straddling(self):
        with pytest.raises(BracketError):
            bisect_threshold(ModelSpec("a-ea", width=257, depth=128), "p", (0.6, 0.9), 0.01, 500,
                             GrowthLimits(2**11))

    def test_bad_tol(self):
        with pytest.raises(ParameterError):
            bisect_threshold(ModelSpec("a-ea"), "p", (0.4, 0.7), 0.0, 10, check_bracket=False)

    def test_converges_and_halves(self):
        est = bisect_threshold(ModelSpec("a-ea", width=513, depth=256), "p", (0.4, 0.7), 0.01, 2000,
                               GrowthLimits(2**11), master_seed=1)
        widths = [hi - lo for lo, hi in est.bracket_history]
        assert all(b <= a / 2 + 1e-12 for a, b in zip(widths, widths[1:]))
        assert widths[-1] <= 0.02 + 1e-12
        assert len(est.bracket_history) - 1 <= math.ceil(math.log2(0.3 / 0.01))
        for lo, hi in est.bracket_history:
            assert lo <= est.p_c <= hi
        assert 0.51 <= est.p_c <= 0.57
        doc = json.loads(est.to_json({"seed": 1}))
        assert doc["p_c"] == est.p_c and doc["config"] == {"seed": 1}

    def test_deterministic(self):
        args = (ModelSpec("b-ea", width=128), "p_plus", (0.2, 0.5), 0.02, 500, GrowthLimits(2**11))
        a = bisect_threshold(*args, master_seed=5)
        b = bisect_threshold(*args, master_seed=5, workers=3)
        assert a.bracket_history == b.bracket_history


def test_critical_line_csv():
    pts = [CriticalPoint(0.1, 0.4, 0.01, 5, 100), CriticalPoint(0.0, 0.6, 0.01, 5, 100),
           CriticalPoint(0.9, math.nan, math.nan, 0, 100, reachable=False)]
    est = CriticalEstimate(0.5, 0.005, [(0, 1)], 100)
    line = CriticalLine("b-classical", pts, est)
    rows = line.to_csv({"seed": 3}).splitlines()
    assert rows[0] == "# seed=3"
    assert rows[2] == "p_plus,p_minus_c,uncertainty,steps,realizations"
    assert rows[3].startswith("0.0,0.6")
    assert rows[-1].startswith("0.9,nan")
    assert line.p_minus_at(0.1).p_minus_c == 0.4


def test_trace_rejects_model_a():
    with pytest.raises(ParameterError):
        trace_critical_line("a-ea", [0.1], 0.01, 10)


def test_trace_small_line():
    line = trace_critical_line("b-classical", [0.0, 0.95], 0.02, 600, GrowthLimits(2**11),
                               width=128, master_seed=2)
    first = line.p_minus_at(0.0)
    assert first.reachable and 0.55 < first.p_minus_c < 0.72
    # already supercritical at p_minus = 0
    assert not line.p_minus_at(0.95).reachable
    assert abs(line.isotropy_point.p_c - 0.5) < 0.04
    mirrored = [q for q in line.points if q.mirrored]
    assert any(math.isclose(q.p_minus_c, 0.0) for q in mirrored)
