import json
import math
from itertools import accumulate

import pytest

from percolab.models import ModelSpec
from percolab.oracle import (
    SizeLimitError,
    compare_mc_to_oracle,
    engine_mismatches,
    enumerate_exact,
)

TINY = [
    ModelSpec("a-ea", p=0.5, width=5, depth=2),
    ModelSpec("a-classical", p=0.7, width=3, depth=4),
    ModelSpec("b-ea", p_plus=0.3, p_minus=0.2, width=3, height=2),
    ModelSpec("b-classical", p_plus=0.6, p_minus=0.3, width=3, height=2),
]


def test_single_layer_closed_form():
    d = enumerate_exact(ModelSpec("a-ea", p=0.5, width=3, depth=1))
    assert d.exceed_prob(1) == pytest.approx(1 - 0.5**3, abs=1e-12)
    assert sum(d.size_pmf.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("spec", TINY, ids=lambda s: s.kind.value)
def test_zero_probability(spec):
    d = enumerate_exact(spec.replace(p=0.0, p_plus=0.0, p_minus=0.0))
    assert d.size_pmf == {1: 1.0}
    assert d.reach_prob == {d.source: 1.0}


@pytest.mark.parametrize("spec", TINY, ids=lambda s: s.kind.value)
def test_full_probability(spec):
    d = enumerate_exact(spec.replace(p=1.0, p_plus=1.0, p_minus=1.0))
    assert len(d.size_pmf) == 1
    assert set(d.reach_prob.values()) == {1.0}


@pytest.mark.parametrize("spec", TINY, ids=lambda s: s.kind.value)
def test_normalised(spec):
    d = enumerate_exact(spec)
    assert math.fsum(d.size_pmf.values()) == pytest.approx(1.0, abs=1e-12)
    assert d.reach_prob[d.source] == pytest.approx(1.0, abs=1e-12)


def test_stochastic_dominance():
    cdfs = []
    for p in (0.2, 0.5, 0.8):
        d = enumerate_exact(ModelSpec("a-ea", p=p, width=5, depth=2))
        sizes = range(1, 10)
        cdfs.append(list(accumulate(d.size_pmf.get(s, 0.0) for s in sizes)))
    for lo, hi in zip(cdfs, cdfs[1:]):
        assert all(a >= b - 1e-12 for a, b in zip(lo, hi))


def test_size_limit():
    with pytest.raises(SizeLimitError):
        enumerate_exact(ModelSpec("b-ea", width=3, height=3))


@pytest.mark.parametrize("spec", TINY, ids=lambda s: s.kind.value)
def test_engine_matches_every_configuration(spec):
    assert engine_mismatches(spec) == 0


def test_mc_agrees_with_enumeration():
    report = compare_mc_to_oracle(TINY[0], realizations=20000, master_seed=1)
    assert report.passed, report.max_abs_z
    doc = json.loads(report.to_json())
    assert set(doc) >= {"spec", "source", "size_pmf", "reach_prob", "mc_z_scores"}


def test_p_zero_exact():
    report = compare_mc_to_oracle(ModelSpec("b-ea", width=3, height=2), realizations=100)
    assert report.max_abs_z == 0.0
