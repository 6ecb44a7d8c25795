"""Phase classification, threshold bisection and critical lines.

A survival curve is classified by the curvature of ``log F_n`` against
``log n`` over a window: exponential decay bends down (subcritical), an
approach to a plateau bends up (supercritical), and a pure power law is
straight. The curvature comes from a generalized least-squares quadratic
fit using the exact covariance of nested binomial counts,
``cov(log F_i, log F_j) = (1 - F_i) / (N F_i)`` for ``n_i <= n_j``, so its
z-score measures departure from a power law in units of sampling noise.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import GrowthLimits
from .models import ModelKind, ModelSpec, ParameterError, with_probability
from .rng import derive_seed
from .stats import SurvivalCurve, estimate_survival

__all__ = [
    "Phase",
    "PhaseVerdict",
    "CriticalEstimate",
    "CriticalPoint",
    "CriticalLine",
    "BracketError",
    "CLASSIFY_WINDOW",
    "classify_phase",
    "bisect_threshold",
    "trace_critical_line",
    "with_probability",
]

CLASSIFY_WINDOW = (2**4, 2**11)


class BracketError(ValueError):
    """The initial bracket does not straddle the transition."""


class Phase(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class PhaseVerdict:
    label: Phase
    curvature: float
    z_score: float
    slope: float = float("nan")


def _gls(x, y, cov, degree):
    X = np.vander(x, degree + 1, increasing=True)
    ci = np.linalg.inv(cov)
    a = X.T @ ci @ X
    a_inv = np.linalg.inv(a)
    coef = a_inv @ X.T @ ci @ y
    return coef, np.sqrt(np.diag(a_inv))


def classify_phase(curve: SurvivalCurve, window=CLASSIFY_WINDOW, z_threshold: float = 2.0) -> PhaseVerdict:
    """Label ``curve`` sub-, super- or critical over ``window`` (inclusive n range).

    Conventions: a window with empty grid points (the tail died out) is
    SUBCRITICAL with ``z = -inf``; a window where ``F_n`` does not decay
    significantly at all is a plateau, SUPERCRITICAL with ``z = +inf``.
    """
    lo, hi = window
    sel = (curve.n_grid >= lo) & (curve.n_grid <= hi)
    n = curve.n_grid[sel].astype(float)
    c = curve.counts_exceeding[sel].astype(float)
    N = float(curve.total_realizations)
    if n.size < 6:
        raise ParameterError(f"window {window} holds {n.size} grid points, need >= 6")
    if c[0] == 0 or np.any(c == 0):
        return PhaseVerdict(Phase.SUBCRITICAL, float("nan"), float("-inf"))
    if np.all(c == N):
        return PhaseVerdict(Phase.SUPERCRITICAL, 0.0, float("inf"), 0.0)
    y = np.log(c / N)
    x = np.log(n)
    x = x - x.mean()
    f_reg = (c + 0.5) / (N + 1.0)
    v = (1.0 - f_reg) / (f_reg * N)
    idx = np.arange(n.size)
    # equal neighbouring counts make the nested covariance singular
    cov = v[np.minimum.outer(idx, idx)] + np.diag(1e-3 * v)
    (_, slope), (_, slope_se) = _gls(x, y, cov, 1)
    coef, se = _gls(x, y, cov, 2)
    curvature = float(coef[2])
    if slope / slope_se > -z_threshold:
        return PhaseVerdict(Phase.SUPERCRITICAL, curvature, float("inf"), float(slope))
    z = curvature / se[2]
    if z <= -z_threshold:
        label = Phase.SUBCRITICAL
    elif z >= z_threshold:
        label = Phase.SUPERCRITICAL
    else:
        label = Phase.CRITICAL
    return PhaseVerdict(label, curvature, float(z), float(slope))


@dataclass
class CriticalEstimate:
    p_c: float
    uncertainty: float
    bracket_history: list
    realizations_per_step: int
    steps: int = 0
    verdicts: list = field(default_factory=list)
    varying: str = "p"

    def to_json(self, config: dict | None = None) -> str:
        doc = {
            "p_c": self.p_c,
            "uncertainty": self.uncertainty,
            "bracket_history": [list(b) for b in self.bracket_history],
            "realizations_per_step": self.realizations_per_step,
            "steps": self.steps,
            "varying": self.varying,
            "verdicts": [[p, v.label.value, v.z_score] for p, v in self.verdicts],
        }
        if config is not None:
            doc["config"] = config
        return json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n"


def _classification_limits(limits: GrowthLimits, window) -> GrowthLimits:
    # counts at n <= window[1] are unchanged by any cutoff >= window[1]
    cut = int(window[1]) if limits.size_cutoff is None else min(int(limits.size_cutoff), int(window[1]))
    return GrowthLimits(size_cutoff=cut, depth_cutoff=limits.depth_cutoff)


def bisect_threshold(spec_template: ModelSpec, varying: str, bracket, tol: float,
                     realizations: int, limits: GrowthLimits = GrowthLimits(),
                     master_seed=42, window=CLASSIFY_WINDOW, z_threshold: float = 2.0,
                     max_steps: int = 40, workers: int = 1, source=None,
                     check_bracket: bool = True) -> CriticalEstimate:
    """Locate the threshold in ``varying`` by interval bisection.

    Each evaluation grows ``realizations`` fresh clusters (seeded from
    ``master_seed`` and the step index) and classifies the curve. A CRITICAL
    verdict keeps the middle half of the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0.0 <= lo < hi <= 1.0:
        raise BracketError(f"bad bracket {bracket}")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    grow = _classification_limits(limits, window)
    verdicts = []
    step = 0

    def evaluate(p):
        nonlocal step
        spec = with_probability(spec_template, varying, p)
        curve = estimate_survival(spec, derive_seed(master_seed, step), realizations, grow,
                                  source=source, workers=workers)
        step += 1
        verdict = classify_phase(curve, window, z_threshold)
        verdicts.append((p, verdict))
        return verdict

    if check_bracket:
        v_lo = evaluate(lo)
        v_hi = evaluate(hi)
        if v_lo.label is not Phase.SUBCRITICAL or v_hi.label is not Phase.SUPERCRITICAL:
            raise BracketError(
                f"bracket ({lo}, {hi}) classified {v_lo.label.value}/{v_hi.label.value}"
            )
    history = [(lo, hi)]
    while hi - lo > 2 * tol and len(history) <= max_steps:
        mid = 0.5 * (lo + hi)
        verdict = evaluate(mid)
        if verdict.label is Phase.SUBCRITICAL:
            lo = mid
        elif verdict.label is Phase.SUPERCRITICAL:
            hi = mid
        else:
            quarter = 0.25 * (hi - lo)
            lo, hi = mid - quarter, mid + quarter
        history.append((lo, hi))
    return CriticalEstimate(0.5 * (lo + hi), 0.5 * (hi - lo), history, realizations,
                            steps=step, verdicts=verdicts, varying=varying)


@dataclass
class CriticalPoint:
    p_plus: float
    p_minus_c: float
    uncertainty: float
    steps: int
    realizations: int
    reachable: bool = True
    mirrored: bool = False


@dataclass
class CriticalLine:
    kind: ModelKind
    points: list
    isotropy_point: CriticalEstimate | None = None

    def p_minus_at(self, p_plus: float) -> CriticalPoint:
        for pt in self.points:
            if not pt.mirrored and math.isclose(pt.p_plus, p_plus, abs_tol=1e-12):
                return pt
        raise KeyError(p_plus)

    def to_csv(self, header: dict | None = None) -> str:
        """``p_plus,p_minus_c,uncertainty,steps,realizations`` rows, sorted by ``p_plus``."""
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={json.dumps(value, sort_keys=True)}\n")
        if self.isotropy_point is not None:
            buf.write(f"# isotropy_point={self.isotropy_point.p_c!r}"
                      f" +- {self.isotropy_point.uncertainty!r}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["p_plus", "p_minus_c", "uncertainty", "steps", "realizations"])
        rows = sorted(self.points, key=lambda q: (q.p_plus, q.p_minus_c))
        for q in rows:
            pm = repr(q.p_minus_c) if q.reachable else "nan"
            wr.writerow([repr(q.p_plus), pm, repr(q.uncertainty), q.steps, q.realizations])
        return buf.getvalue()


def trace_critical_line(kind, p_plus_grid, tol: float, realizations: int,
                        limits: GrowthLimits = GrowthLimits(), master_seed=42,
                        width: int = 512, window=CLASSIFY_WINDOW, z_threshold: float = 2.0,
                        workers: int = 1, diagonal_bracket=(0.0, 1.0)) -> CriticalLine:
    """Critical line ``p_minus_c(p_plus)`` of a Model B process.

    For every ``p_plus`` on the grid, ``p_minus`` is bisected on ``[0, 1]``;
    the isotropy point is bisected along ``p_plus = p_minus``. Points are
    mirrored across the diagonal. A grid value already supercritical at
    ``p_minus = 0``, or still not supercritical at ``p_minus = 1``, is
    reported unreachable.
    """
    kind = ModelKind.parse(kind)
    if kind.is_a:
        raise ParameterError("critical lines are defined for Model B only")
    template = ModelSpec(kind, width=width)
    points = []
    for i, pp in enumerate(p_plus_grid):
        pp = float(pp)
        if not 0.0 <= pp < 1.0:
            raise ParameterError(f"grid value {pp} outside [0, 1)")
        try:
            est = bisect_threshold(template.replace(p_plus=pp), "p_minus", (0.0, 1.0), tol,
                                   realizations, limits, derive_seed(master_seed, 1, i),
                                   window, z_threshold, workers=workers)
        except BracketError:
            points.append(CriticalPoint(pp, float("nan"), float("nan"), 0, realizations, False))
            continue
        points.append(CriticalPoint(pp, est.p_c, est.uncertainty, est.steps, realizations))
    iso = bisect_threshold(template, "diagonal", diagonal_bracket, tol, realizations, limits,
                           derive_seed(master_seed, 2), window, z_threshold, workers=workers)
    mirrored = [CriticalPoint(q.p_minus_c, q.p_plus, q.uncertainty, q.steps, q.realizations,
                              True, True) for q in points if q.reachable]
    diag = CriticalPoint(iso.p_c, iso.p_c, iso.uncertainty, iso.steps, realizations, True, False)
    return CriticalLine(kind, points + [diag] + mirrored, iso)
