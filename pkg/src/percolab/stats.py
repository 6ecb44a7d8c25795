"""Survival curves and critical-exponent fits.

``F_n`` is the fraction of realizations whose cluster has more than ``n``
sites, tabulated on powers of two. Truncated clusters (size cutoff, or a
Model A cluster still alive at the last layer) count as exceeding every
grid point. All counters are integers, so partial curves merge exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats as sps

from .engine import GrowthLimits, InsufficientDataError, RealizationRecords, run_realizations
from .models import ModelSpec, ParameterError, with_probability
from .rng import derive_seed

__all__ = [
    "SurvivalCurve",
    "Fit",
    "ExponentSet",
    "DomainError",
    "size_grid",
    "survival_from_records",
    "estimate_survival",
    "estimate_f_infinity",
    "mean_cluster_size",
    "estimate_tau",
    "estimate_beta_direct",
    "estimate_gamma",
    "beta_from_scaling",
    "beta_from_scaling_stderr",
    "TAU_WINDOW",
    "BETA_WINDOW",
    "GAMMA_WINDOW",
    "default_offsets",
    "measure_exponents",
]

TAU_WINDOW = (2**7, 2**13)
BETA_WINDOW = (0.01, 0.1)
GAMMA_WINDOW = (0.01, 0.1)


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class Fit(NamedTuple):
    value: float
    stderr: float
    window: tuple
    n_points: int


def size_grid(size_cutoff: int | None, max_size: int | None = None) -> np.ndarray:
    """Powers of two from 1 up to the cutoff (or the largest observed size)."""
    top = size_cutoff if size_cutoff is not None else max(int(max_size or 1), 1)
    k = int(top).bit_length() - 1
    return 2 ** np.arange(k + 1, dtype=np.int64)


@dataclass
class SurvivalCurve:
    n_grid: np.ndarray
    counts_exceeding: np.ndarray
    total_realizations: int
    p_params: dict = field(default_factory=dict)
    truncated_count: int = 0
    boundary_count: int = 0
    untruncated_count: int = 0
    untruncated_size_sum: int = 0
    size_cutoff: int | None = None

    @property
    def f_n(self) -> np.ndarray:
        return self.counts_exceeding / self.total_realizations

    def merge(self, other: "SurvivalCurve") -> "SurvivalCurve":
        if not np.array_equal(self.n_grid, other.n_grid):
            raise ValueError("cannot merge curves on different grids")
        return SurvivalCurve(
            self.n_grid.copy(),
            self.counts_exceeding + other.counts_exceeding,
            self.total_realizations + other.total_realizations,
            dict(self.p_params),
            self.truncated_count + other.truncated_count,
            self.boundary_count + other.boundary_count,
            self.untruncated_count + other.untruncated_count,
            self.untruncated_size_sum + other.untruncated_size_sum,
            self.size_cutoff,
        )

    def to_csv(self, header: dict | None = None) -> str:
        """``n,count,total,f_n`` rows, preceded by ``# key=value`` comment lines."""
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={json.dumps(value, sort_keys=True)}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "count", "total", "f_n"])
        for n, c, f in zip(self.n_grid, self.counts_exceeding, self.f_n):
            wr.writerow([int(n), int(c), self.total_realizations, repr(float(f))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SurvivalCurve":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(rows)
        data = list(reader)
        n = np.array([int(r["n"]) for r in data], dtype=np.int64)
        c = np.array([int(r["count"]) for r in data], dtype=np.int64)
        total = int(data[0]["total"]) if data else 0
        return cls(n, c, total)

    def to_dict(self) -> dict:
        return {
            "n": self.n_grid.tolist(), "count": self.counts_exceeding.tolist(),
            "total": self.total_realizations, "f_n": self.f_n.tolist(),
            "p_params": self.p_params, "truncated": self.truncated_count,
            "boundary_contact": self.boundary_count,
        }


def survival_from_records(records: RealizationRecords, limits: GrowthLimits,
                          exclude_boundary: bool = False) -> SurvivalCurve:
    """Tabulate ``F_n`` from per-realization records.

    With ``exclude_boundary`` (Model B), realizations whose cluster touched
    the lattice edge without being truncated are dropped from both the
    counts and the total.
    """
    size = records.size
    trunc = records.truncated
    keep = np.ones(size.shape[0], dtype=bool)
    if exclude_boundary:
        keep = ~(records.boundary_contact & ~trunc)
    size = size[keep]
    trunc = trunc[keep]
    grid = size_grid(limits.size_cutoff, size.max() if size.size else 1)
    # count(size > n) via a sorted search; truncated sizes are pushed to +inf
    eff = np.where(trunc, np.iinfo(np.int64).max, size)
    eff.sort()
    counts = eff.shape[0] - np.searchsorted(eff, grid, side="right")
    spec = records.spec
    params = {"kind": spec.kind.value}
    if spec.kind.is_a:
        params["p"] = spec.p
    else:
        params.update(p_plus=spec.p_plus, p_minus=spec.p_minus)
    return SurvivalCurve(
        grid, counts.astype(np.int64), int(size.shape[0]), params,
        truncated_count=int(trunc.sum()),
        boundary_count=int(records.boundary_contact[keep].sum()),
        untruncated_count=int((~trunc).sum()),
        untruncated_size_sum=int(size[~trunc].sum()),
        size_cutoff=limits.size_cutoff,
    )


def estimate_survival(spec: ModelSpec, master_seed, realizations: int,
                      limits: GrowthLimits = GrowthLimits(), source=None, workers: int = 1,
                      exclude_boundary: bool = False) -> SurvivalCurve:
    """Run ``realizations`` clusters and return their survival curve."""
    records = run_realizations(spec, master_seed, realizations, limits, source, workers)
    return survival_from_records(records, limits, exclude_boundary)


def estimate_f_infinity(curve: SurvivalCurve, limits: GrowthLimits | None = None,
                        confidence: float = 0.95) -> tuple[float, float, float]:
    """Fraction of truncated ("infinite") clusters with its Wilson interval."""
    if limits is not None and curve.size_cutoff != limits.size_cutoff:
        raise ParameterError("curve was computed with a different size cutoff")
    k, n = curve.truncated_count, curve.total_realizations
    ci = sps.binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return k / n, float(ci.low), float(ci.high)


def mean_cluster_size(curve: SurvivalCurve, max_truncated_fraction: float = 0.01) -> float:
    """Mean size of non-truncated clusters; refuses if truncation is not negligible."""
    if curve.total_realizations == 0 or curve.untruncated_count == 0:
        raise InsufficientDataError("no untruncated realizations")
    frac = curve.truncated_count / curve.total_realizations
    if frac > max_truncated_fraction:
        raise InsufficientDataError(
            f"{frac:.2%} of realizations truncated; raise the size cutoff"
        )
    return curve.untruncated_size_sum / curve.untruncated_count


def _loglog_fit(x, y):
    res = sps.linregress(np.log(x), np.log(y))
    return res.slope, res.stderr


def estimate_tau(curve: SurvivalCurve, fit_window=TAU_WINDOW, min_count: int = 100) -> Fit:
    """Fisher exponent from the log-log slope of ``F_n``: ``tau = 2 - slope``."""
    lo, hi = fit_window
    sel = (curve.n_grid >= lo) & (curve.n_grid <= hi) & (curve.counts_exceeding >= min_count)
    if sel.sum() < 5:
        raise InsufficientDataError(
            f"need >= 5 grid points with >= {min_count} counts in {fit_window}, have {int(sel.sum())}"
        )
    slope, se = _loglog_fit(curve.n_grid[sel], curve.f_n[sel])
    return Fit(2.0 - slope, float(se), (lo, hi), int(sel.sum()))


def _offset_fit(samples, p_c, window, sign, what):
    lo, hi = window
    pts = []
    for p, value in samples:
        d = sign * (p - p_c)
        if lo - 1e-12 <= d <= hi + 1e-12 and value > 0:
            pts.append((d, value))
    if len(pts) < 4:
        raise InsufficientDataError(f"need >= 4 usable points for {what} in {window}, have {len(pts)}")
    d, v = np.array(pts).T
    return _loglog_fit(d, v), len(pts)


def estimate_beta_direct(f_infinity_samples, p_c: float, fit_window=BETA_WINDOW) -> Fit:
    """Order-parameter exponent from ``F_inf ~ (p - p_c)^beta``."""
    (slope, se), k = _offset_fit(f_infinity_samples, p_c, fit_window, +1, "beta")
    return Fit(float(slope), float(se), tuple(fit_window), k)


def estimate_gamma(mean_sizes, p_c: float, fit_window=GAMMA_WINDOW) -> Fit:
    """Mean-size exponent from ``<n> ~ (p_c - p)^-gamma`` (subcritical points)."""
    (slope, se), k = _offset_fit(mean_sizes, p_c, fit_window, -1, "gamma")
    return Fit(float(-slope), float(se), tuple(fit_window), k)


def beta_from_scaling(tau, gamma):
    """``beta = (tau - 2) / (3 - tau) * gamma``; works on floats and Fractions."""
    if not 2 < tau < 3:
        raise DomainError(f"tau={tau} outside (2, 3)")
    return (tau - 2) / (3 - tau) * gamma


def beta_from_scaling_stderr(tau: float, gamma: float, tau_se: float, gamma_se: float) -> float:
    """First-order error propagation for :func:`beta_from_scaling`."""
    d_tau = gamma / (3.0 - tau) ** 2
    d_gamma = (tau - 2.0) / (3.0 - tau)
    return math.hypot(d_tau * tau_se, d_gamma * gamma_se)


@dataclass
class ExponentSet:
    tau: Fit
    beta: Fit
    gamma: Fit
    beta_scaling: float
    beta_scaling_se: float
    p_c: float
    p_params: dict = field(default_factory=dict)
    f_infinity: list = field(default_factory=list)
    mean_size: list = field(default_factory=list)
    skipped_gamma_points: list = field(default_factory=list)

    @property
    def flags(self) -> list[str]:
        out = []
        if not 2 < self.tau.value < 3:
            out.append("tau outside (2, 3)")
        if self.beta.value < 0:
            out.append("negative beta")
        if self.gamma.value < 0:
            out.append("negative gamma")
        return out

    def to_json(self, config: dict | None = None) -> str:
        doc = {
            "tau": self.tau.value,
            "beta_direct": self.beta.value,
            "beta_scaling": self.beta_scaling,
            "gamma": self.gamma.value,
            "windows": {"tau": list(self.tau.window), "beta": list(self.beta.window),
                        "gamma": list(self.gamma.window)},
            "std_errors": {"tau": self.tau.stderr, "beta_direct": self.beta.stderr,
                           "beta_scaling": self.beta_scaling_se, "gamma": self.gamma.stderr},
            "p_params": self.p_params,
            "p_c": self.p_c,
            "f_infinity": [list(x) for x in self.f_infinity],
            "mean_size": [list(x) for x in self.mean_size],
            "skipped_gamma_points": list(self.skipped_gamma_points),
            "flags": self.flags,
        }
        if config is not None:
            doc["config"] = config
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def default_offsets(window, points: int = 5) -> np.ndarray:
    """``points`` log-spaced offsets spanning ``window``."""
    return np.geomspace(window[0], window[1], points)


def measure_exponents(template: ModelSpec, varying: str, p_c: float, realizations: int,
                      limits: GrowthLimits = GrowthLimits(), master_seed=42,
                      tau_window=TAU_WINDOW, beta_window=BETA_WINDOW, gamma_window=GAMMA_WINDOW,
                      beta_offsets=None, gamma_offsets=None,
                      gamma_limits: GrowthLimits | None = None, workers: int = 1,
                      source=None) -> ExponentSet:
    """Fit tau at ``p_c``, beta above it and gamma below it.

    ``varying`` selects the probability moved off criticality (see
    :func:`percolab.models.with_probability`). Subcritical mean sizes use
    ``gamma_limits`` (default: ``limits`` with a 10x larger size cutoff) so
    that truncation stays below 1%.
    """
    beta_offsets = default_offsets(beta_window) if beta_offsets is None else beta_offsets
    gamma_offsets = default_offsets(gamma_window) if gamma_offsets is None else gamma_offsets
    if gamma_limits is None:
        cut = None if limits.size_cutoff is None else 10 * limits.size_cutoff
        gamma_limits = GrowthLimits(cut, limits.depth_cutoff)

    at_pc = with_probability(template, varying, p_c)
    curve = estimate_survival(at_pc, derive_seed(master_seed, 0), realizations, limits, source, workers)
    tau = estimate_tau(curve, tau_window)

    f_inf = []
    for i, d in enumerate(beta_offsets):
        p = p_c + float(d)
        c = estimate_survival(with_probability(template, varying, p), derive_seed(master_seed, 1, i),
                              realizations, limits, source, workers)
        f_inf.append((p, estimate_f_infinity(c)[0]))
    beta = estimate_beta_direct(f_inf, p_c, beta_window)

    sizes, skipped = [], []
    for i, d in enumerate(gamma_offsets):
        p = p_c - float(d)
        c = estimate_survival(with_probability(template, varying, p), derive_seed(master_seed, 2, i),
                              realizations, gamma_limits, source, workers)
        try:
            sizes.append((p, mean_cluster_size(c)))
        except InsufficientDataError:
            # too close to p_c for this lattice; the fit needs >= 4 survivors
            skipped.append(p)
    gamma = estimate_gamma(sizes, p_c, gamma_window)

    b_s = beta_from_scaling(tau.value, gamma.value)
    b_se = beta_from_scaling_stderr(tau.value, gamma.value, tau.stderr, gamma.stderr)
    params = {"kind": template.kind.value, "varying": varying}
    return ExponentSet(tau, beta, gamma, float(b_s), float(b_se), float(p_c), params, f_inf, sizes,
                       skipped)
