"""Exact reference distributions by brute-force enumeration.

Every subset of placements on a tiny lattice is weighted by its
probability and its cluster is found by a depth-first search over the
bonds listed by :func:`percolab.models.activated_bonds`. Nothing here
touches the engine kernels, which makes it an independent check of them.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .engine import _NO_LIMIT, _grow_a, _reach_b, cluster_on_configuration
from .models import (ModelSpec, ParameterError, activated_bonds, configuration_from_active,
                     placement_mask)
from .rng import as_seed, stream_key

__all__ = [
    "ExactDistribution",
    "OracleReport",
    "SizeLimitError",
    "enumerate_exact",
    "compare_mc_to_oracle",
    "engine_mismatches",
    "MAX_PLACEMENTS",
]

MAX_PLACEMENTS = 20


class SizeLimitError(ParameterError):
    """Too many placements to enumerate."""


def _placements(spec: ModelSpec):
    """``(index, (k, x, y), probability, bonds)`` for every placement slot."""
    mask = placement_mask(spec)
    out = []
    for k, code in enumerate(spec.orientation_codes):
        prob = spec.orientation_probability(code)
        for x, y in zip(*np.nonzero(mask[k])):
            x, y = int(x), int(y)
            bonds = [(b.tail, b.head) for b in activated_bonds(spec.kind, (x, y), code)
                     if spec.contains(b.tail) and spec.contains(b.head)]
            out.append(((k, x, y), prob, bonds))
    return out


def _dfs(adj, source):
    seen = {source}
    stack = [source]
    while stack:
        s = stack.pop()
        for t in adj.get(s, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


@dataclass
class ExactDistribution:
    spec: ModelSpec
    source: tuple
    size_pmf: dict
    reach_prob: dict

    def exceed_prob(self, n: int) -> float:
        return math.fsum(p for s, p in self.size_pmf.items() if s > n)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "source": list(self.source),
            "size_pmf": {str(k): v for k, v in sorted(self.size_pmf.items())},
            "reach_prob": {f"{x},{y}": v for (x, y), v in sorted(self.reach_prob.items())},
        }


def _source(spec, source):
    src = spec.default_source() if source is None else tuple(int(c) for c in source)
    if not spec.contains(src):
        raise ParameterError(f"source {src} outside lattice")
    return src


def _subsets(spec: ModelSpec, source, max_placements: int):
    slots = _placements(spec)
    m = len(slots)
    if m > max_placements:
        raise SizeLimitError(f"{m} placements exceed the enumeration limit {max_placements}")
    for bits in range(1 << m):
        weight = 1.0
        adj = defaultdict(list)
        active = []
        for j, (slot, prob, bonds) in enumerate(slots):
            if bits >> j & 1:
                weight *= prob
                active.append(slot)
                for tail, head in bonds:
                    adj[tail].append(head)
            else:
                weight *= 1.0 - prob
        yield weight, active, _dfs(adj, source)


def enumerate_exact(spec: ModelSpec, source=None, max_placements: int = MAX_PLACEMENTS) -> ExactDistribution:
    """Exact cluster-size pmf and per-site reach probabilities."""
    src = _source(spec, source)
    by_size = defaultdict(list)
    by_site = defaultdict(list)
    for weight, _, cluster in _subsets(spec, src, max_placements):
        if weight == 0.0:
            continue
        by_size[len(cluster)].append(weight)
        for site in cluster:
            by_site[site].append(weight)
    size_pmf = {s: math.fsum(w) for s, w in sorted(by_size.items())}
    reach = {site: math.fsum(w) for site, w in sorted(by_site.items())}
    return ExactDistribution(spec, src, size_pmf, reach)


def engine_mismatches(spec: ModelSpec, source=None, max_placements: int = MAX_PLACEMENTS) -> int:
    """Number of enumerated configurations where the engine's cluster differs."""
    src = _source(spec, source)
    mask = placement_mask(spec)
    bad = 0
    for _, active_slots, cluster in _subsets(spec, src, max_placements):
        active = np.zeros_like(mask)
        for k, x, y in active_slots:
            active[k, x, y] = True
        config = configuration_from_active(spec, active)
        result = cluster_on_configuration(config, src)
        if result.sites != frozenset(cluster) or result.size != len(cluster):
            bad += 1
    return bad


def _mc_hits(spec: ModelSpec, source, realizations: int, master_seed):
    """Per-site hit counts and sizes from the engine kernels."""
    w, h = spec.shape
    hits = np.zeros((w, h), dtype=np.int64)
    sizes = np.zeros(realizations, dtype=np.int64)
    master = as_seed(master_seed)
    no_field = np.zeros((1, 0, 0))
    if spec.kind.is_a:
        cur = np.zeros(w, dtype=np.uint8)
        nxt = np.zeros(w, dtype=np.uint8)
        prof = np.zeros((0, 2), dtype=np.int64)
        buf = np.zeros(w * h, dtype=np.int64)
        for i in range(realizations):
            r = _grow_a(np.uint64(stream_key(master, np.uint64(i))), spec.kind.is_ea, spec.p, w, spec.depth,
                        source[0], _NO_LIMIT, cur, nxt, no_field, prof, buf)
            sizes[i] = r[0]
            s = buf[: r[4]]
            np.add.at(hits, (s % w, s // w), 1)
    else:
        visited = np.zeros(w * h, dtype=np.uint8)
        queue = np.zeros(w * h, dtype=np.int64)
        for i in range(realizations):
            r = _reach_b(np.uint64(stream_key(master, np.uint64(i))), spec.kind.is_ea, spec.p_plus,
                         spec.p_minus, w, h, source[0], source[1], _NO_LIMIT,
                         visited, queue, no_field)
            sizes[i] = r[0]
            s = queue[: r[0]]
            np.add.at(hits, (s // h, s % h), 1)
    return hits, sizes


def _z(observed: int, total: int, prob: float) -> float:
    sigma = math.sqrt(prob * (1.0 - prob) / total)
    diff = observed / total - prob
    if sigma == 0.0:
        return 0.0 if abs(diff) < 1e-15 else math.copysign(math.inf, diff)
    return diff / sigma


@dataclass
class OracleReport:
    exact: ExactDistribution
    realizations: int
    size_z: dict = field(default_factory=dict)
    reach_z: dict = field(default_factory=dict)
    threshold: float = 4.0

    @property
    def max_abs_z(self) -> float:
        zs = [abs(z) for z in list(self.size_z.values()) + list(self.reach_z.values())]
        return max(zs) if zs else 0.0

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.threshold

    def to_json(self, config: dict | None = None) -> str:
        doc = self.exact.to_dict()
        doc["mc_z_scores"] = {
            "size_exceeds": {str(k): v for k, v in sorted(self.size_z.items())},
            "reach": {f"{x},{y}": v for (x, y), v in sorted(self.reach_z.items())},
            "realizations": self.realizations,
            "max_abs_z": self.max_abs_z,
            "passed": self.passed,
        }
        if config is not None:
            doc["config"] = config
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def compare_mc_to_oracle(spec: ModelSpec, source=None, realizations: int = 10**5,
                         master_seed=42, threshold: float = 4.0) -> OracleReport:
    """Binomial z-scores of Monte Carlo frequencies against exact enumeration.

    Covers ``P(size > n)`` for every ``n`` below the largest possible size
    and the reach probability of every lattice site.
    """
    exact = enumerate_exact(spec, source)
    src = exact.source
    hits, sizes = _mc_hits(spec, src, realizations, master_seed)
    max_size = max(exact.size_pmf)
    size_z = {}
    for n in range(1, max(max_size, int(sizes.max()))):
        size_z[n] = _z(int((sizes > n).sum()), realizations, exact.exceed_prob(n))
    reach_z = {}
    w, h = spec.shape
    for x in range(w):
        for y in range(h):
            reach_z[(x, y)] = _z(int(hits[x, y]), realizations, exact.reach_prob.get((x, y), 0.0))
    return OracleReport(exact, realizations, size_z, reach_z, threshold)
