"""Directed cluster growth.

Model A clusters grow layer by layer from ``(source_column, 0)``; Model B
clusters are the out-reachable set of the source, found by breadth-first
search on the finite lattice. Both kernels draw placement variates lazily
from the counter-based stream, so a cluster grown here is exactly the
cluster of :func:`percolab.models.sample_configuration` under the same key,
without ever materializing the lattice.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .models import LEFT, RIGHT, UP, DOWN, VERTICAL_A, ModelKind, ModelSpec, ParameterError
from .rng import as_seed, placement_uniform, stream_key

__all__ = [
    "GrowthLimits",
    "ClusterResult",
    "RealizationRecords",
    "InsufficientDataError",
    "grow_cluster_A",
    "reach_cluster_B",
    "cluster_on_configuration",
    "grow_cluster",
    "run_realizations",
    "measure_cone_half_angle",
]

_NO_LIMIT = np.int64(np.iinfo(np.int64).max)


class InsufficientDataError(RuntimeError):
    """Not enough populated data for the requested estimate."""


@dataclass(frozen=True)
class GrowthLimits:
    """Growth cutoffs. ``None`` means unbounded (depth: the lattice depth)."""

    size_cutoff: int | None = 10**5
    depth_cutoff: int | None = None

    def __post_init__(self):
        for name in ("size_cutoff", "depth_cutoff"):
            value = getattr(self, name)
            if value is not None and int(value) <= 0:
                raise ParameterError(f"{name}={value} must be positive")

    @property
    def size_limit(self) -> int:
        return _NO_LIMIT if self.size_cutoff is None else np.int64(self.size_cutoff)


@dataclass
class ClusterResult:
    size: int
    max_depth: int
    truncated: bool
    boundary_contact: bool
    source: tuple[int, int]
    half_width_profile: np.ndarray | None = field(default=None, repr=False)
    sites: frozenset | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# kernels

@nb.njit(cache=True, nogil=True)
def _grow_a(key, ea, p, width, last_layer, src, size_limit, cur, nxt, ufield, profile, sites):
    """Layer-by-layer growth. Scratch ``cur``/``nxt`` must be zero and are left zero.

    Returns ``(size, max_depth, truncated, boundary_contact, n_sites)``.
    """
    use_field = ufield.shape[1] > 0
    keep_profile = profile.shape[0] > 0
    keep_sites = sites.shape[0] > 0
    reach = 1 if ea else 0
    cur[src] = 1
    lo = src
    hi = src
    size = 1
    n_sites = 0
    if keep_sites:
        sites[0] = src
        n_sites = 1
    if keep_profile:
        profile[0, 0] = src
        profile[0, 1] = src
    boundary = src == 0 or src == width - 1
    truncated = False
    alive = True
    t = 0
    while t < last_layer:
        a = max(lo - reach, 0)
        b = min(hi + reach, width - 1)
        nlo = width
        nhi = -1
        count = 0
        for j in range(a, b + 1):
            hit = cur[j] != 0
            if ea and not hit:
                hit = (j > 0 and cur[j - 1] != 0) or (j < width - 1 and cur[j + 1] != 0)
            if hit:
                u = ufield[0, j, t] if use_field else placement_uniform(key, j, t, VERTICAL_A)
                if u < p:
                    nxt[j] = 1
                    count += 1
                    if j < nlo:
                        nlo = j
                    nhi = j
                    if keep_sites:
                        sites[n_sites] = (t + 1) * width + j
                        n_sites += 1
        for j in range(lo, hi + 1):
            cur[j] = 0
        if count == 0:
            alive = False
            break
        tmp = cur
        cur = nxt
        nxt = tmp
        lo = nlo
        hi = nhi
        t += 1
        size += count
        if keep_profile:
            profile[t, 0] = lo
            profile[t, 1] = hi
        if lo == 0 or hi == width - 1:
            boundary = True
        if size > size_limit:
            truncated = True
            break
    if alive:
        for j in range(lo, hi + 1):
            cur[j] = 0
        if t == last_layer:
            truncated = True
            boundary = True
    return size, t, truncated, boundary, n_sites


_DX = np.array([0, 1, 0, -1], dtype=np.int64)
_DY = np.array([1, 0, -1, 0], dtype=np.int64)


@nb.njit(cache=True, nogil=True)
def _reach_b(key, ea, p_plus, p_minus, w, h, sx, sy, size_limit, visited, queue, ufield):
    """Breadth-first out-reachable set. ``visited`` must be zero and is left zero.

    Visited site indices ``x * h + y`` are left in ``queue[:size]``.
    Returns ``(size, max_depth, truncated, boundary_contact)``.
    """
    use_field = ufield.shape[1] > 0
    start = sx * h + sy
    visited[start] = 1
    queue[0] = start
    n = 1
    head = 0
    level_end = 1
    depth = 0
    truncated = False
    boundary = False
    while head < n and not truncated:
        s = queue[head]
        head += 1
        x = s // h
        y = s - x * h
        if x == 0 or y == 0 or x == w - 1 or y == h - 1:
            boundary = True
        for o in range(4):
            dx = _DX[o]
            dy = _DY[o]
            po = p_plus if o == UP or o == RIGHT else p_minus
            if po <= 0.0:
                continue
            hx = x + dx
            hy = y + dy
            if 0 <= hx < w and 0 <= hy < h:
                t = hx * h + hy
                if visited[t] == 0:
                    u = ufield[o, x, y] if use_field else placement_uniform(key, x, y, o)
                    if u < po:
                        visited[t] = 1
                        queue[n] = t
                        n += 1
                        if n > size_limit:
                            truncated = True
                            break
            if ea:
                ex = -dy
                ey = dx
                for sgn in (1, -1):
                    tx = x - sgn * ex
                    ty = y - sgn * ey
                    hx = tx + dx
                    hy = ty + dy
                    if 0 <= tx < w and 0 <= ty < h and 0 <= hx < w and 0 <= hy < h:
                        t = hx * h + hy
                        if visited[t] == 0:
                            u = ufield[o, tx, ty] if use_field else placement_uniform(key, tx, ty, o)
                            if u < po:
                                visited[t] = 1
                                queue[n] = t
                                n += 1
                                if n > size_limit:
                                    truncated = True
                                    break
                if truncated:
                    break
        if head == level_end and head < n:
            depth += 1
            level_end = n
    # sites enqueued but never expanded may still touch the edge
    for i in range(head, n):
        s = queue[i]
        x = s // h
        y = s - x * h
        if x == 0 or y == 0 or x == w - 1 or y == h - 1:
            boundary = True
    if n > level_end:
        depth += 1
    for i in range(n):
        visited[queue[i]] = 0
    return n, depth, truncated, boundary


_EMPTY_FIELD = np.zeros((1, 0, 0))
_EMPTY_PROFILE = np.zeros((0, 2), dtype=np.int64)
_EMPTY_SITES = np.zeros(0, dtype=np.int64)


@nb.njit(cache=True, nogil=True)
def _batch_a(master, start, ea, p, width, last_layer, src, size_limit, size, depth, trunc, bnd):
    cur = np.zeros(width, dtype=np.uint8)
    nxt = np.zeros(width, dtype=np.uint8)
    ufield = np.zeros((1, 0, 0))
    profile = np.zeros((0, 2), dtype=np.int64)
    sites = np.zeros(0, dtype=np.int64)
    for i in range(size.shape[0]):
        key = stream_key(master, np.uint64(start + i))
        r = _grow_a(key, ea, p, width, last_layer, src, size_limit, cur, nxt, ufield, profile, sites)
        size[i] = r[0]
        depth[i] = r[1]
        trunc[i] = r[2]
        bnd[i] = r[3]


@nb.njit(cache=True, nogil=True)
def _batch_b(master, start, ea, pp, pm, w, h, sx, sy, size_limit, size, depth, trunc, bnd):
    visited = np.zeros(w * h, dtype=np.uint8)
    queue = np.zeros(w * h if size_limit >= w * h else size_limit + 1, dtype=np.int64)
    ufield = np.zeros((1, 0, 0))
    for i in range(size.shape[0]):
        key = stream_key(master, np.uint64(start + i))
        r = _reach_b(key, ea, pp, pm, w, h, sx, sy, size_limit, visited, queue, ufield)
        size[i] = r[0]
        depth[i] = r[1]
        trunc[i] = r[2]
        bnd[i] = r[3]


# ---------------------------------------------------------------------------
# single clusters

def _last_layer(spec: ModelSpec, limits: GrowthLimits) -> int:
    if limits.depth_cutoff is None:
        return spec.depth
    return min(spec.depth, int(limits.depth_cutoff))


def _field(uniforms):
    if uniforms is None:
        return _EMPTY_FIELD
    return np.ascontiguousarray(uniforms, dtype=np.float64)


def grow_cluster_A(spec: ModelSpec, seed, source_column: int | None = None,
                   limits: GrowthLimits = GrowthLimits(), return_sites: bool = False,
                   uniforms: np.ndarray | None = None) -> ClusterResult:
    """Grow a Model A cluster from ``(source_column, 0)`` under stream ``seed``.

    A cluster still alive at the last layer (the lattice depth or
    ``limits.depth_cutoff``) is flagged truncated and boundary-contacting,
    as is one whose size exceeds ``limits.size_cutoff``.
    """
    if not spec.kind.is_a:
        raise ParameterError(f"grow_cluster_A needs a Model A spec, got {spec.kind.value}")
    src = spec.width // 2 if source_column is None else int(source_column)
    if not 0 <= src < spec.width:
        raise ParameterError(f"source column {src} outside lattice")
    last = _last_layer(spec, limits)
    cur = np.zeros(spec.width, dtype=np.uint8)
    nxt = np.zeros(spec.width, dtype=np.uint8)
    profile = np.full((last + 1, 2), -1, dtype=np.int64)
    if return_sites:
        cap = min(spec.width * (last + 1), int(limits.size_limit) + spec.width + 1)
        sites = np.zeros(cap, dtype=np.int64)
    else:
        sites = _EMPTY_SITES
    size, depth, trunc, bnd, n_sites = _grow_a(
        as_seed(seed), spec.kind.is_ea, spec.p, spec.width, last, src,
        limits.size_limit, cur, nxt, _field(uniforms), profile, sites,
    )
    members = None
    if return_sites:
        members = frozenset((int(s % spec.width), int(s // spec.width)) for s in sites[:n_sites])
    return ClusterResult(int(size), int(depth), bool(trunc), bool(bnd), (src, 0),
                         profile[: depth + 1].copy(), members)


def reach_cluster_B(spec: ModelSpec, seed, source=None, limits: GrowthLimits = GrowthLimits(),
                    return_sites: bool = False, uniforms: np.ndarray | None = None) -> ClusterResult:
    """Out-reachable set of ``source`` (default: lattice centre) under stream ``seed``."""
    if spec.kind.is_a:
        raise ParameterError(f"reach_cluster_B needs a Model B spec, got {spec.kind.value}")
    w, h = spec.shape
    source = spec.default_source() if source is None else tuple(int(c) for c in source)
    if not spec.contains(source):
        raise ParameterError(f"source {source} outside the {w}x{h} lattice")
    visited = np.zeros(w * h, dtype=np.uint8)
    queue = np.zeros(min(w * h, int(limits.size_limit) + 1), dtype=np.int64)
    size, depth, trunc, bnd = _reach_b(
        as_seed(seed), spec.kind.is_ea, spec.p_plus, spec.p_minus, w, h,
        source[0], source[1], limits.size_limit, visited, queue, _field(uniforms),
    )
    members = None
    if return_sites:
        members = frozenset((int(s // h), int(s % h)) for s in queue[:size])
    return ClusterResult(int(size), int(depth), bool(trunc), bool(bnd), source, None, members)


def grow_cluster(spec: ModelSpec, seed, source=None, limits: GrowthLimits = GrowthLimits(),
                 return_sites: bool = False, uniforms=None) -> ClusterResult:
    """Dispatch to the Model A or Model B engine."""
    if spec.kind.is_a:
        col = None if source is None else (source[0] if isinstance(source, tuple) else source)
        return grow_cluster_A(spec, seed, col, limits, return_sites, uniforms)
    return reach_cluster_B(spec, seed, source, limits, return_sites, uniforms)


def cluster_on_configuration(config, source=None,
                             limits: GrowthLimits = GrowthLimits(size_cutoff=None)) -> ClusterResult:
    """Run the engine kernel on a fixed, already sampled configuration."""
    spec = config.spec
    # active placements -> variates that pass/fail any threshold in (0, 1]
    field_ = np.where(config.active, -1.0, 2.0)
    forced = spec.replace(p=0.5, p_plus=0.5, p_minus=0.5)
    return grow_cluster(forced, 0, source, limits, return_sites=True, uniforms=field_)


# ---------------------------------------------------------------------------
# realization driver

@dataclass
class RealizationRecords:
    """Per-realization outcomes, indexed from ``start``."""

    spec: ModelSpec
    master_seed: int
    start: int
    size: np.ndarray
    max_depth: np.ndarray
    truncated: np.ndarray
    boundary_contact: np.ndarray

    def __len__(self):
        return self.size.shape[0]

    def write_csv(self, path_or_file):
        """Write ``realization,size,max_depth,truncated,boundary_contact`` rows."""
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["realization", "size", "max_depth", "truncated", "boundary_contact"])
            for i in range(len(self)):
                wr.writerow([self.start + i, int(self.size[i]), int(self.max_depth[i]),
                             int(self.truncated[i]), int(self.boundary_contact[i])])
        finally:
            if own:
                fh.close()

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        return cls(parts[0].spec, parts[0].master_seed, parts[0].start,
                   np.concatenate([p.size for p in parts]),
                   np.concatenate([p.max_depth for p in parts]),
                   np.concatenate([p.truncated for p in parts]),
                   np.concatenate([p.boundary_contact for p in parts]))


def _run_chunk(spec, master, start, count, limits, source):
    size = np.zeros(count, dtype=np.int64)
    depth = np.zeros(count, dtype=np.int64)
    trunc = np.zeros(count, dtype=np.bool_)
    bnd = np.zeros(count, dtype=np.bool_)
    if spec.kind.is_a:
        src = spec.width // 2 if source is None else int(source[0] if isinstance(source, tuple) else source)
        if not 0 <= src < spec.width:
            raise ParameterError(f"source column {src} outside lattice")
        _batch_a(master, start, spec.kind.is_ea, spec.p, spec.width, _last_layer(spec, limits),
                 src, limits.size_limit, size, depth, trunc, bnd)
    else:
        sx, sy = spec.default_source() if source is None else source
        if not spec.contains((sx, sy)):
            raise ParameterError(f"source {(sx, sy)} outside lattice")
        w, h = spec.shape
        _batch_b(master, start, spec.kind.is_ea, spec.p_plus, spec.p_minus, w, h, sx, sy,
                 limits.size_limit, size, depth, trunc, bnd)
    return RealizationRecords(spec, int(master), start, size, depth, trunc, bnd)


def run_realizations(spec: ModelSpec, master_seed, realizations: int,
                     limits: GrowthLimits = GrowthLimits(), source=None,
                     workers: int = 1, start: int = 0) -> RealizationRecords:
    """Grow ``realizations`` independent clusters.

    Realization ``i`` uses stream ``stream_key(master_seed, start + i)``;
    the index range is split into contiguous chunks, one per worker thread,
    so results do not depend on ``workers``.
    """
    if realizations < 1:
        raise ParameterError("realizations must be >= 1")
    master = as_seed(master_seed)
    workers = max(1, min(int(workers), realizations))
    bounds = np.linspace(0, realizations, workers + 1).astype(int)
    chunks = [(start + int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(chunks) == 1:
        return _run_chunk(spec, master, chunks[0][0], chunks[0][1], limits, source)
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: _run_chunk(spec, master, c[0], c[1], limits, source), chunks))
    return RealizationRecords.concatenate(parts)


# ---------------------------------------------------------------------------
# anisotropy

def measure_cone_half_angle(results, depth_window) -> tuple[float, float]:
    """Cone half-angle of Model A clusters, with its standard error.

    For clusters that reach the end of ``depth_window = (t0, t1)``, the
    largest column offset from the source at layer ``t`` is divided by
    ``t`` and averaged over the window; the angle is the arctangent of the
    mean over clusters.
    """
    t0, t1 = int(depth_window[0]), int(depth_window[1])
    if t0 < 1 or t1 < t0:
        raise ParameterError(f"bad depth window {depth_window}")
    ts = np.arange(t0, t1 + 1)
    ratios = []
    for r in results:
        if r.half_width_profile is None or r.max_depth < t1:
            continue
        prof = r.half_width_profile[ts]
        offset = np.maximum(np.abs(prof[:, 0] - r.source[0]), np.abs(prof[:, 1] - r.source[0]))
        ratios.append(float(np.mean(offset / ts)))
    if not ratios:
        raise InsufficientDataError(f"no cluster reaches depth {t1}")
    ratios = np.asarray(ratios)
    mean = ratios.mean()
    se = ratios.std(ddof=1) / math.sqrt(len(ratios)) if len(ratios) > 1 else 0.0
    return float(math.atan(mean)), float(se / (1.0 + mean**2))
