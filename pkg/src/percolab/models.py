"""Lattice models and bond-configuration sampling.

Four processes are supported:

``A_CLASSICAL`` / ``A_EA``
    Layered network. Sites are ``(column, layer)``; each vertical position
    ``(i, t)`` with ``t < depth`` carries one placement, active with
    probability ``p``. Classically it opens ``(i, t) -> (i, t+1)``; with
    entanglement assistance it opens the arrow triple converging on
    ``(i, t+1)`` from ``(i-1, t)``, ``(i, t)`` and ``(i+1, t)``.
``B_CLASSICAL`` / ``B_EA``
    Randomly oriented square lattice. Every main bond carries two
    placements, one per direction; up/right placements are active with
    ``p_plus``, down/left ones with ``p_minus``. The EA variant adds the two
    diagonal bonds from the lateral neighbours of the tail into the head.

A placement is identified by its tail site and orientation, and is active
iff its counter-based uniform variate is below the relevant probability.
Sharing variates across models and probabilities gives the monotone and
classical-within-EA couplings for free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .rng import as_seed, placement_uniform

__all__ = [
    "ModelKind",
    "ModelSpec",
    "DirectedBond",
    "BondConfiguration",
    "ParameterError",
    "ORIENTATIONS",
    "activated_bonds",
    "placement_uniforms",
    "placement_mask",
    "configuration_from_active",
    "sample_configuration",
    "parse_dump",
    "with_probability",
]


class ParameterError(ValueError):
    """Invalid model, lattice or growth parameter."""


class ModelKind(enum.Enum):
    A_CLASSICAL = "a-classical"
    A_EA = "a-ea"
    B_CLASSICAL = "b-classical"
    B_EA = "b-ea"

    @property
    def is_a(self) -> bool:
        return self in (ModelKind.A_CLASSICAL, ModelKind.A_EA)

    @property
    def is_ea(self) -> bool:
        return self in (ModelKind.A_EA, ModelKind.B_EA)

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for kind in cls:
            if key in (kind.value, kind.name.lower().replace("_", "-")):
                return kind
        raise ParameterError(f"unknown model kind {value!r}")


# Orientation codes double as the counter field of the placement uniforms.
UP, RIGHT, DOWN, LEFT, VERTICAL_A = 0, 1, 2, 3, 4

ORIENTATIONS = {
    "up": (UP, (0, 1)),
    "right": (RIGHT, (1, 0)),
    "down": (DOWN, (0, -1)),
    "left": (LEFT, (-1, 0)),
    "vertical-A": (VERTICAL_A, (0, 1)),
}
_ORIENT_NAMES = {code: name for name, (code, _) in ORIENTATIONS.items()}
_VEC = {code: vec for _, (code, vec) in ORIENTATIONS.items()}

# Bond directions stored in BondConfiguration.open_bonds, per model family.
A_DIRECTIONS = ((-1, 1), (0, 1), (1, 1))
B_DIRECTIONS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, -1), (-1, 1))


def _check_prob(name, value):
    if not (0.0 <= value <= 1.0):
        raise ParameterError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class ModelSpec:
    """Which process is simulated, with its probabilities and extents.

    ``width`` is the Model A column count or the Model B lattice side ``L``.
    ``depth`` is the Model A layer count ``T`` (the lattice then has
    ``T + 1`` rows of sites). ``height`` optionally makes a Model B lattice
    rectangular (``width x height``); it defaults to ``width``.
    """

    kind: ModelKind
    p: float = 0.0
    p_plus: float = 0.0
    p_minus: float = 0.0
    width: int = 512
    depth: int = 512
    height: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        for name in ("p", "p_plus", "p_minus"):
            value = float(getattr(self, name))
            _check_prob(name, value)
            object.__setattr__(self, name, value)
        if int(self.width) < 3:
            raise ParameterError(f"width={self.width} must be >= 3")
        if int(self.depth) < 1:
            raise ParameterError(f"depth={self.depth} must be >= 1")
        if self.height is not None and int(self.height) < 1:
            raise ParameterError(f"height={self.height} must be >= 1")
        if max(self.width, self.depth, self.height or 0) >= 1 << 24:
            raise ParameterError("lattice extents must be < 2**24")

    @property
    def rows(self) -> int:
        """Number of site rows (layers for A, lattice height for B)."""
        if self.kind.is_a:
            return self.depth + 1
        return self.height if self.height is not None else self.width

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.rows)

    @property
    def orientation_codes(self) -> tuple[int, ...]:
        return (VERTICAL_A,) if self.kind.is_a else (UP, RIGHT, DOWN, LEFT)

    @property
    def directions(self) -> tuple[tuple[int, int], ...]:
        return A_DIRECTIONS if self.kind.is_a else B_DIRECTIONS

    def orientation_probability(self, code: int) -> float:
        if code == VERTICAL_A:
            return self.p
        return self.p_plus if code in (UP, RIGHT) else self.p_minus

    def default_source(self) -> tuple[int, int]:
        if self.kind.is_a:
            return (self.width // 2, 0)
        return (self.width // 2, self.rows // 2)

    def contains(self, site) -> bool:
        x, y = site
        return 0 <= x < self.width and 0 <= y < self.rows

    def n_placements(self) -> int:
        return int(placement_mask(self).sum())

    def replace(self, **changes) -> "ModelSpec":
        values = dict(
            kind=self.kind, p=self.p, p_plus=self.p_plus, p_minus=self.p_minus,
            width=self.width, depth=self.depth, height=self.height,
        )
        values.update(changes)
        return ModelSpec(**values)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value, "p": self.p, "p_plus": self.p_plus,
            "p_minus": self.p_minus, "width": self.width, "depth": self.depth,
            "height": self.height,
        }


@dataclass(frozen=True, order=True)
class DirectedBond:
    tail: tuple[int, int]
    head: tuple[int, int]

    def __post_init__(self):
        dx = self.head[0] - self.tail[0]
        dy = self.head[1] - self.tail[1]
        if max(abs(dx), abs(dy)) != 1:
            raise ParameterError(f"{self.tail}->{self.head} is not a (next-)nearest-neighbour bond")


def _orientation_code(kind: ModelKind, orientation) -> int:
    if isinstance(orientation, str):
        name = "vertical-A" if orientation.lower() in ("vertical", "vertical-a") else orientation.lower()
        if name not in ORIENTATIONS:
            raise ParameterError(f"unknown orientation {orientation!r}")
        code = ORIENTATIONS[name][0]
    else:
        code = int(orientation)
    allowed = (VERTICAL_A,) if kind.is_a else (UP, RIGHT, DOWN, LEFT)
    if code not in allowed:
        raise ParameterError(f"orientation {orientation!r} invalid for {kind.value}")
    return code


def with_probability(spec: ModelSpec, varying: str, value: float) -> ModelSpec:
    """Copy of ``spec`` with the ``varying`` parameter set to ``value``.

    ``varying`` is ``"p"``, ``"p_plus"``, ``"p_minus"`` or ``"diagonal"``
    (``p_plus = p_minus = value``).
    """
    if varying == "diagonal":
        return spec.replace(p_plus=value, p_minus=value)
    if varying not in ("p", "p_plus", "p_minus"):
        raise ParameterError(f"unknown varying parameter {varying!r}")
    return spec.replace(**{varying: value})


def activated_bonds(kind, placement_site, orientation) -> list[DirectedBond]:
    """Bonds opened by one active placement, on the unbounded lattice.

    ``placement_site`` is the tail of the placement's main bond. The EA
    variants add the two bonds entering the head from the tail's lateral
    neighbours (perpendicular to the main bond).
    """
    kind = ModelKind.parse(kind)
    code = _orientation_code(kind, orientation)
    dx, dy = _VEC[code]
    x, y = placement_site
    head = (x + dx, y + dy)
    bonds = [DirectedBond((x, y), head)]
    if kind.is_ea:
        ex, ey = -dy, dx
        bonds.append(DirectedBond((x - ex, y - ey), head))
        bonds.append(DirectedBond((x + ex, y + ey), head))
    return sorted(bonds)


def placement_mask(spec: ModelSpec) -> np.ndarray:
    """Boolean ``(n_orient, width, rows)`` mask of placements that exist."""
    w, h = spec.shape
    codes = spec.orientation_codes
    mask = np.zeros((len(codes), w, h), dtype=bool)
    xs = np.arange(w)[:, None]
    ys = np.arange(h)[None, :]
    for k, code in enumerate(codes):
        dx, dy = _VEC[code]
        mask[k] = (xs + dx >= 0) & (xs + dx < w) & (ys + dy >= 0) & (ys + dy < h)
    return mask


@nb.njit(cache=True, nogil=True)
def _fill_uniforms(key, codes, w, h):
    out = np.empty((codes.shape[0], w, h))
    for k in range(codes.shape[0]):
        for x in range(w):
            for y in range(h):
                out[k, x, y] = placement_uniform(key, x, y, codes[k])
    return out


def placement_uniforms(spec: ModelSpec, key) -> np.ndarray:
    """The uniform variate of every placement slot under stream ``key``."""
    codes = np.array(spec.orientation_codes, dtype=np.int64)
    return _fill_uniforms(as_seed(key), codes, spec.width, spec.rows)


def _shift_or(dst, src, sx, sy):
    """``dst[x + sx, y + sy] |= src[x, y]`` wherever both indices are in range."""
    w, h = src.shape
    xs0, xs1 = max(0, -sx), min(w, w - sx)
    ys0, ys1 = max(0, -sy), min(h, h - sy)
    if xs0 < xs1 and ys0 < ys1:
        dst[xs0 + sx:xs1 + sx, ys0 + sy:ys1 + sy] |= src[xs0:xs1, ys0:ys1]


@dataclass(frozen=True)
class BondConfiguration:
    """One realization of open directed bonds.

    ``open_bonds[k, x, y]`` is true when the bond from ``(x, y)`` along
    ``spec.directions[k]`` is open. ``active`` records the active placements
    (indexed like :func:`placement_mask`).
    """

    spec: ModelSpec
    seed: int
    open_bonds: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)
    placement_count: dict = field(default_factory=dict)

    def is_open(self, tail, head) -> bool:
        d = (head[0] - tail[0], head[1] - tail[1])
        if d not in self.spec.directions:
            return False
        if not (self.spec.contains(tail) and self.spec.contains(head)):
            return False
        return bool(self.open_bonds[self.spec.directions.index(d), tail[0], tail[1]])

    def bonds(self) -> list[DirectedBond]:
        out = []
        for k, (dx, dy) in enumerate(self.spec.directions):
            for x, y in zip(*np.nonzero(self.open_bonds[k])):
                out.append(DirectedBond((int(x), int(y)), (int(x) + dx, int(y) + dy)))
        return sorted(out)

    def successors(self, site):
        x, y = site
        for k, (dx, dy) in enumerate(self.spec.directions):
            if self.open_bonds[k, x, y]:
                yield (x + dx, y + dy)

    def dump(self) -> str:
        """Plain-text dump: a header line then sorted ``tx ty hx hy`` lines."""
        s = self.spec
        lines = [
            f"model {s.kind.value} {self.seed} {s.width} {s.depth if s.kind.is_a else s.rows} "
            f"{s.p!r} {s.p_plus!r} {s.p_minus!r}"
        ]
        lines += [f"{b.tail[0]} {b.tail[1]} {b.head[0]} {b.head[1]}" for b in self.bonds()]
        return "\n".join(lines) + "\n"


def parse_dump(text: str) -> tuple[dict, list[DirectedBond]]:
    """Inverse of :meth:`BondConfiguration.dump` (header fields and bonds)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tag, kind, seed, width, depth, p, pp, pm = lines[0].split()
    if tag != "model":
        raise ValueError("not a configuration dump")
    header = dict(kind=kind, seed=int(seed), width=int(width), depth=int(depth),
                  p=float(p), p_plus=float(pp), p_minus=float(pm))
    bonds = []
    for ln in lines[1:]:
        tx, ty, hx, hy = map(int, ln.split())
        bonds.append(DirectedBond((tx, ty), (hx, hy)))
    return header, bonds


def configuration_from_active(spec: ModelSpec, active: np.ndarray, seed: int = 0) -> BondConfiguration:
    """Open bonds generated by a given set of active placements."""
    mask = placement_mask(spec)
    active = np.asarray(active, dtype=bool) & mask
    w, h = spec.shape
    dirs = spec.directions
    open_bonds = np.zeros((len(dirs), w, h), dtype=bool)
    counts = {}
    for k, code in enumerate(spec.orientation_codes):
        dx, dy = _VEC[code]
        act = active[k]
        counts[_ORIENT_NAMES[code]] = int(act.sum())
        open_bonds[dirs.index((dx, dy))] |= act
        if spec.kind.is_ea:
            ex, ey = -dy, dx
            for sx, sy in ((ex, ey), (-ex, -ey)):
                # tail of the diagonal is placement tail + (sx, sy)
                _shift_or(open_bonds[dirs.index((dx - sx, dy - sy))], act, sx, sy)
    return BondConfiguration(spec, int(seed), open_bonds, active, counts)


def sample_configuration(spec: ModelSpec, seed, uniforms: np.ndarray | None = None) -> BondConfiguration:
    """Sample the bond configuration of stream ``seed``.

    ``seed`` is used directly as the stream key, so this agrees placement
    for placement with the lazy cluster kernels run under the same key.
    ``uniforms`` overrides the variates (shape as :func:`placement_mask`).
    """
    if uniforms is None:
        uniforms = placement_uniforms(spec, seed)
    probs = np.array([spec.orientation_probability(c) for c in spec.orientation_codes])
    active = uniforms < probs[:, None, None]
    return configuration_from_active(spec, active, int(as_seed(seed)))
