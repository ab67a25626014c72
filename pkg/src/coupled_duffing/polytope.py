"""The oscillator polytope Q_N and exact normalized volumes.

``Q_1 = conv{(0,0), (1,0), (0,3), (1,2)}`` is cut out by ``x >= 0``,
``y >= 0``, ``x <= 1`` and ``x + y <= 3``: the edge from ``(1,0)`` to ``(1,2)``
gives ``x <= 1`` and the edge from ``(1,2)`` to ``(0,3)`` gives ``x + y <= 3``.
Its gauge (Minkowski functional) on the positive quadrant is
``max(x, (x + y) / 3)``.  ``Q_N`` is the subdirect sum of N copies of ``Q_1``,
and since every copy contains the origin,

    Q_N = {x >= 0 : sum_i gauge(x_i1, x_i2) <= 1}.

For polytopes ``P`` in R^n and ``Q`` in R^k that contain the origin, the
layer-cake formula gives ``Vol(P (+) Q) = Vol(P) Vol(Q) n! k! / (n+k)!``, so
normalized volumes (``n! Vol``) multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, PreconditionError, UnsupportedInputError

__all__ = [
    "LatticePolytope",
    "MonteCarloEstimate",
    "oscillator_polytope",
    "subdirect_sum",
    "normalized_volume",
    "membership",
    "monte_carlo_volume",
]


@dataclass(frozen=True)
class LatticePolytope:
    """Convex hull of integer ``vertices`` in ``Z^dim``."""

    dim: int
    vertices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("dim must be positive")
        verts = tuple(tuple(int(c) for c in v) for v in self.vertices)
        for v in verts:
            if len(v) != self.dim:
                raise InvalidInputError(f"vertex {v} does not have length {self.dim}")
        if len(set(verts)) != len(verts):
            raise InvalidInputError("duplicate vertices")
        object.__setattr__(self, "vertices", verts)

    @property
    def has_origin(self) -> bool:
        return (0,) * self.dim in self.vertices

    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64).reshape(-1, self.dim)


def oscillator_polytope(n: int) -> LatticePolytope:
    """``Q_N``: origin plus ``e_i1, 3 e_i2, e_i1 + 2 e_i2`` per oscillator.

    Coordinates are ordered ``(u_1, v_1, ..., u_N, v_N)``.
    """
    if n < 1:
        raise InvalidInputError(f"need N >= 1, got {n}")
    verts = [(0,) * (2 * n)]
    for i in range(n):
        for du, dv in ((1, 0), (0, 3), (1, 2)):
            v = [0] * (2 * n)
            v[2 * i], v[2 * i + 1] = du, dv
            verts.append(tuple(v))
    return LatticePolytope(2 * n, tuple(verts))


def subdirect_sum(P: LatticePolytope, Q: LatticePolytope) -> LatticePolytope:
    """``conv(P x {0} u {0} x Q)``; both inputs must have the origin as a vertex."""
    if not P.has_origin or not Q.has_origin:
        raise PreconditionError("subdirect sum needs the origin as a vertex of both polytopes")
    zp, zq = (0,) * P.dim, (0,) * Q.dim
    verts = [v + zq for v in P.vertices]
    verts += [zp + w for w in Q.vertices if w != zq]
    return LatticePolytope(P.dim + Q.dim, tuple(verts))


def _hull_2d(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Andrew's monotone chain, counter-clockwise, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _polygon_normalized(points) -> int:
    """Twice the area (integer for lattice polygons)."""
    hull = _hull_2d([tuple(p) for p in points])
    if len(hull) < 3:
        return 0
    s = 0
    for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]):
        s += x0 * y1 - x1 * y0
    return abs(s)


def _blocks(V: np.ndarray) -> list[list[int]]:
    """Coordinate blocks: coordinates sharing a vertex support are joined."""
    d = V.shape[1]
    parent = list(range(d))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for row in V:
        support = np.flatnonzero(row)
        for c in support[1:]:
            parent[find(c)] = find(support[0])
    groups: dict[int, list[int]] = {}
    for c in range(d):
        groups.setdefault(find(c), []).append(c)
    return sorted(groups.values())


def normalized_volume(P: LatticePolytope) -> Fraction:
    """Exact ``dim! * Vol(P)``.

    Supported: segments, polygons, and subdirect sums of those that have the
    origin as a vertex (coordinates split into blocks of size 1 or 2 such that
    every vertex lives in one block).  Anything else raises
    :class:`UnsupportedInputError`.
    """
    V = P.array()
    if P.dim == 1:
        return Fraction(int(V.max() - V.min()))
    if P.dim == 2:
        return Fraction(_polygon_normalized(V))
    if not P.has_origin:
        raise UnsupportedInputError("exact volume needs the origin as a vertex in dimension > 2")
    total = Fraction(1)
    for block in _blocks(V):
        if len(block) > 2:
            raise UnsupportedInputError(
                f"coordinate block {block} has size {len(block)}; only 1 and 2 are supported")
        # Vertices of other blocks project to the origin.
        sub = np.unique(V[:, block], axis=0)
        total *= normalized_volume(LatticePolytope(len(block), tuple(map(tuple, sub))))
    return total


def membership(n: int, x) -> bool:
    """Whether ``x`` (length 2N, blocks ``(x_i1, x_i2)``) lies in ``Q_N``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != 2 * n:
        raise InvalidInputError(f"expected {2 * n} coordinates, got {x.size}")
    return bool(_member_rows(x[None, :])[0])


def _member_rows(X: np.ndarray) -> np.ndarray:
    a, b = X[:, 0::2], X[:, 1::2]
    gauge = np.maximum(a, (a + b) / 3.0).sum(axis=1)
    return np.all(X >= 0, axis=1) & (gauge <= 1.0)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    samples: int
    hits: int


def monte_carlo_volume(n: int, samples: int, seed=None, batch: int = 250_000) -> MonteCarloEstimate:
    """Euclidean ``Vol(Q_N)`` by uniform sampling of ``([0,1] x [0,3])^N``."""
    if n < 1:
        raise InvalidInputError(f"need N >= 1, got {n}")
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    scale = np.tile([1.0, 3.0], n)
    hits = 0
    left = samples
    while left:
        m = min(batch, left)
        hits += int(_member_rows(rng.random((m, 2 * n)) * scale).sum())
        left -= m
    box = 3.0**n
    p = hits / samples
    return MonteCarloEstimate(box * p, box * math.sqrt(p * (1 - p) / samples), samples, hits)
