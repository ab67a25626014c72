"""Start systems, the decoupled-homotopy solvers, and solution post-processing.

Algorithm 1 (decoupled homotopy) for a target system with N oscillators:

1. draw a random complex system ``p1``;
2. solve each oscillator of ``decouple(p1)`` on its own, by tracking the five
   anchor roots through a random intermediate (:func:`solve_single`);
3. take the 5^N products as solutions of ``p0 = decouple(p1)``;
4. track them ``p0 -> p1 -> target``.

Algorithm 2 skips the random system: ``p0 = decouple(target)`` and a single
leg ``p0 -> target``.  It is cheaper and can lose paths, because the straight
segment may pass close to the discriminant.

Retry policy (Algorithm 1 and :func:`solve_single` only).  Paths whose
endpoints coincide are re-tracked once along the same route with small steps
and a strict jump guard (``retry_collided``).  If a target still has fewer
than the expected number of distinct roots, the whole solve is repeated once
with fresh random systems and the two solution sets are merged.  Re-tracking
only the failed paths along another route does not work: a different route
permutes the start-to-end correspondence, so such paths tend to land on roots
that were already found.  Every retry draws its randomness up front from the
seeded generator.

The ``*_many`` functions run the same algorithm on a list of targets in one
vectorised pass; results equal those of the single-target calls with the same
seeds.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .polysys import (
    CoupledSystem,
    OscillatorParams,
    PointC2N,
    SystemBatch,
    _rng,
    anchor_params,
    decouple,
    random_system,
)
from .tracker import (
    PathStatus,
    SegmentHomotopy,
    TrackerConfig,
    track_arrays,
)

__all__ = [
    "SolverConfig",
    "SolutionSet",
    "anchor_solutions",
    "solve_single",
    "solve_single_many",
    "cartesian_start",
    "solve_algorithm1",
    "solve_algorithm1_many",
    "solve_algorithm2",
    "solve_algorithm2_many",
    "TotalDegreeSystem",
    "total_degree_oracle",
    "deduplicate",
    "classify_real",
    "polish",
    "contains_all",
]

_CONV = PathStatus.CONVERGED.value
_DIV = PathStatus.DIVERGED.value


@dataclass(frozen=True)
class SolverConfig:
    # A short step budget stops paths stalled near a pole; the target is then re-solved.
    tracker: TrackerConfig = field(default_factory=lambda: TrackerConfig(max_steps=1000))
    retry_collided: TrackerConfig = field(
        default_factory=lambda: TrackerConfig(jump_ratio=0.01, h_init=0.01, h_max=0.05))
    dedup_tol: float = 1e-6
    real_tol: float = 1e-8
    retries: bool = True
    polish_iters: int = 3
    # Paths per tracker call; bounds memory for large N.
    chunk: int = 4096

    def __post_init__(self):
        if self.dedup_tol <= 0 or self.real_tol <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.chunk < 1 or self.polish_iters < 0:
            raise InvalidInputError("chunk must be >= 1 and polish_iters >= 0")


@dataclass(frozen=True)
class SolutionSet:
    """Distinct solutions found for one target, plus path bookkeeping.

    ``residuals[k]`` is ``|F(x)| / (1 + |x|)`` at ``points[k]``.
    ``cluster_multiplicity[k]`` counts the paths that ended at ``points[k]``.
    """

    points: list[PointC2N]
    residuals: list[float]
    is_real: list[bool]
    cluster_multiplicity: list[int]
    diverged_count: int = 0
    failed_count: int = 0

    @property
    def n_solutions(self) -> int:
        return len(self.points)

    @property
    def n_real(self) -> int:
        return int(sum(self.is_real))

    @property
    def n_paths(self) -> int:
        return int(sum(self.cluster_multiplicity)) + self.diverged_count + self.failed_count

    def array(self) -> np.ndarray:
        """Solutions as an ``(n_solutions, 2N)`` flat array."""
        if not self.points:
            return np.zeros((0, 0), dtype=complex)
        return np.array([p.flat() for p in self.points])

    def success_rate(self, expected: int) -> float:
        return self.n_solutions / expected

    def to_dict(self) -> dict:
        return {
            "n_solutions": self.n_solutions,
            "solutions": [
                {
                    "u": [[float(z.real), float(z.imag)] for z in p.u],
                    "v": [[float(z.real), float(z.imag)] for z in p.v],
                    "residual": float(r),
                    "real": bool(re),
                    "multiplicity": int(m),
                }
                for p, r, re, m in zip(self.points, self.residuals, self.is_real,
                                       self.cluster_multiplicity)
            ],
            "diverged": self.diverged_count,
            "failed": self.failed_count,
        }


# --- post-processing -------------------------------------------------------

def classify_real(x, tol: float = 1e-8) -> bool:
    """True iff every imaginary part is at most ``tol * (1 + |x|)``."""
    flat = x.flat() if isinstance(x, PointC2N) else np.asarray(x, dtype=complex).reshape(-1)
    return bool(np.max(np.abs(flat.imag), initial=0.0) <= tol * (1.0 + np.linalg.norm(flat)))


def _clusters(X: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage labels; i ~ j when |xi - xj| <= tol * (1 + max(|xi|, |xj|))."""
    n = X.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    R = np.concatenate([X.real, X.imag], axis=1)
    tree = cKDTree(R)
    radii = tol * (1.0 + np.linalg.norm(X, axis=1))
    hits = tree.query_ball_point(R, radii)
    src = np.repeat(np.arange(n), [len(h) for h in hits])
    dst = np.fromiter(itertools.chain.from_iterable(hits), dtype=int, count=src.size)
    graph = coo_matrix((np.ones(src.size), (src, dst)), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection="weak")
    # Relabel by first occurrence so cluster order follows input order.
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels]


def deduplicate(points, tol: float = 1e-6, residuals=None, real_tol: float = 1e-8,
                diverged: int = 0, failed: int = 0, weights=None) -> SolutionSet:
    """Cluster points at relative distance ``tol`` and keep one per cluster.

    The representative is the member with the smallest residual (the first
    member when no residuals are given).  Clusters are ordered by their first
    member.  ``weights`` gives the number of paths behind each input point
    (default 1).
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    pts = list(points)
    if not pts:
        return SolutionSet([], [], [], [], diverged, failed)
    X = np.array([p.flat() if isinstance(p, PointC2N) else np.asarray(p, dtype=complex)
                  for p in pts])
    res = np.zeros(len(pts)) if residuals is None else np.asarray(residuals, dtype=float)
    labels = _clusters(X, tol)
    k = labels.max() + 1
    w = np.ones(len(pts), dtype=int) if weights is None else np.asarray(weights, dtype=int)
    mult = np.bincount(labels, weights=w, minlength=k).astype(int)
    best = np.full(k, -1)
    for i in range(len(pts)):
        c = labels[i]
        if best[c] < 0 or res[i] < res[best[c]]:
            best[c] = i
    reps = [PointC2N.from_flat(X[i]) for i in best]
    return SolutionSet(
        points=reps,
        residuals=[float(res[i]) for i in best],
        is_real=[classify_real(X[i], real_tol) for i in best],
        cluster_multiplicity=[int(m) for m in mult],
        diverged_count=int(diverged),
        failed_count=int(failed),
    )


def contains_all(big: SolutionSet, small: SolutionSet, tol: float = 1e-8) -> bool:
    """Every point of ``small`` is within ``tol * (1 + |x|)`` of a point of ``big``."""
    if small.n_solutions == 0:
        return True
    if big.n_solutions == 0:
        return False
    B, S = big.array(), small.array()
    R = lambda X: np.concatenate([X.real, X.imag], axis=1)
    d, _ = cKDTree(R(B)).query(R(S))
    return bool(np.all(d <= tol * (1.0 + np.linalg.norm(S, axis=1))))


def _absolute_residual(batch: SystemBatch, X, rows) -> np.ndarray:
    return np.linalg.norm(batch.evaluate_batch(X, rows), axis=1) / (1.0 + np.linalg.norm(X, axis=1))


def polish(batch: SystemBatch, X: np.ndarray, rows=None, iters: int = 3):
    """A few Newton steps on the target, each kept only if the residual drops.

    Returns ``(X, residual)`` with residual ``|F(x)| / (1 + |x|)``.
    """
    X = np.array(X, dtype=complex, copy=True)
    rows = None if rows is None else np.asarray(rows)
    res = _absolute_residual(batch, X, rows)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            J = batch.jacobian_batch(X, rows)
            F = batch.evaluate_batch(X, rows)
            try:
                dx = np.linalg.solve(J, -F[..., None])[..., 0]
            except np.linalg.LinAlgError:
                break
            Y = X + dx
            r = _absolute_residual(batch, Y, rows)
            better = np.isfinite(r) & (r < res)
            X[better] = Y[better]
            res[better] = r[better]
    return X, res


# --- tracking helpers --------------------------------------------------------

def _track(start, end, X, rows, cfg: SolverConfig, tracker=None, gamma=1.0, time_power=1):
    """Chunked tracking; returns (endpoints, status array)."""
    h = SegmentHomotopy(start, end, gamma, time_power)
    tracker = tracker or cfg.tracker
    P = X.shape[0]
    out = np.array(X, dtype=complex, copy=True)
    status = np.empty(P, dtype=object)
    rows = np.asarray(rows)
    for s in range(0, P, cfg.chunk):
        sl = slice(s, s + cfg.chunk)
        res = track_arrays(h, X[sl], tracker, rows[sl])
        out[sl] = res.X
        status[sl] = res.status
    return out, status


def _track_route(route: Sequence, X, rows, cfg: SolverConfig, tracker=None):
    """Track through consecutive systems in ``route``; a failure stops a path."""
    X = np.array(X, dtype=complex, copy=True)
    status = np.full(X.shape[0], _CONV, dtype=object)
    rows = np.asarray(rows)
    for start, end in zip(route[:-1], route[1:]):
        live = np.flatnonzero(status == _CONV)
        if live.size == 0:
            break
        X[live], status[live] = _track(start, end, X[live], rows[live], cfg, tracker)
    return X, status


def _collided(X, status, rows, n_groups, tol):
    """Indices of converged paths sharing an endpoint with another path of the same group."""
    out = []
    for g in range(n_groups):
        idx = np.flatnonzero((rows == g) & (status == _CONV))
        if idx.size > 1:
            lab = _clusters(X[idx], tol)
            out.extend(idx[np.bincount(lab)[lab] > 1])
    return np.array(sorted(out), dtype=int)


def _run_route(route, X0, rows, n_groups, cfg: SolverConfig, retries: bool):
    """Track ``X0`` along ``route``, apply the retry policy, and polish on the target."""
    target = route[-1]
    X, status = _track_route(route, X0, rows, cfg)
    if retries:
        hit = _collided(X, status, rows, n_groups, cfg.dedup_tol)
        if hit.size:
            X[hit], status[hit] = _track_route(route, X0[hit], rows[hit], cfg, cfg.retry_collided)
    res = np.full(X.shape[0], np.inf)
    conv = np.flatnonzero(status == _CONV)
    if conv.size:
        X[conv], res[conv] = polish(target, X[conv], rows[conv], cfg.polish_iters)
    return X, status, res


def _group_sets(X, status, res, rows, n_groups, cfg: SolverConfig, expected=None):
    sets = []
    for g in range(n_groups):
        idx = np.flatnonzero(rows == g)
        conv = idx[status[idx] == _CONV]
        diverged = int(np.sum(status[idx] == _DIV))
        failed = idx.size - conv.size - diverged
        if expected is not None:
            # Start points lost before this stage count as failed paths.
            failed += expected - idx.size
        sets.append(deduplicate(X[conv], cfg.dedup_tol, res[conv], cfg.real_tol,
                                diverged=diverged, failed=failed))
    return sets


def _merge(a: SolutionSet, b: SolutionSet, cfg: SolverConfig) -> SolutionSet:
    """Union of two runs on the same target; path counts add up."""
    return deduplicate(
        a.points + b.points, cfg.dedup_tol, a.residuals + b.residuals, cfg.real_tol,
        diverged=a.diverged_count + b.diverged_count,
        failed=a.failed_count + b.failed_count,
        weights=a.cluster_multiplicity + b.cluster_multiplicity,
    )


# --- start systems -------------------------------------------------------------

_S = 1.0 / np.sqrt(2.0)
_ANCHOR_ROOTS = np.array([[0, 0], [_S, -_S], [-_S, _S], [1j * _S, 1j * _S],
                          [-1j * _S, -1j * _S]], dtype=complex)


def anchor_solutions() -> list[PointC2N]:
    """The five roots of ``u(u^2+v^2) + v = v(u^2+v^2) + u = 0``.

    With ``r^2 = u^2 + v^2`` the equations give ``v = -u r^2`` and
    ``r^4 = 1`` away from the origin; real ``r^2 = 1`` yields the pair
    ``u = -v = ±1/√2`` and ``r^2 = -1`` yields ``u = v = ±i/√2``.
    """
    return [PointC2N.from_flat(x) for x in _ANCHOR_ROOTS]


def _single_system(params: OscillatorParams) -> CoupledSystem:
    return CoupledSystem((params.decoupled(),))


def _solve_single_core(targets: Sequence[CoupledSystem], mids,
                       cfg: SolverConfig) -> list[SolutionSet]:
    """One pass ``anchor -> mids[k] -> targets[k]``."""
    M = len(targets)
    anchor = CoupledSystem((anchor_params(),)).batch
    tgt = SystemBatch.stack(targets)
    mid = SystemBatch.stack(mids)
    rows = np.repeat(np.arange(M), 5)
    X0 = np.tile(_ANCHOR_ROOTS, (M, 1))
    X, status, res = _run_route([anchor, mid, tgt], X0, rows, M, cfg, cfg.retries)
    return _group_sets(X, status, res, rows, M, cfg)


def _draw_mids(rng) -> tuple[CoupledSystem, CoupledSystem]:
    """Intermediate for the first pass and for a possible second pass."""
    return random_system(1, rng), random_system(1, rng)


def _solve_singles(targets: Sequence[CoupledSystem], mids, cfg: SolverConfig) -> list[SolutionSet]:
    """First pass, then a second pass for targets with fewer than 5 roots."""
    sets = _solve_single_core(targets, [m[0] for m in mids], cfg)
    redo = [k for k, s in enumerate(sets) if s.n_solutions < 5] if cfg.retries else []
    if redo:
        again = _solve_single_core([targets[k] for k in redo], [mids[k][1] for k in redo], cfg)
        for k, s in zip(redo, again):
            sets[k] = _merge(sets[k], s, cfg)
    return sets


def solve_single_many(params: Sequence[OscillatorParams], cfg: SolverConfig | None = None,
                      seeds=None) -> list[SolutionSet]:
    """:func:`solve_single` for many oscillators at once; ``seeds[k]`` seeds target k."""
    cfg = cfg or SolverConfig()
    seeds = list(range(len(params))) if seeds is None else list(seeds)
    if len(seeds) != len(params):
        raise InvalidInputError("need one seed per target")
    if not params:
        return []
    mids = [_draw_mids(_rng(s)) for s in seeds]
    return _solve_singles([_single_system(p) for p in params], mids, cfg)


def solve_single(params: OscillatorParams, cfg: SolverConfig | None = None,
                 seed=0) -> SolutionSet:
    """All roots of one oscillator's 2x2 system (couplings ignored).

    Tracks the anchor roots to a random complex intermediate and then to
    ``params``.  Generic targets give five roots.
    """
    return solve_single_many([params], cfg, [seed])[0]


def cartesian_start(per_oscillator_roots) -> list[PointC2N]:
    """All 5^N tuples, lexicographic in the per-oscillator root index."""
    lists = [list(r) for r in per_oscillator_roots]
    if not lists:
        raise InvalidInputError("need at least one oscillator")
    for k, lst in enumerate(lists):
        if len(lst) != 5:
            raise InvalidInputError(f"oscillator {k + 1} has {len(lst)} roots, expected 5")
    arrays = [np.array([p.flat() if isinstance(p, PointC2N) else p for p in lst]) for lst in lists]
    return [PointC2N.from_flat(x) for x in _product(arrays)]


def _product(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Cartesian product of per-oscillator root arrays (each ``(k_i, 2)``)."""
    n = len(arrays)
    grids = np.meshgrid(*[np.arange(len(a)) for a in arrays], indexing="ij")
    idx = [g.reshape(-1) for g in grids]
    out = np.empty((idx[0].size, 2 * n), dtype=complex)
    for i, a in enumerate(arrays):
        out[:, 2 * i:2 * i + 2] = a[idx[i]]
    return out


# --- Algorithm 1 ----------------------------------------------------------------

def _check_targets(targets, seeds):
    targets = list(targets)
    n = targets[0].n_oscillators
    if any(t.n_oscillators != n for t in targets):
        raise InvalidInputError("all targets must have the same number of oscillators")
    seeds = list(range(len(targets))) if seeds is None else list(seeds)
    if len(seeds) != len(targets):
        raise InvalidInputError("need one seed per target")
    return targets, n, seeds


def _product_starts(singles: Sequence[SolutionSet], n: int, n_targets: int):
    """Stack the product start sets; targets with an empty factor get no paths."""
    starts, rows = [], []
    for k in range(n_targets):
        roots = [s.array() for s in singles[k * n:(k + 1) * n]]
        if any(r.shape[0] == 0 for r in roots):
            continue
        S0 = _product(roots)
        starts.append(S0)
        rows.append(np.full(S0.shape[0], k))
    if not starts:
        return np.zeros((0, 2 * n), dtype=complex), np.zeros(0, dtype=int)
    return np.concatenate(starts), np.concatenate(rows)


@dataclass(frozen=True)
class _Plan:
    p1: CoupledSystem
    mids: tuple


def _draw_plan(n: int, rng) -> _Plan:
    return _Plan(random_system(n, rng), tuple(_draw_mids(rng) for _ in range(n)))


def _clock(timings, key, t0):
    if timings is not None:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - t0
    return time.perf_counter()


def _algorithm1_pass(targets: Sequence[CoupledSystem], plans: Sequence[_Plan], n: int,
                     cfg: SolverConfig, timings=None) -> list[SolutionSet]:
    T = len(targets)
    t0 = time.perf_counter()
    # Steps 2-5: every oscillator of every decoupled p1, solved in one batch.
    singles = _solve_singles(
        [_single_system(p) for pl in plans for p in pl.p1.oscillators],
        [m for pl in plans for m in pl.mids], cfg)
    X0, rows = _product_starts(singles, n, T)
    t0 = _clock(timings, "setup", t0)
    p1 = SystemBatch.stack([pl.p1 for pl in plans])
    tgt = SystemBatch.stack(targets)
    # For N = 1, p0 = decouple(p1) = p1 and the first leg is constant.
    if n == 1:
        route = [p1, tgt]
    else:
        route = [SystemBatch.stack([decouple(pl.p1) for pl in plans]), p1, tgt]
    X, status, res = _run_route(route, X0, rows, T, cfg, cfg.retries)
    out = _group_sets(X, status, res, rows, T, cfg, expected=5 ** n)
    _clock(timings, "solve", t0)
    return out


def solve_algorithm1_many(targets: Sequence[CoupledSystem], cfg: SolverConfig | None = None,
                          seeds=None, timings: dict | None = None) -> list[SolutionSet]:
    """Algorithm 1 on several targets with the same N; ``seeds[k]`` seeds target k.

    If ``timings`` is a dict, wall seconds spent on the start systems and on
    the coupled legs are added under ``"setup"`` and ``"solve"``.
    """
    cfg = cfg or SolverConfig()
    if not targets:
        return []
    targets, n, seeds = _check_targets(targets, seeds)
    plans = []
    for s in seeds:
        rng = _rng(s)
        plans.append((_draw_plan(n, rng), _draw_plan(n, rng)))
    sets = _algorithm1_pass(targets, [p[0] for p in plans], n, cfg, timings)
    redo = [k for k, s in enumerate(sets) if s.n_solutions < 5 ** n] if cfg.retries else []
    if redo:
        again = _algorithm1_pass([targets[k] for k in redo], [plans[k][1] for k in redo], n,
                                 cfg, timings)
        for k, s in zip(redo, again):
            sets[k] = _merge(sets[k], s, cfg)
    return sets


def solve_algorithm1(target: CoupledSystem, cfg: SolverConfig | None = None,
                     seed=0) -> SolutionSet:
    """Decoupled homotopy through a random complex system (see module docs)."""
    return solve_algorithm1_many([target], cfg, [seed])[0]


# --- Algorithm 2 ----------------------------------------------------------------

def solve_algorithm2_many(targets: Sequence[CoupledSystem], cfg: SolverConfig | None = None,
                          seeds=None, timings: dict | None = None) -> list[SolutionSet]:
    """Algorithm 2 on several targets; ``timings`` as in :func:`solve_algorithm1_many`."""
    cfg = cfg or SolverConfig()
    if not targets:
        return []
    targets, n, seeds = _check_targets(targets, seeds)
    T = len(targets)
    t0 = time.perf_counter()
    mids = []
    for s in seeds:
        rng = _rng(s)
        mids.extend(_draw_mids(rng) for _ in range(n))
    singles = _solve_singles(
        [_single_system(p) for t in targets for p in t.oscillators], mids, cfg)
    X0, rows = _product_starts(singles, n, T)
    t0 = _clock(timings, "setup", t0)
    route = [SystemBatch.stack([decouple(t) for t in targets]), SystemBatch.stack(targets)]
    X, status, res = _run_route(route, X0, rows, T, cfg, retries=False)
    out = _group_sets(X, status, res, rows, T, cfg, expected=5 ** n)
    _clock(timings, "solve", t0)
    return out


def solve_algorithm2(target: CoupledSystem, cfg: SolverConfig | None = None,
                     seed=0) -> SolutionSet:
    """Heuristic version: start from the target with its couplings switched off.

    ``seed`` only drives the random intermediates of the per-oscillator
    solves; the coupled leg has no randomness and no retries.
    """
    return solve_algorithm2_many([target], cfg, [seed])[0]


# --- total-degree oracle ------------------------------------------------------

class TotalDegreeSystem:
    """Start system ``x_k^3 = r_k`` with closed-form roots."""

    def __init__(self, r):
        self.r = np.asarray(r, dtype=complex).reshape(-1)
        self.dim = self.r.size

    def evaluate_batch(self, X, rows=None):
        return X**3 - self.r

    def jacobian_batch(self, X, rows=None):
        P, n = X.shape
        J = np.zeros((P, n, n), dtype=complex)
        k = np.arange(n)
        J[:, k, k] = 3 * X**2
        return J

    def roots(self) -> np.ndarray:
        """All ``3^dim`` roots, lexicographic in the cube-root index."""
        w = np.exp(2j * np.pi * np.arange(3) / 3)
        per = [self.r[k] ** (1 / 3) * w for k in range(self.dim)]
        return np.array(list(itertools.product(*per)), dtype=complex)


# Paths to infinity have condition number ~ |x|^2, so 1e8 is out of reach in
# double precision; 1e5 sits far above every finite root of a Gaussian target.
ORACLE_TRACKER = TrackerConfig(divergence_norm=1e5, jump_ratio=0.01)


def total_degree_oracle(params: OscillatorParams, cfg: SolverConfig | None = None,
                        seed=0) -> SolutionSet:
    """Track the 9 roots of ``u^3 = r1, v^3 = r2`` to one oscillator's system.

    The segment uses a random gamma twist and ``s = t^2``.  Generic targets
    send 4 paths to infinity, the two double roots at infinity.  The
    ``cfg.tracker`` settings are replaced by :data:`ORACLE_TRACKER` unless a
    config is given.
    """
    cfg = cfg or SolverConfig(tracker=ORACLE_TRACKER)
    rng = _rng(seed)
    r = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    gamma = np.exp(2j * np.pi * rng.random())
    start = TotalDegreeSystem(r)
    target = _single_system(params).batch
    X0 = start.roots()
    rows = np.zeros(X0.shape[0], dtype=int)
    X, status = _track(start, target, X0, rows, cfg, None, gamma, 2)
    res = np.full(X.shape[0], np.inf)
    conv = np.flatnonzero(status == _CONV)
    if conv.size:
        X[conv], res[conv] = polish(target, X[conv], rows[conv], cfg.polish_iters)
    return _group_sets(X, status, res, rows, 1, cfg)[0]
