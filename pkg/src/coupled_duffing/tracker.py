"""Predictor-corrector path tracking for straight-line homotopies.

A :class:`SegmentHomotopy` joins a start system (at ``t = 1``) to an end
system (at ``t = 0``)::

    H(x, t) = w(t) F_start(x) + (1 - w(t)) F_end(x),
    w(t) = g s / (g s + 1 - s),   s = t ** time_power

For ``g = 1`` and ``time_power = 1`` this is ``t F_start + (1-t) F_end``.
Because the coupled-oscillator equations are linear in their parameters, this
is the same as evaluating at the parameter point ``w p_start + (1-w) p_end``.

Tracking is vectorised: :func:`track_batch` advances many paths at once, each
with its own ``t`` and step size.  Every path runs the same arithmetic it
would run alone, so results do not depend on what else is in the batch.
``time_power = 2`` makes paths that escape to infinity like ``t^(-1/2)``
grow like ``1/s``, so they reach ``divergence_norm`` before the step
size collapses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol

import numpy as np

from .errors import InvalidInputError, NearSingularError, PreconditionError
from .polysys import PointC2N, SystemBatch, evaluate_params, jacobian_params

__all__ = [
    "BatchSystem",
    "TrackerConfig",
    "PathStatus",
    "PathResult",
    "SegmentHomotopy",
    "relative_residual",
    "davidenko_tangent",
    "newton_correct",
    "track",
    "track_batch",
    "track_arrays",
    "BatchOutcome",
]


class BatchSystem(Protocol):
    dim: int

    def evaluate_batch(self, X: np.ndarray, rows=None) -> np.ndarray: ...

    def jacobian_batch(self, X: np.ndarray, rows=None) -> np.ndarray: ...


@dataclass(frozen=True)
class TrackerConfig:
    newton_tol: float = 1e-10
    # Forward-error test on the last Newton update, relative to 1 + |x|.
    update_tol: float = 1e-6
    max_newton_iters: int = 3
    # Largest accepted first Newton correction, as a fraction of the predictor move.
    jump_ratio: float = 0.05
    h_init: float = 0.1
    h_min: float = 1e-14
    h_max: float = 0.25
    step_shrink: float = 0.5
    step_grow: float = 1.5
    divergence_norm: float = 1e8
    max_steps: int = 10_000
    # Newton budget for the closing correction at t = 0.
    final_newton_iters: int = 10

    def __post_init__(self):
        if not 0 < self.h_min <= self.h_init <= self.h_max <= 1:
            raise InvalidInputError("need 0 < h_min <= h_init <= h_max <= 1")
        if not self.step_shrink < 1 < self.step_grow:
            raise InvalidInputError("need step_shrink < 1 < step_grow")
        if self.step_shrink <= 0:
            raise InvalidInputError("step_shrink must be positive")
        if min(self.newton_tol, self.update_tol, self.divergence_norm) <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.max_newton_iters < 1 or self.max_steps < 1 or self.final_newton_iters < 1:
            raise InvalidInputError("iteration budgets must be >= 1")

    def replace(self, **changes) -> "TrackerConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return TrackerConfig(**fields)


class PathStatus(str, enum.Enum):
    RUNNING = "running"
    CONVERGED = "converged"
    DIVERGED = "diverged"
    STEP_FAILURE = "step_failure"
    MAX_STEPS = "max_steps"


_CODES = list(PathStatus)
_RUN, _CONV, _DIV, _FAIL, _MAXS = range(5)


@dataclass(frozen=True)
class PathResult:
    status: PathStatus
    endpoint: PointC2N
    t_final: float
    residual: float
    steps_taken: int
    accepted_steps: int = 0

    @property
    def converged(self) -> bool:
        return self.status is PathStatus.CONVERGED


@dataclass(frozen=True)
class SegmentHomotopy:
    start: BatchSystem
    end: BatchSystem
    gamma_twist: complex = 1.0
    time_power: int = 1

    def __post_init__(self):
        if self.start.dim != self.end.dim:
            raise InvalidInputError(
                f"start and end systems differ in dimension ({self.start.dim} vs {self.end.dim})")
        if self.time_power < 1:
            raise InvalidInputError("time_power must be >= 1")

    @property
    def dim(self) -> int:
        return self.start.dim

    def weights(self, t):
        """Return ``(w, dw/dt)`` for the start-system weight."""
        t = np.asarray(t, dtype=float)
        k = self.time_power
        s = t**k
        ds = k * t ** (k - 1)
        g = complex(self.gamma_twist)
        den = g * s + 1 - s
        return g * s / den, g * ds / den**2

    @cached_property
    def _linear(self):
        """Packed ``(end, start - end)`` parameters when both ends are parameter batches."""
        if not (isinstance(self.start, SystemBatch) and isinstance(self.end, SystemBatch)):
            return None
        s, e = self.start, self.end
        if s.size != e.size and 1 not in (s.size, e.size):
            raise InvalidInputError("start and end batches have incompatible sizes")
        size = max(s.size, e.size)

        def pack(b):
            flat = np.concatenate([a.reshape(a.shape[0], -1) for a in (b.A, b.B, b.C, b.D)], axis=1)
            return np.ascontiguousarray(np.broadcast_to(flat, (size, flat.shape[1])))

        end = pack(e)
        return end, pack(s) - end, size, e.n_oscillators

    @staticmethod
    def _unpack(flat, n):
        P = flat.shape[0]
        A = flat[:, :4 * n].reshape(P, n, 4)
        B = flat[:, 4 * n:8 * n].reshape(P, n, 4)
        C = flat[:, 8 * n:8 * n + n * n].reshape(P, n, n)
        D = flat[:, 8 * n + n * n:].reshape(P, n, n)
        return A, B, C, D

    def _params(self, w, rows, n_rows):
        # Linear in the parameters: H = F(end + w * (start - end)).
        end, diff, size, n = self._linear
        if size > 1 and rows is not None:
            end = end.take(rows, axis=0)
            diff = diff.take(rows, axis=0)
        w = np.broadcast_to(w, (n_rows,))[:, None]
        return self._unpack(end + w * diff, n)

    def evaluate(self, X, t, rows=None):
        w, _ = self.weights(t)
        if self._linear is not None:
            return evaluate_params(*self._params(w, rows, X.shape[0]), X)
        w = np.broadcast_to(w, (X.shape[0],))[:, None]
        return w * self.start.evaluate_batch(X, rows) + (1 - w) * self.end.evaluate_batch(X, rows)

    def jacobian(self, X, t, rows=None):
        w, _ = self.weights(t)
        if self._linear is not None:
            return jacobian_params(*self._params(w, rows, X.shape[0]), X)
        w = np.broadcast_to(w, (X.shape[0],))[:, None, None]
        return w * self.start.jacobian_batch(X, rows) + (1 - w) * self.end.jacobian_batch(X, rows)

    def dt(self, X, t, rows=None):
        """Partial derivative of H in t."""
        _, dw = self.weights(t)
        if self._linear is not None:
            _, diff, size, n = self._linear
            if size > 1 and rows is not None:
                diff = diff.take(rows, axis=0)
            dw = np.broadcast_to(dw, (X.shape[0],))[:, None]
            return dw * evaluate_params(*self._unpack(diff, n), X)
        dw = np.broadcast_to(dw, (X.shape[0],))[:, None]
        return dw * (self.start.evaluate_batch(X, rows) - self.end.evaluate_batch(X, rows))


def relative_residual(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Row-wise ``|H| / (1 + |x|)^3``; the equations are cubic in x."""
    return np.linalg.norm(H, axis=-1) / (1.0 + np.linalg.norm(X, axis=-1)) ** 3


def _solve(J: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched solve; rows whose matrix is singular come back as NaN."""
    try:
        out = np.linalg.solve(J, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full_like(b, np.nan)
        for k in range(J.shape[0]):
            try:
                out[k] = np.linalg.solve(J[k], b[k])
            except np.linalg.LinAlgError:
                pass
    return out


def _velocity(h: SegmentHomotopy, X, t, rows):
    return _solve(h.jacobian(X, t, rows), -h.dt(X, t, rows))


def _rk4(h: SegmentHomotopy, X, t, dt, rows):
    """Classical RK4 step from t to t - dt on dx/dt = -J^{-1} dH/dt."""
    half = t - dt / 2
    d = dt[:, None]
    k1 = _velocity(h, X, t, rows)
    k2 = _velocity(h, X - d / 2 * k1, half, rows)
    k3 = _velocity(h, X - d / 2 * k2, half, rows)
    k4 = _velocity(h, X - d * k3, t - dt, rows)
    return X - d / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _newton(h: SegmentHomotopy, X, t, tol, utol, iters, rows, max_first=None):
    """Plain Newton on H(., t) = 0 for a batch of points.

    Returns ``(X, converged, residual, iterations)``.  A row converges when,
    after at least one update, both the last update is <= utol * (1 + |x|) and
    the relative residual is <= tol.  A row fails as soon as an update does
    not shrink the previous one, or when its first update exceeds
    ``max_first``; it keeps its last accepted iterate.
    """
    X = X.copy()
    P = X.shape[0]
    converged = np.zeros(P, dtype=bool)
    n_iter = np.zeros(P, dtype=int)
    last = np.full(P, np.inf)
    res = np.full(P, np.inf)
    live = np.arange(P)
    rows_l = np.arange(P) if rows is None else np.asarray(rows)
    t = np.broadcast_to(np.asarray(t, dtype=float), (P,))
    for k in range(iters + 1):
        Xl = X[live]
        H = h.evaluate(Xl, t[live], rows_l[live])
        r = relative_residual(H, Xl)
        r = np.where(np.isfinite(r), r, np.inf)
        res[live] = r
        if k > 0:
            scale = 1.0 + np.linalg.norm(Xl, axis=1)
            done = (r <= tol) & (last[live] <= utol * scale)
            converged[live[done]] = True
            keep = ~done
            live, Xl, H = live[keep], Xl[keep], H[keep]
        if k == iters or live.size == 0:
            break
        dx = _solve(h.jacobian(Xl, t[live], rows_l[live]), -H)
        step = np.linalg.norm(dx, axis=1)
        good = np.isfinite(step) & (step < last[live])
        if k == 0 and max_first is not None:
            good &= step <= max_first[live]
        last[live] = step
        X[live[good]] = Xl[good] + dx[good]
        n_iter[live[good]] += 1
        live = live[good]
        if live.size == 0:
            break
    return X, converged, res, n_iter


def _as_flat(x, dim):
    flat = x.flat() if isinstance(x, PointC2N) else np.asarray(x, dtype=complex).reshape(-1)
    if flat.size != dim:
        raise InvalidInputError(f"point has {flat.size} coordinates, homotopy needs {dim}")
    return flat


def davidenko_tangent(h: SegmentHomotopy, x, t: float) -> PointC2N:
    """Velocity dx/dt of the solution path through ``x`` at time ``t``."""
    X = _as_flat(x, h.dim)[None, :]
    J = h.jacobian(X, float(t))[0]
    if np.linalg.cond(J) > 1.0 / np.finfo(float).eps:
        raise NearSingularError(f"Jacobian is numerically singular at t={t}")
    rhs = -h.dt(X, float(t))[0]
    return PointC2N.from_flat(np.linalg.solve(J, rhs))


def newton_correct(h: SegmentHomotopy, x, t: float, cfg: TrackerConfig | None = None):
    """Newton iteration on ``H(., t) = 0``: returns ``(point, converged, iterations)``."""
    cfg = cfg or TrackerConfig()
    X = _as_flat(x, h.dim)[None, :]
    X, conv, _, n_iter = _newton(h, X, float(t), cfg.newton_tol, cfg.update_tol,
                                    cfg.max_newton_iters, None)
    return PointC2N.from_flat(X[0]), bool(conv[0]), int(n_iter[0])


def track(h: SegmentHomotopy, start, cfg: TrackerConfig | None = None) -> PathResult:
    """Track one start solution from t = 1 to t = 0."""
    return track_batch(h, _as_flat(start, h.dim)[None, :], cfg)[0]


def track_batch(h: SegmentHomotopy, starts, cfg: TrackerConfig | None = None,
                rows=None) -> list[PathResult]:
    """Track every row of ``starts`` (shape ``(P, dim)``) from t = 1 to t = 0.

    ``rows[k]`` selects the parameter row used for path ``k`` when the start
    and end systems hold stacked parameters; by default path ``k`` uses row
    ``k`` (or the single shared system).
    """
    out = track_arrays(h, starts, cfg, rows)
    return [
        PathResult(
            status=PathStatus(out.status[k]),
            endpoint=PointC2N.from_flat(out.X[k]),
            t_final=float(out.t[k]),
            residual=float(out.residual[k]),
            steps_taken=int(out.steps[k]),
            accepted_steps=int(out.accepted[k]),
        )
        for k in range(out.X.shape[0])
    ]


@dataclass(frozen=True)
class BatchOutcome:
    """Column-wise tracking results; ``status`` holds :class:`PathStatus` values."""

    X: np.ndarray
    status: np.ndarray
    t: np.ndarray
    residual: np.ndarray
    steps: np.ndarray
    accepted: np.ndarray

    @property
    def converged(self) -> np.ndarray:
        return self.status == PathStatus.CONVERGED.value


def track_arrays(h: SegmentHomotopy, starts, cfg: TrackerConfig | None = None,
                 rows=None) -> BatchOutcome:
    """Array form of :func:`track_batch`, for callers tracking thousands of paths."""
    cfg = cfg or TrackerConfig()
    X = np.array(starts, dtype=complex, ndmin=2)
    P, dim = X.shape
    if dim != h.dim:
        raise InvalidInputError(f"start points have {dim} coordinates, homotopy needs {h.dim}")
    if P == 0:
        empty = np.zeros(0)
        return BatchOutcome(X, np.zeros(0, dtype=object), empty, empty,
                            np.zeros(0, dtype=int), np.zeros(0, dtype=int))
    row_of = np.arange(P) if rows is None else np.asarray(rows)

    res0 = relative_residual(h.evaluate(X, 1.0, row_of), X)
    if not np.all(res0 <= cfg.newton_tol):
        bad = int(np.flatnonzero(~(res0 <= cfg.newton_tol))[0])
        raise PreconditionError(
            f"start point {bad} is not a solution at t=1 (relative residual {res0[bad]:.3e})")

    t = np.ones(P)
    step = np.full(P, cfg.h_init)
    streak = np.zeros(P, dtype=int)
    steps = np.zeros(P, dtype=int)
    accepted = np.zeros(P, dtype=int)
    status = np.full(P, _RUN)
    residual = res0.copy()

    while True:
        idx = np.flatnonzero(status == _RUN)
        if idx.size == 0:
            break
        rws = row_of[idx]
        ta = t[idx]
        dt = np.minimum(step[idx], ta)
        t_new = np.where(dt >= ta, 0.0, ta - dt)
        dt = ta - t_new
        with np.errstate(all="ignore"):
            pred = _rk4(h, X[idx], ta, dt, rws)
            ok_pred = np.all(np.isfinite(pred), axis=1)
            pred[~ok_pred] = X[idx][~ok_pred]
            # First correction must stay small next to the predicted move; guards
            # against jumping onto a neighbouring path.
            moved = np.linalg.norm(pred - X[idx], axis=1)
            scale = 1.0 + np.linalg.norm(pred, axis=1)
            max_first = cfg.jump_ratio * moved + cfg.update_tol * scale
            corr, ok, res, _ = _newton(h, pred, t_new, cfg.newton_tol, cfg.update_tol,
                                       cfg.max_newton_iters, rws, max_first)
        ok &= ok_pred
        steps[idx] += 1

        acc = idx[ok]
        X[acc] = corr[ok]
        t[acc] = t_new[ok]
        residual[acc] = res[ok]
        accepted[acc] += 1
        streak[acc] += 1
        grow = acc[streak[acc] >= 3]
        step[grow] = np.minimum(step[grow] * cfg.step_grow, cfg.h_max)
        streak[grow] = 0

        rej = idx[~ok]
        step[rej] *= cfg.step_shrink
        streak[rej] = 0
        status[rej[step[rej] < cfg.h_min]] = _FAIL

        norms = np.linalg.norm(X[acc], axis=1)
        status[acc[norms > cfg.divergence_norm]] = _DIV

        status[idx[(status[idx] == _RUN) & (steps[idx] >= cfg.max_steps)]] = _MAXS

        # Paths that just reached t = 0 get a closing correction.
        fin = acc[(t[acc] == 0.0) & (status[acc] == _RUN)]
        if fin.size:
            with np.errstate(all="ignore"):
                Xf, okf, resf, _ = _newton(h, X[fin], np.zeros(fin.size), cfg.newton_tol,
                                           cfg.update_tol, cfg.final_newton_iters, row_of[fin])
            better = okf | (resf <= residual[fin])
            X[fin[better]] = Xf[better]
            residual[fin[better]] = resf[better]
            status[fin] = np.where(residual[fin] <= cfg.newton_tol, _CONV, _FAIL)

    codes = np.array([c.value for c in _CODES], dtype=object)
    return BatchOutcome(X, codes[status], t, residual, steps, accepted)
