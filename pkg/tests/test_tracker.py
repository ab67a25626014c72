import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coupled_duffing.errors import InvalidInputError, NearSingularError, PreconditionError
from coupled_duffing.polysys import CoupledSystem, PointC2N, anchor_params, evaluate, random_system
from coupled_duffing.solver import ORACLE_TRACKER, TotalDegreeSystem, anchor_solutions
from coupled_duffing.tracker import (
    PathStatus,
    SegmentHomotopy,
    TrackerConfig,
    davidenko_tangent,
    newton_correct,
    relative_residual,
    track,
    track_arrays,
    track_batch,
)

ANCHOR = CoupledSystem((anchor_params(),))
ROOTS = np.array([p.flat() for p in anchor_solutions()])


def anchor_segment(seed):
    return SegmentHomotopy(ANCHOR.batch, random_system(1, seed).batch)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        TrackerConfig(h_min=0.5, h_init=0.1)
    with pytest.raises(InvalidInputError):
        TrackerConfig(step_shrink=1.2)
    with pytest.raises(InvalidInputError):
        TrackerConfig(newton_tol=0)
    assert TrackerConfig().replace(max_steps=5).max_steps == 5


def test_homotopy_endpoints():
    target = random_system(1, 3)
    h = SegmentHomotopy(ANCHOR.batch, target.batch)
    x = np.array([[0.3 + 0.1j, -0.2j]])
    np.testing.assert_allclose(h.evaluate(x, 1.0), [evaluate(ANCHOR, x[0])], atol=1e-15)
    np.testing.assert_allclose(h.evaluate(x, 0.0), [evaluate(target, x[0])], atol=1e-15)


def test_homotopy_gamma_twist_weights():
    target = random_system(1, 4)
    g = np.exp(0.7j)
    h = SegmentHomotopy(ANCHOR.batch, target.batch, gamma_twist=g)
    x = np.array([[0.3 + 0.1j, -0.2j]])
    t = 0.4
    w = g * t / (g * t + 1 - t)
    expect = w * evaluate(ANCHOR, x[0]) + (1 - w) * evaluate(target, x[0])
    np.testing.assert_allclose(h.evaluate(x, t)[0], expect, atol=1e-14)


def test_dt_matches_finite_difference():
    h = SegmentHomotopy(ANCHOR.batch, random_system(1, 5).batch, gamma_twist=np.exp(1j), time_power=2)
    x = np.array([[0.4 - 0.3j, 0.1 + 0.5j]])
    t, eps = 0.6, 1e-6
    fd = (h.evaluate(x, t + eps) - h.evaluate(x, t - eps)) / (2 * eps)
    np.testing.assert_allclose(h.dt(x, t), fd, atol=1e-8)


def test_tangent_zero_on_constant_segment():
    h = SegmentHomotopy(ANCHOR.batch, ANCHOR.batch)
    for x in anchor_solutions():
        assert np.all(davidenko_tangent(h, x, 0.5).flat() == 0)


def test_tangent_matches_path_difference():
    h = anchor_segment(11)
    x0 = ROOTS[1]
    delta = 1e-6
    moved = track(SegmentHomotopy(ANCHOR.batch, h.end.__class__(*_blend(h, 1 - delta))), x0)
    fd = (moved.endpoint.flat() - x0) / (-delta)
    np.testing.assert_allclose(davidenko_tangent(h, x0, 1.0).flat(), fd, rtol=1e-4, atol=1e-4)


def _blend(h, t):
    """Parameters of the segment at time t."""
    A0, B0, C0, D0 = h.start.A, h.start.B, h.start.C, h.start.D
    A1, B1, C1, D1 = h.end.A, h.end.B, h.end.C, h.end.D
    return tuple(t * s + (1 - t) * e for s, e in ((A0, A1), (B0, B1), (C0, C1), (D0, D1)))


@given(st.integers(0, 10_000))
def test_tangent_solves_linear_system(seed):
    rng = np.random.default_rng(seed)
    h = anchor_segment(seed)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    t = float(rng.random())
    J = h.jacobian(x[None], t)[0]
    rhs = -h.dt(x[None], t)[0]
    v = davidenko_tangent(h, x, t).flat()
    assert np.linalg.norm(J @ v - rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1.0) * np.linalg.cond(J)


def test_tangent_singular_raises():
    # At the origin the Jacobian of u^3 = r1, v^3 = r2 vanishes.
    h = SegmentHomotopy(TotalDegreeSystem(np.array([1.0, 1.0])), ANCHOR.batch)
    with pytest.raises(NearSingularError):
        davidenko_tangent(h, [0, 0], 1.0)


def test_newton_fixed_point():
    h = anchor_segment(2)
    x, ok, iters = newton_correct(h, ROOTS[3], 1.0)
    assert ok and iters <= 1
    assert np.max(np.abs(x.flat() - ROOTS[3])) <= 1e-14


def test_newton_quadratic_convergence():
    target = random_system(1, 8)
    root = track(SegmentHomotopy(ANCHOR.batch, target.batch), ROOTS[1]).endpoint.flat()
    h = SegmentHomotopy(target.batch, target.batch)
    x = root + 1e-3
    errs = [np.linalg.norm(x - root)]
    for _ in range(3):
        x, _, _ = newton_correct(h, x, 0.0, TrackerConfig(max_newton_iters=1))
        x = x.flat()
        errs.append(np.linalg.norm(x - root))
    ratios = [errs[k + 1] / errs[k] ** 2 for k in range(2) if errs[k + 1] > 1e-15]
    assert all(r < 1e3 for r in ratios) and errs[2] < 1e-9


def test_newton_budget_exhausted():
    h = anchor_segment(3)
    _, ok, _ = newton_correct(h, [40 + 3j, -25j], 0.0, TrackerConfig(max_newton_iters=1))
    assert not ok


def test_track_constant_path():
    h = SegmentHomotopy(ANCHOR.batch, ANCHOR.batch)
    res = track(h, ROOTS[2], TrackerConfig(h_init=1.0, h_max=1.0))
    assert res.converged and res.steps_taken <= 2 and res.t_final == 0
    assert np.max(np.abs(res.endpoint.flat() - ROOTS[2])) <= 1e-14


def test_track_rejects_non_solution():
    with pytest.raises(PreconditionError):
        track(anchor_segment(0), [0.3, 0.3])


def test_track_dimension_check():
    with pytest.raises(InvalidInputError):
        track_batch(anchor_segment(0), np.zeros((2, 4)))


@pytest.mark.parametrize("seed", range(5))
def test_anchor_to_random_five_distinct_roots(seed):
    target = random_system(1, 100 + seed)
    results = track_batch(SegmentHomotopy(ANCHOR.batch, target.batch), ROOTS)
    assert all(r.converged for r in results)
    X = np.array([r.endpoint.flat() for r in results])
    for x in X:
        assert np.linalg.norm(evaluate(target, x)) <= 1e-9 * (1 + np.linalg.norm(x)) ** 3
    d = np.linalg.norm(X[:, None] - X[None], axis=2) + np.eye(5)
    assert d.min() > 1e-6


def test_path_results_satisfy_invariants():
    cfg = TrackerConfig()
    target = random_system(1, 21)
    for r in track_batch(SegmentHomotopy(ANCHOR.batch, target.batch), ROOTS, cfg):
        assert r.status is PathStatus.CONVERGED and r.t_final == 0
        x = r.endpoint.flat()
        assert r.residual <= cfg.newton_tol
        assert np.linalg.norm(evaluate(target, x)) / (1 + np.linalg.norm(x)) <= 10 * cfg.newton_tol


@pytest.mark.parametrize("seed", range(3))
def test_total_degree_four_diverge(seed):
    rng = np.random.default_rng(seed)
    target = random_system(1, rng)
    start = TotalDegreeSystem(rng.standard_normal(2) + 1j * rng.standard_normal(2))
    h = SegmentHomotopy(start, target.batch, np.exp(2j * np.pi * rng.random()), 2)
    out = track_arrays(h, start.roots(), ORACLE_TRACKER)
    status = list(out.status)
    assert status.count("diverged") == 4 and status.count("converged") == 5


def test_tracking_is_deterministic():
    h = anchor_segment(9)
    a = track_arrays(h, ROOTS)
    b = track_arrays(anchor_segment(9), ROOTS.copy())
    assert pickle.dumps((a.X, list(a.status), a.steps)) == pickle.dumps((b.X, list(b.status), b.steps))


def test_batch_independent_of_companions():
    h = anchor_segment(13)
    alone = track_arrays(h, ROOTS[2:3])
    together = track_arrays(h, ROOTS)
    assert np.array_equal(alone.X[0], together.X[2])


def test_relative_residual_scaling():
    H = np.array([[3.0, 4.0]])
    X = np.array([[0.0, 1.0]])
    assert relative_residual(H, X)[0] == pytest.approx(5 / 8)
