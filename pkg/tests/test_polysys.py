import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from coupled_duffing.errors import InvalidInputError, SingularParameterError
from coupled_duffing.polysys import (
    CoupledSystem,
    OscillatorParams,
    PointC2N,
    SystemBatch,
    anchor_params,
    build_from_slice,
    build_single_physical,
    decouple,
    evaluate,
    jacobian,
    load_system,
    random_system,
    save_system,
    system_from_dict,
    system_to_dict,
)

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 4)


def random_point(n, rng):
    return rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)


def naive_evaluate(sys, x):
    """Term-by-term evaluation in plain Python."""
    u, v = list(x[0::2]), list(x[1::2])
    out = []
    for i, p in enumerate(sys.oscillators):
        r2 = u[i] ** 2 + v[i] ** 2
        f = p.a[0] * u[i] * r2 + p.a[1] * u[i] + p.a[2] * v[i] + p.a[3]
        g = p.b[0] * v[i] * r2 + p.b[1] * u[i] + p.b[2] * v[i] + p.b[3]
        for j, c in p.c.items():
            f += c * v[j - 1]
        for j, d in p.d.items():
            g += d * u[j - 1]
        out += [f, g]
    return np.array(out)


def central_differences(sys, x, h=1e-7):
    n = x.size
    J = np.empty((n, n), dtype=complex)
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = h
        J[:, k] = (evaluate(sys, x + e) - evaluate(sys, x - e)) / (2 * h)
    return J


# --- evaluate -----------------------------------------------------------------------

def test_anchor_origin_is_root():
    sys = CoupledSystem((anchor_params(),))
    assert np.array_equal(evaluate(sys, [0, 0]), [0, 0])


@given(seeds, sizes)
def test_homogeneous_decoupled_vanishes_at_origin(seed, n):
    rng = np.random.default_rng(seed)
    osc = tuple(OscillatorParams(list(rng.standard_normal(3)) + [0],
                                 list(rng.standard_normal(3)) + [0]) for _ in range(n))
    assert np.all(evaluate(CoupledSystem(osc), np.zeros(2 * n)) == 0)


@given(seeds, sizes)
def test_evaluate_matches_naive(seed, n):
    rng = np.random.default_rng(seed)
    sys = random_system(n, rng)
    x = random_point(n, rng)
    np.testing.assert_allclose(evaluate(sys, x), naive_evaluate(sys, x), rtol=1e-13, atol=1e-13)


def test_evaluate_ordering_is_f_then_g():
    p = OscillatorParams((0, 0, 0, 1), (0, 0, 0, 2))
    q = OscillatorParams((0, 0, 0, 3), (0, 0, 0, 4))
    assert list(evaluate(CoupledSystem((p, q)), np.zeros(4))) == [1, 2, 3, 4]


def test_evaluate_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        evaluate(random_system(2, 0), np.zeros(3))


def test_point_layout_roundtrip():
    x = np.arange(6) + 1j
    p = PointC2N.from_flat(x)
    assert np.array_equal(p.u, x[0::2]) and np.array_equal(p.flat(), x)


# --- jacobian -----------------------------------------------------------------------

def test_jacobian_at_origin_is_linear_part():
    p = OscillatorParams((1, 2, 3, 4), (5, 6, 7, 8))
    assert np.array_equal(jacobian(CoupledSystem((p,)), [0, 0]), [[2, 3], [6, 7]])


def test_jacobian_anchor_root_finite_differences():
    sys = CoupledSystem((anchor_params(),))
    x = np.array([1, -1]) / math.sqrt(2)
    np.testing.assert_allclose(jacobian(sys, x), central_differences(sys, x), atol=1e-6)


def test_jacobian_closed_form_entries(rng):
    sys = random_system(3, rng)
    x = random_point(3, rng)
    J = jacobian(sys, x)
    u, v = x[0::2], x[1::2]
    for i, p in enumerate(sys.oscillators):
        a, b = p.a, p.b
        assert np.isclose(J[2 * i, 2 * i], a[0] * (3 * u[i] ** 2 + v[i] ** 2) + a[1])
        assert np.isclose(J[2 * i, 2 * i + 1], 2 * a[0] * u[i] * v[i] + a[2])
        assert np.isclose(J[2 * i + 1, 2 * i], 2 * b[0] * u[i] * v[i] + b[1])
        assert np.isclose(J[2 * i + 1, 2 * i + 1], b[0] * (u[i] ** 2 + 3 * v[i] ** 2) + b[2])
        for j in range(3):
            if j != i:
                assert J[2 * i, 2 * j + 1] == p.c[j + 1]
                assert J[2 * i + 1, 2 * j] == p.d[j + 1]
                assert J[2 * i, 2 * j] == 0 and J[2 * i + 1, 2 * j + 1] == 0


@given(seeds, sizes)
def test_jacobian_finite_differences(seed, n):
    rng = np.random.default_rng(seed)
    sys = random_system(n, rng)
    x = random_point(n, rng)
    J = jacobian(sys, x)
    err = np.max(np.abs(J - central_differences(sys, x)))
    assert err <= 1e-6 * (1 + np.linalg.norm(J))


# --- invariants -----------------------------------------------------------------------

@given(seeds, sizes)
def test_odd_symmetry(seed, n):
    rng = np.random.default_rng(seed)
    A, B, C, D = (x[0] for x in random_system(n, rng).arrays)
    A[:, 3] = B[:, 3] = 0
    sys = CoupledSystem.from_arrays(A, B, C, D)
    x = random_point(n, rng)
    assert np.array_equal(evaluate(sys, -x), -evaluate(sys, x))


@given(seeds, sizes)
def test_decoupled_factorization(seed, n):
    rng = np.random.default_rng(seed)
    sys = decouple(random_system(n, rng))
    x = random_point(n, rng)
    blocks = [evaluate(CoupledSystem((p,)), x[2 * i:2 * i + 2])
              for i, p in enumerate(sys.oscillators)]
    assert np.array_equal(evaluate(sys, x), np.concatenate(blocks))


def test_decouple_removes_cross_dependence(rng):
    sys = decouple(random_system(2, rng))
    x = random_point(2, rng)
    y = x.copy()
    y[2] += 1.0
    assert evaluate(sys, x)[0] == evaluate(sys, y)[0]


def test_decouple_idempotent(rng):
    once = decouple(random_system(3, rng))
    assert decouple(once) == once and once.is_decoupled


# --- constructors ---------------------------------------------------------------------

def test_random_system_deterministic():
    assert random_system(2, 7) == random_system(2, 7)
    assert random_system(2, 7) != random_system(2, 8)


def test_random_system_parameter_count():
    sys = random_system(3, 0)
    A, B, C, D = sys.arrays
    off = ~np.eye(3, dtype=bool)
    values = np.concatenate([A.ravel(), B.ravel(), C[0][off], D[0][off]])
    assert values.size == 2 * (3 + 3) * 3 == sys.n_parameters
    assert np.all(values != 0)


def test_random_system_real_flag():
    A, B, C, D = random_system(3, 1, real=True).arrays
    assert all(np.all(X.imag == 0) for X in (A, B, C, D))


def test_random_system_gaussian_moments():
    rng = np.random.default_rng(0)
    vals = np.concatenate([random_system(1, rng).batch.A.ravel() for _ in range(12500)])
    for part in (vals.real, vals.imag):
        m = part.size
        assert abs(part.mean()) < 3 / math.sqrt(m)
        assert abs(part.var() - 1) < 3 * math.sqrt(2 / m)


def test_random_system_rejects_zero():
    with pytest.raises(InvalidInputError):
        random_system(0, 0)


def test_self_coupling_rejected():
    with pytest.raises(InvalidInputError):
        CoupledSystem((OscillatorParams((1, 0, 0, 0), (1, 0, 0, 0), {1: 1.0}),))


def test_coupling_index_range():
    with pytest.raises(InvalidInputError):
        CoupledSystem((OscillatorParams((1, 0, 0, 0), (1, 0, 0, 0), {3: 1.0}),))


def test_nonfinite_rejected():
    with pytest.raises(InvalidInputError):
        OscillatorParams((math.nan, 0, 0, 0), (1, 0, 0, 0))


def test_physical_zero_case():
    p = build_single_physical(alpha=1, beta=0, gamma=0, delta=0, omega=2)
    assert p.a == (0, 0, 0, 0)


def test_physical_hand_example():
    p = build_single_physical(alpha=2, beta=4 / 3, gamma=0, delta=0, omega=2)
    assert np.allclose(p.a, (1, 1, 0, 0))


@pytest.mark.parametrize("omega", [1.0, -1.0])
def test_physical_singular_frequency(omega):
    with pytest.raises(SingularParameterError):
        build_single_physical(1.5, 1.0, 0.3, 0.1, omega)


def _residual_F(alpha, beta, gamma, delta, omega, u, v):
    """The one-harmonic residual F(u, v, t) as printed."""
    def F(t):
        s, c = math.sin(t), math.cos(t)
        return (-gamma * math.cos(omega * t) + beta * c**3 * v * (v * v - 3 * u * u)
                - beta * s * c * c * u * (u * u - 3 * v * v)
                + c * (3 * beta * u * u * v + delta * u + v * (alpha - 1))
                + s * (beta * u**3 + (alpha - 1) * u - delta * v))
    return F


def _project(F, basis):
    return quad(lambda t: F(t) * basis(t), -math.pi, math.pi, limit=200,
                epsabs=1e-13, epsrel=1e-13)[0] / math.pi


def test_physical_f_matches_quadrature(rng):
    alpha, beta, gamma, delta, omega = 1.7, 0.8, 0.3, 0.15, 1.4
    sys = CoupledSystem((build_single_physical(alpha, beta, gamma, delta, omega),))
    for _ in range(10):
        u, v = rng.standard_normal(2)
        F = _residual_F(alpha, beta, gamma, delta, omega, u, v)
        assert abs(evaluate(sys, [u, v])[0] - _project(F, math.sin)) <= 1e-8


def test_physical_g_terms_match_quadrature(rng):
    # The printed v-coefficient (alpha - 1) * alpha differs from the projection's
    # (alpha - 1); with alpha = 1 that term vanishes on both sides.
    alpha, beta, gamma, delta, omega = 1.0, 0.8, 0.3, 0.15, 1.4
    sys = CoupledSystem((build_single_physical(alpha, beta, gamma, delta, omega),))
    for _ in range(10):
        u, v = rng.standard_normal(2)
        F = _residual_F(alpha, beta, gamma, delta, omega, u, v)
        assert abs(evaluate(sys, [u, v])[1] - _project(F, math.cos)) <= 1e-8


def test_slice_zero_frequency():
    p = build_from_slice(0, 0.3, 0, 0.01, 0.5, 0.2)
    assert p.a[0] == 9 and p.b[0] == 9


def test_slice_unforced_is_homogeneous():
    p = build_from_slice(1.01, 0.02, 0.5, 0.01, 0.0, 0.7)
    assert p.a[3] == 0 and p.b[3] == 0


def test_slice_hand_values():
    p = build_from_slice(1.0, 0.0, 0.5, 0.01, 0.0, 0.0)
    # a1 = 1/4 + 9; a2 = (0.02 - 12) + 12; a3 = 2 (1 - 0.06) - 2; b2 = 2 (-1 + 0.06) + 2
    expected_a = (9.25, 0.02, -0.12, 0)
    expected_b = (9.25, 0.12, 0.02, 0)
    assert np.allclose(p.a, expected_a, atol=1e-14) and np.allclose(p.b, expected_b, atol=1e-14)


# --- batches and JSON -----------------------------------------------------------------

def test_batch_rows_select_systems(rng):
    systems = [random_system(2, rng) for _ in range(3)]
    batch = SystemBatch.stack(systems)
    X = np.stack([random_point(2, rng) for _ in range(4)])
    rows = np.array([2, 0, 1, 2])
    out = batch.evaluate_batch(X, rows)
    for k, r in enumerate(rows):
        np.testing.assert_array_equal(out[k], evaluate(systems[r], X[k]))


@given(seeds, sizes)
def test_json_roundtrip(seed, n):
    sys = random_system(n, seed)
    assert system_from_dict(json.loads(json.dumps(system_to_dict(sys)))) == sys


def test_json_file_roundtrip(tmp_path):
    sys = random_system(2, 3)
    save_system(sys, tmp_path / "p.json")
    assert load_system(tmp_path / "p.json") == sys


def test_json_missing_couplings_mean_zero():
    sys = system_from_dict({"N": 1, "oscillators": [{"a": [[1, 0]] * 4, "b": [[1, 0]] * 4}]})
    assert sys.is_decoupled


def test_json_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        system_from_dict({"N": 2, "oscillators": [{"a": [[1, 0]] * 4, "b": [[1, 0]] * 4}]})
