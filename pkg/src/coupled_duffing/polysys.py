"""Harmonic-balance equations of N coupled Duffing oscillators.

For oscillator ``i`` (1-based) the two equations are

    f_i = a1 u_i (u_i^2 + v_i^2) + a2 u_i + a3 v_i + a4 + sum_{j != i} c_{j,i} v_j
    g_i = b1 v_i (u_i^2 + v_i^2) + b2 u_i + b3 v_i + b4 + sum_{j != i} d_{j,i} u_j

Residual vectors are ordered ``(f_1, g_1, ..., f_N, g_N)``. Flat point vectors
use the matching interleaved layout ``(u_1, v_1, ..., u_N, v_N)`` so that the
Jacobian of a decoupled system is block diagonal with 2x2 blocks.

Every monomial of the system carries exactly one parameter, so evaluation is
linear in the parameters. The homotopies in :mod:`coupled_duffing.tracker`
rely on this.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, SingularParameterError

__all__ = [
    "OscillatorParams",
    "CoupledSystem",
    "PointC2N",
    "SystemBatch",
    "evaluate_params",
    "jacobian_params",
    "evaluate",
    "jacobian",
    "build_single_physical",
    "build_from_slice",
    "random_system",
    "decouple",
    "anchor_params",
    "system_from_dict",
    "system_to_dict",
    "load_system",
    "save_system",
]


def _as_complex_tuple(values: Iterable, name: str) -> tuple[complex, ...]:
    out = tuple(complex(z) for z in values)
    if len(out) != 4:
        raise InvalidInputError(f"{name} needs 4 coefficients, got {len(out)}")
    for z in out:
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise InvalidInputError(f"non-finite coefficient in {name}: {z}")
    return out


def _as_coupling(values: Mapping | None, name: str) -> dict[int, complex]:
    out: dict[int, complex] = {}
    for key, val in (values or {}).items():
        j = int(key)
        z = complex(val)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise InvalidInputError(f"non-finite coupling {name}[{j}]: {z}")
        out[j] = z
    return out


@dataclass(frozen=True)
class OscillatorParams:
    """Coefficients of one oscillator's pair of equations.

    ``c`` and ``d`` map the 1-based index ``j`` of another oscillator to the
    coefficient of ``v_j`` in ``f_i`` and of ``u_j`` in ``g_i``.  Missing keys
    mean zero.  The self-coupling check needs the owning system and happens in
    :class:`CoupledSystem`.
    """

    a: tuple[complex, ...]
    b: tuple[complex, ...]
    c: dict[int, complex] = field(default_factory=dict)
    d: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "a", _as_complex_tuple(self.a, "a"))
        object.__setattr__(self, "b", _as_complex_tuple(self.b, "b"))
        object.__setattr__(self, "c", _as_coupling(self.c, "c"))
        object.__setattr__(self, "d", _as_coupling(self.d, "d"))

    def __hash__(self):
        return hash((self.a, self.b, tuple(sorted(self.c.items())), tuple(sorted(self.d.items()))))

    def decoupled(self) -> "OscillatorParams":
        return OscillatorParams(self.a, self.b)


@dataclass(frozen=True)
class PointC2N:
    """A point ``(u, v)`` of C^{2N}."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).reshape(-1)
        v = np.asarray(self.v, dtype=complex).reshape(-1)
        if u.shape != v.shape:
            raise InvalidInputError(f"u has {u.size} entries but v has {v.size}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.u.size

    @classmethod
    def from_flat(cls, x) -> "PointC2N":
        x = np.asarray(x, dtype=complex).reshape(-1)
        if x.size % 2:
            raise InvalidInputError(f"flat point must have even length, got {x.size}")
        return cls(x[0::2], x[1::2])

    def flat(self) -> np.ndarray:
        x = np.empty(2 * self.n, dtype=complex)
        x[0::2] = self.u
        x[1::2] = self.v
        return x

    def __eq__(self, other):
        if not isinstance(other, PointC2N):
            return NotImplemented
        return np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash(self.flat().tobytes())


class SystemBatch:
    """Parameter arrays for a stack of systems sharing the same N.

    ``A`` and ``B`` have shape ``(P, N, 4)``; ``C`` and ``D`` have shape
    ``(P, N, N)`` with ``C[p, i, j] = c_{j+1, i+1}``.  A leading dimension of 1
    broadcasts one system over every evaluated row.
    """

    def __init__(self, A, B, C, D):
        self.A = np.asarray(A, dtype=complex)
        self.B = np.asarray(B, dtype=complex)
        self.C = np.asarray(C, dtype=complex)
        self.D = np.asarray(D, dtype=complex)
        p, n, _ = self.A.shape
        if self.B.shape != (p, n, 4) or self.C.shape != (p, n, n) or self.D.shape != (p, n, n):
            raise InvalidInputError("inconsistent parameter array shapes")
        self.n_oscillators = n
        self.dim = 2 * n
        self.size = p

    @classmethod
    def stack(cls, systems: Sequence["CoupledSystem"]) -> "SystemBatch":
        if not systems:
            raise InvalidInputError("cannot stack an empty list of systems")
        arrs = [s.arrays for s in systems]
        return cls(*(np.concatenate([a[k] for a in arrs]) for k in range(4)))

    def take(self, index) -> "SystemBatch":
        index = np.asarray(index)
        return SystemBatch(self.A[index], self.B[index], self.C[index], self.D[index])

    def _select(self, rows):
        if self.size == 1 or rows is None:
            return self.A, self.B, self.C, self.D
        return self.A[rows], self.B[rows], self.C[rows], self.D[rows]

    def evaluate_batch(self, X: np.ndarray, rows=None) -> np.ndarray:
        return evaluate_params(*self._select(rows), X)

    def jacobian_batch(self, X: np.ndarray, rows=None) -> np.ndarray:
        return jacobian_params(*self._select(rows), X)


def evaluate_params(A, B, C, D, X: np.ndarray) -> np.ndarray:
    """Residuals for raw parameter arrays (leading dim 1 or ``len(X)``)."""
    u = X[:, 0::2]
    v = X[:, 1::2]
    r2 = u * u + v * v
    out = np.empty_like(X)
    out[:, 0::2] = (A[..., 0] * u * r2 + A[..., 1] * u + A[..., 2] * v + A[..., 3]
                    + np.einsum("pij,pj->pi", np.broadcast_to(C, (X.shape[0],) + C.shape[1:]), v))
    out[:, 1::2] = (B[..., 0] * v * r2 + B[..., 1] * u + B[..., 2] * v + B[..., 3]
                    + np.einsum("pij,pj->pi", np.broadcast_to(D, (X.shape[0],) + D.shape[1:]), u))
    return out


def jacobian_params(A, B, C, D, X: np.ndarray) -> np.ndarray:
    """Jacobians for raw parameter arrays (leading dim 1 or ``len(X)``)."""
    P = X.shape[0]
    n = A.shape[1]
    u = X[:, 0::2]
    v = X[:, 1::2]
    J = np.zeros((P, 2 * n, 2 * n), dtype=complex)
    J[:, 0::2, 1::2] = C
    J[:, 1::2, 0::2] = D
    k = np.arange(n)
    uu, vv, uv = u * u, v * v, u * v
    J[:, 2 * k, 2 * k] = A[..., 0] * (3 * uu + vv) + A[..., 1]
    J[:, 2 * k, 2 * k + 1] = 2 * A[..., 0] * uv + A[..., 2]
    J[:, 2 * k + 1, 2 * k] = 2 * B[..., 0] * uv + B[..., 1]
    J[:, 2 * k + 1, 2 * k + 1] = B[..., 0] * (uu + 3 * vv) + B[..., 2]
    return J


@dataclass(frozen=True)
class CoupledSystem:
    """The system of ``N = len(oscillators)`` coupled oscillators."""

    oscillators: tuple[OscillatorParams, ...]

    def __post_init__(self):
        osc = tuple(self.oscillators)
        if not osc:
            raise InvalidInputError("a system needs at least one oscillator")
        n = len(osc)
        for i, p in enumerate(osc, start=1):
            for name, cmap in (("c", p.c), ("d", p.d)):
                for j in cmap:
                    if j == i:
                        raise InvalidInputError(f"oscillator {i} has self-coupling {name}[{j}]")
                    if not 1 <= j <= n:
                        raise InvalidInputError(f"coupling index {j} out of range 1..{n}")
        object.__setattr__(self, "oscillators", osc)

    @property
    def n_oscillators(self) -> int:
        return len(self.oscillators)

    @property
    def dim(self) -> int:
        return 2 * self.n_oscillators

    @property
    def n_parameters(self) -> int:
        """Number of stored (possibly zero) coefficients."""
        return sum(8 + len(p.c) + len(p.d) for p in self.oscillators)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.n_oscillators
        A = np.array([[p.a for p in self.oscillators]], dtype=complex)
        B = np.array([[p.b for p in self.oscillators]], dtype=complex)
        C = np.zeros((1, n, n), dtype=complex)
        D = np.zeros((1, n, n), dtype=complex)
        for i, p in enumerate(self.oscillators):
            for j, val in p.c.items():
                C[0, i, j - 1] = val
            for j, val in p.d.items():
                D[0, i, j - 1] = val
        return A, B, C, D

    @cached_property
    def batch(self) -> SystemBatch:
        return SystemBatch(*self.arrays)

    @property
    def is_decoupled(self) -> bool:
        return all(not any(p.c.values()) and not any(p.d.values()) for p in self.oscillators)

    def evaluate_batch(self, X, rows=None):
        return self.batch.evaluate_batch(X, rows)

    def jacobian_batch(self, X, rows=None):
        return self.batch.jacobian_batch(X, rows)

    @classmethod
    def from_arrays(cls, A, B, C, D) -> "CoupledSystem":
        A, B, C, D = (np.asarray(x, dtype=complex) for x in (A, B, C, D))
        n = A.shape[0]
        osc = []
        for i in range(n):
            c = {j + 1: complex(C[i, j]) for j in range(n) if j != i and C[i, j] != 0}
            d = {j + 1: complex(D[i, j]) for j in range(n) if j != i and D[i, j] != 0}
            osc.append(OscillatorParams(A[i], B[i], c, d))
        return cls(tuple(osc))


def _flat_point(sys: CoupledSystem, x) -> np.ndarray:
    flat = x.flat() if isinstance(x, PointC2N) else np.asarray(x, dtype=complex).reshape(-1)
    if flat.size != sys.dim:
        raise InvalidInputError(f"point has {flat.size} coordinates, system needs {sys.dim}")
    return flat


def evaluate(sys: CoupledSystem, x) -> np.ndarray:
    """Residual vector ``(f_1, g_1, ..., f_N, g_N)`` at ``x``."""
    return sys.evaluate_batch(_flat_point(sys, x)[None, :])[0]


def jacobian(sys: CoupledSystem, x) -> np.ndarray:
    """2N x 2N Jacobian; rows follow :func:`evaluate`, columns ``(u_1, v_1, ...)``."""
    return sys.jacobian_batch(_flat_point(sys, x)[None, :])[0]


def anchor_params() -> OscillatorParams:
    """a1 = b1 = a3 = b2 = 1, everything else 0; five known roots."""
    return OscillatorParams((1, 0, 1, 0), (1, 1, 0, 0))


def build_single_physical(alpha: float, beta: float, gamma: float, delta: float,
                          omega: float) -> OscillatorParams:
    """One-harmonic balance coefficients of a single forced Duffing oscillator.

    ``f`` is the sine projection ``3/4 beta u (u^2+v^2) + (alpha-1) u - delta v``.
    ``g`` is taken term by term from the published cosine projection

        (8 gamma sin(pi omega) omega + 3 pi (omega+1)(omega-1)
            (beta v (v^2+u^2) + (alpha-1) 4 alpha v / 3 + 4 delta u / 3))
        / ((4 omega^2 - 4) pi)

    including its ``(alpha-1) alpha`` coefficient on ``v``.
    """
    if omega * omega == 1.0:
        raise SingularParameterError("omega = +-1 makes the cosine projection singular")
    den = (4 * omega**2 - 4) * math.pi
    scale = 3 * math.pi * (omega + 1) * (omega - 1) / den
    b4 = 8 * gamma * math.sin(math.pi * omega) * omega / den
    a = (0.75 * beta, alpha - 1.0, -delta, 0.0)
    b = (scale * beta, scale * 4 * delta / 3, scale * (alpha - 1) * 4 * alpha / 3, b4)
    return OscillatorParams(a, b)


def build_from_slice(omega: float, lam: float, eta: float, gamma: float,
                     F: float, theta: float) -> OscillatorParams:
    """Coefficients of the (omega, lambda) parametric-drive slice."""
    w = omega
    a1 = w**2 * eta**2 + 9
    a2 = (4 * eta * gamma - 12) * w**2 + 3 * (-2 * lam + 4)
    a3 = 2 * ((lam + 2) * eta - 6 * gamma) * w - 4 * w**3 * eta
    a4 = -12 * F * math.cos(theta) - 4 * w * eta * F * math.sin(theta)
    b1 = w**2 * eta**2 + 9
    b2 = 2 * ((lam - 2) * eta + 6 * gamma) * w + 4 * w**3 * eta
    b3 = (4 * eta * gamma - 12) * w**2 + 3 * (2 * lam + 4)
    b4 = -12 * F * math.sin(theta) + 4 * w * eta * F * math.cos(theta)
    return OscillatorParams((a1, a2, a3, a4), (b1, b2, b3, b4))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_system(n: int, seed=None, real: bool = False) -> CoupledSystem:
    """Dense system with i.i.d. standard normal real (and imaginary) parts.

    With ``real=True`` the imaginary parts are zero.  ``seed`` may be an int or
    a ``numpy.random.Generator``; the draw order is fixed so equal seeds give
    equal systems.
    """
    if n < 1:
        raise InvalidInputError(f"need at least one oscillator, got N={n}")
    rng = _rng(seed)

    def draw(shape):
        z = rng.standard_normal(shape).astype(complex)
        if not real:
            z = z + 1j * rng.standard_normal(shape)
        return z

    A = draw((n, 4))
    B = draw((n, 4))
    off = ~np.eye(n, dtype=bool)
    C = np.zeros((n, n), dtype=complex)
    D = np.zeros((n, n), dtype=complex)
    C[off] = draw(n * (n - 1))
    D[off] = draw(n * (n - 1))
    osc = []
    for i in range(n):
        c = {j + 1: complex(C[i, j]) for j in range(n) if j != i}
        d = {j + 1: complex(D[i, j]) for j in range(n) if j != i}
        osc.append(OscillatorParams(A[i], B[i], c, d))
    return CoupledSystem(tuple(osc))


def decouple(sys: CoupledSystem) -> CoupledSystem:
    """Same a, b with every coupling coefficient set to zero."""
    return CoupledSystem(tuple(p.decoupled() for p in sys.oscillators))


# JSON parameter files: complex numbers as [re, im], coupling keys are 1-based strings.

def _cpair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _from_pair(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise InvalidInputError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def system_to_dict(sys: CoupledSystem) -> dict:
    return {
        "N": sys.n_oscillators,
        "oscillators": [
            {
                "a": [_cpair(z) for z in p.a],
                "b": [_cpair(z) for z in p.b],
                "c": {str(j): _cpair(z) for j, z in sorted(p.c.items())},
                "d": {str(j): _cpair(z) for j, z in sorted(p.d.items())},
            }
            for p in sys.oscillators
        ],
    }


def system_from_dict(data: dict) -> CoupledSystem:
    try:
        n = int(data["N"])
        entries = data["oscillators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"parameter file needs 'N' and 'oscillators': {exc}") from None
    if len(entries) != n:
        raise InvalidInputError(f"N={n} but {len(entries)} oscillators given")
    osc = []
    for e in entries:
        try:
            a = [_from_pair(z) for z in e["a"]]
            b = [_from_pair(z) for z in e["b"]]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"oscillator entry missing a/b: {exc}") from None
        c = {int(j): _from_pair(z) for j, z in (e.get("c") or {}).items()}
        d = {int(j): _from_pair(z) for j, z in (e.get("d") or {}).items()}
        osc.append(OscillatorParams(a, b, c, d))
    return CoupledSystem(tuple(osc))


def load_system(path) -> CoupledSystem:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def save_system(sys: CoupledSystem, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(sys), indent=2))
