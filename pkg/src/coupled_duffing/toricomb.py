"""Combinatorial certificates for the 5^N root count.

Monomials of ``C[s, u_1..u_N, v_1..v_N]`` are stored as exponent vectors
``(u_1, ..., u_N, v_1, ..., v_N, s)``.  The term order compares ``alpha`` and
``beta`` through the first nonzero entry of ``M (alpha - beta)``, where ``M``
has ``e_s`` as its first row followed by ``-1`` on the anti-diagonal.  The
initial term of a polynomial is its smallest monomial in this order, e.g.
``s u v^2`` for ``s u (u^2 + v^2)``.

Points of ``P^{4N}`` use the coordinates ``y_0, y_{1,1}, ..., y_{N,4}``;
``y_{k,s}`` sits at index ``4 (k - 1) + s``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, PreconditionError, ResourceError

__all__ = [
    "ExponentVector",
    "Binomial",
    "TermOrderMatrix",
    "term_order_matrix",
    "compare",
    "initial_term",
    "initial_generators",
    "theta_monomials",
    "semigroup_hilbert",
    "hilbert_table",
    "hilbert_polynomial",
    "hilbert_polynomial_check",
    "GRAVER_MATRIX",
    "EXPECTED_GRAVER",
    "graver_bruteforce",
    "binomials_Xij",
    "all_toric_generators",
    "verify_vanishing",
    "KHOVANSKII_EXPECTED",
    "khovanskii_residuals",
    "verify_khovanskii_identities",
]


@dataclass(frozen=True)
class ExponentVector:
    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @property
    def degree(self) -> int:
        """Exponent of ``s``, the grading with ``deg(s) = 1``."""
        return self.entries[-1]

    def __len__(self):
        return len(self.entries)

    def __add__(self, other: "ExponentVector") -> "ExponentVector":
        if len(self) != len(other):
            raise InvalidInputError("exponent vectors differ in length")
        return ExponentVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


@dataclass(frozen=True)
class Binomial:
    """``x^plus - x^minus`` with disjoint supports."""

    plus: tuple[int, ...]
    minus: tuple[int, ...]

    def __post_init__(self):
        plus = tuple(int(e) for e in self.plus)
        minus = tuple(int(e) for e in self.minus)
        if len(plus) != len(minus):
            raise InvalidInputError("plus and minus have different lengths")
        if min(plus + minus, default=0) < 0:
            raise InvalidInputError("exponents must be nonnegative")
        if any(a and b for a, b in zip(plus, minus)):
            raise InvalidInputError("plus and minus supports overlap")
        if not any(plus) and not any(minus):
            raise InvalidInputError("binomial is 1 - 1")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @classmethod
    def from_vector(cls, z) -> "Binomial":
        z = [int(c) for c in z]
        return cls(tuple(max(c, 0) for c in z), tuple(max(-c, 0) for c in z))

    @property
    def vector(self) -> tuple[int, ...]:
        return tuple(a - b for a, b in zip(self.plus, self.minus))

    def normalized(self) -> "Binomial":
        """Representative of ``±self`` whose first nonzero entry is positive."""
        z = self.vector
        first = next(c for c in z if c)
        return self if first > 0 else Binomial(self.minus, self.plus)

    def evaluate(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values of the two monomials at points ``y`` (shape ``(..., len)``)."""
        y = np.asarray(y)
        return (np.prod(y ** np.array(self.plus), axis=-1),
                np.prod(y ** np.array(self.minus), axis=-1))

    def format(self, names: Sequence[str]) -> str:
        def mono(e):
            parts = [n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k]
            return "*".join(parts) or "1"

        return f"{mono(self.plus)} - {mono(self.minus)}"


# --- term order ----------------------------------------------------------------

@dataclass(frozen=True)
class TermOrderMatrix:
    M: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.M)

    def array(self) -> np.ndarray:
        return np.array(self.M, dtype=np.int64)


def term_order_matrix(n: int) -> TermOrderMatrix:
    """The ``(2N+1)``-square matrix: first row ``e_s``, then ``-1`` on the anti-diagonal."""
    if n < 1:
        raise InvalidInputError(f"need N >= 1, got {n}")
    d = 2 * n + 1
    M = np.zeros((d, d), dtype=np.int64)
    M[0, d - 1] = 1
    for r in range(1, d):
        M[r, d - 1 - r] = -1
    return TermOrderMatrix(tuple(map(tuple, M.tolist())))


def _entries(x) -> np.ndarray:
    return x.array() if isinstance(x, ExponentVector) else np.asarray(x, dtype=np.int64)


def compare(alpha, beta, M: TermOrderMatrix | None = None) -> int:
    """-1 if ``alpha`` precedes ``beta``, 0 if equal, +1 otherwise."""
    a, b = _entries(alpha), _entries(beta)
    if a.shape != b.shape:
        raise InvalidInputError("exponent vectors differ in length")
    if M is None:
        M = term_order_matrix((a.size - 1) // 2)
    if M.size != a.size:
        raise InvalidInputError(f"order matrix has size {M.size}, vectors have length {a.size}")
    w = M.array() @ (a - b)
    nz = np.flatnonzero(w)
    if nz.size == 0:
        return 0
    return -1 if w[nz[0]] < 0 else 1


def initial_term(monomials, M: TermOrderMatrix | None = None) -> ExponentVector:
    """The smallest monomial under the order."""
    mons = [m if isinstance(m, ExponentVector) else ExponentVector(tuple(m)) for m in monomials]
    if not mons:
        raise InvalidInputError("no monomials")
    best = mons[0]
    for m in mons[1:]:
        if compare(m, best, M) < 0:
            best = m
    return best


def _mono(n: int, u=None, v=None, s: int = 1, du: int = 0, dv: int = 0) -> ExponentVector:
    e = [0] * (2 * n + 1)
    if u is not None:
        e[u] = du
    if v is not None:
        e[n + v] = dv
    e[-1] = s
    return ExponentVector(tuple(e))


def theta_monomials(n: int) -> list[list[ExponentVector]]:
    """Monomial supports of ``s * theta`` for ``theta_0`` and ``theta_{i,1..4}``.

    ``theta_{i,3} = u_i (u_i^2 + v_i^2)`` and ``theta_{i,4} = v_i (u_i^2 + v_i^2)``.
    """
    out = [[_mono(n)]]
    for i in range(n):
        out.append([_mono(n, u=i, du=1)])
        out.append([_mono(n, v=i, dv=1)])
        out.append([_mono(n, u=i, du=3), _mono(n, u=i, v=i, du=1, dv=2)])
        out.append([_mono(n, u=i, v=i, du=2, dv=1), _mono(n, v=i, dv=3)])
    return out


def initial_generators(n: int) -> list[ExponentVector]:
    """``s * {1, u_i, v_i, u_i v_i^2, v_i^3}``: 4N + 1 exponent vectors."""
    if n < 1:
        raise InvalidInputError(f"need N >= 1, got {n}")
    out = [_mono(n)]
    for i in range(n):
        out += [_mono(n, u=i, du=1), _mono(n, v=i, dv=1), _mono(n, u=i, v=i, du=1, dv=2),
                _mono(n, v=i, dv=3)]
    return out


# --- Hilbert function ----------------------------------------------------------

def semigroup_hilbert(generators, ell: int) -> int:
    """Number of distinct sums of exactly ``ell`` generators (all of degree 1)."""
    if ell < 0:
        raise InvalidInputError("ell must be >= 0")
    G = np.array([_entries(g) for g in generators], dtype=np.int64)
    if G.size == 0:
        raise InvalidInputError("no generators")
    if not np.all(G[:, -1] == 1):
        raise PreconditionError("every generator must have s-degree 1")
    return hilbert_table(G, ell)[-1]


def hilbert_table(generators, ell_max: int) -> list[int]:
    """``[H(0), ..., H(ell_max)]`` by level-by-level expansion."""
    G = np.array([_entries(g) for g in generators], dtype=np.int64)
    level = np.zeros((1, G.shape[1]), dtype=np.int64)
    out = [1]
    for _ in range(ell_max):
        level = np.unique((level[:, None, :] + G[None, :, :]).reshape(-1, G.shape[1]), axis=0)
        out.append(level.shape[0])
    return out


def hilbert_polynomial(ell: int):
    """``(5/2) l^2 + (3/2) l + 1`` as an exact integer."""
    return (5 * ell * ell + 3 * ell + 2) // 2


def hilbert_polynomial_check(ell_max: int) -> bool:
    """Hilbert function of the N = 1 semigroup equals the polynomial for all l <= ell_max.

    Twice the leading coefficient is 5, the degree of the image surface.
    """
    table = hilbert_table(initial_generators(1), ell_max)
    return all(h == hilbert_polynomial(ell) for ell, h in enumerate(table))


# --- Graver basis ----------------------------------------------------------------

GRAVER_MATRIX = ((1, 0, 1, 0), (0, 1, 2, 3))

# y1 y2^2 - y3, y2^3 - y4, y1 y4 - y2 y3, y1^2 y2 y4 - y3^2, y1^3 y4^2 - y3^3
EXPECTED_GRAVER = frozenset({(1, 2, -1, 0), (0, 3, 0, -1), (1, -1, -1, 1), (2, 1, -2, 1),
                          (3, 0, -3, 2)})


def _conformal_below(w: np.ndarray, z: np.ndarray) -> bool:
    """``w`` is sign-compatible with ``z`` and no larger in any coordinate."""
    return bool(np.all(w * z >= 0) and np.all(np.abs(w) <= np.abs(z)))


def graver_bruteforce(A, box: int = 4, max_candidates: int = 5_000_000) -> set[Binomial]:
    """Primitive binomials of the toric ideal of ``A`` with entries in ``[-box, box]``.

    A kernel vector ``z`` is primitive when no other nonzero kernel vector
    ``w != z`` has ``w+ <= z+`` and ``w- <= z-``.  Any such ``w`` lies in the
    same box, so the enumeration is complete for the box.  One representative
    per sign pair is returned (first nonzero entry positive).
    """
    A = np.asarray(A, dtype=np.int64)
    if A.ndim != 2:
        raise InvalidInputError("A must be a matrix")
    if box < 1:
        raise InvalidInputError("box must be >= 1")
    n = A.shape[1]
    count = (2 * box + 1) ** n
    if count > max_candidates:
        raise ResourceError(f"{count} candidate vectors exceed the budget of {max_candidates}")
    rng = np.arange(-box, box + 1)
    Z = np.array(np.meshgrid(*([rng] * n), indexing="ij")).reshape(n, -1).T
    K = Z[np.all(Z @ A.T == 0, axis=1) & np.any(Z != 0, axis=1)]
    out = set()
    for z in K:
        dominated = False
        for w in K:
            if np.array_equal(w, z):
                continue
            if _conformal_below(w, z):
                dominated = True
                break
        if not dominated:
            out.add(Binomial.from_vector(z).normalized())
    return out


# --- toric ideal of X_{ij} ----------------------------------------------------------

def _y(k: int, s: int) -> int:
    return 4 * (k - 1) + s


def binomials_Xij(i: int, j: int, n: int | None = None) -> list[Binomial]:
    """The 10 generators of ``I(X_{i,j})``, listed row by row (left, right).

    Vectors live in ``P^{4n}`` with ``n = max(i, j)`` unless given.
    """
    if i == j:
        raise InvalidInputError("need two distinct oscillators")
    if min(i, j) < 1:
        raise InvalidInputError("oscillator indices are 1-based")
    n = max(i, j) if n is None else n
    if max(i, j) > n:
        raise InvalidInputError(f"index exceeds N={n}")
    d = 4 * n + 1

    def mono(*terms):
        e = [0] * d
        for idx, power in terms:
            e[idx] += power
        return tuple(e)

    def one(k):
        return [
            (mono((_y(k, 2), 1), (_y(k, 3), 1)), mono((_y(k, 1), 1), (_y(k, 4), 1))),
            (mono((0, 2), (_y(k, 4), 1)), mono((_y(k, 2), 3))),
            (mono((0, 2), (_y(k, 3), 1)), mono((_y(k, 1), 1), (_y(k, 2), 2))),
            (mono((0, 2), (_y(k, 3), 2)), mono((_y(k, 1), 2), (_y(k, 2), 1), (_y(k, 4), 1))),
        ]

    rows = list(zip(one(i), one(j)))
    last_left = (mono((_y(i, 1), 2), (_y(i, 2), 1), (_y(i, 4), 1), (_y(j, 3), 2)),
                 mono((_y(i, 3), 2), (_y(j, 1), 2), (_y(j, 2), 1), (_y(j, 4), 1)))
    last_right = (mono((_y(i, 1), 3), (_y(i, 4), 2), (_y(j, 3), 2)),
                  mono((_y(i, 3), 3), (_y(j, 1), 2), (_y(j, 2), 1), (_y(j, 4), 1)))
    rows.append((last_left, last_right))
    return [Binomial(p, m) for pair in rows for p, m in pair]


def all_toric_generators(n: int) -> list[Binomial]:
    """The 5 N (N - 1) binomials over all pairs ``i < j``.

    Each pair contributes 10 binomials; the per-oscillator ones repeat across
    pairs and are kept, giving ``10 * C(N, 2) = 5 N (N - 1)``.
    """
    return [b for i, j in itertools.combinations(range(1, n + 1), 2) for b in binomials_Xij(i, j, n)]


def _random_uv(n: int, trials: int, rng) -> tuple[np.ndarray, np.ndarray]:
    shape = (trials, n)
    u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return u, v


def _chart(u, v) -> np.ndarray:
    """``[1 : u_1 : v_1 : u_1 v_1^2 : v_1^3 : ...]`` per row."""
    trials, n = u.shape
    y = np.ones((trials, 4 * n + 1), dtype=complex)
    y[:, 1::4], y[:, 2::4], y[:, 3::4], y[:, 4::4] = u, v, u * v * v, v**3
    return y


def _theta(u, v) -> np.ndarray:
    """``[1 : theta_{1,1} : ... : theta_{N,4}]`` per row."""
    trials, n = u.shape
    r2 = u * u + v * v
    y = np.ones((trials, 4 * n + 1), dtype=complex)
    y[:, 1::4], y[:, 2::4], y[:, 3::4], y[:, 4::4] = u, v, r2 * u, r2 * v
    return y


def verify_vanishing(binomial: Binomial, n: int, trials: int = 20, tol: float = 1e-10,
                     seed=None) -> bool:
    """Whether the binomial vanishes on the monomial parametrization of ``X_N``.

    Accepts projective vectors (length 4N + 1) or affine-chart vectors
    (length 4N, ``y_0`` dropped).
    """
    length = len(binomial.plus)
    if length not in (4 * n, 4 * n + 1):
        raise InvalidInputError(f"binomial has length {length}, expected {4 * n} or {4 * n + 1}")
    u, v = _random_uv(n, trials, np.random.default_rng(seed))
    y = _chart(u, v)
    if length == 4 * n:
        y = y[:, 1:]
    p, m = binomial.evaluate(y)
    return bool(np.all(np.abs(p - m) <= tol * (1 + np.abs(p) + np.abs(m))))


def _t(y, k, s):
    return y[:, _y(k, s)]


# phi_1 .. phi_10 in terms of theta_{k,s}; index order matches binomials_Xij.
KHOVANSKII_EXPECTED: dict[int, Callable] = {
    1: lambda y, i, j: np.zeros(y.shape[0]),
    2: lambda y, i, j: np.zeros(y.shape[0]),
    3: lambda y, i, j: _t(y, i, 1) ** 2 * _t(y, i, 2),
    4: lambda y, i, j: _t(y, j, 1) ** 2 * _t(y, j, 2),
    5: lambda y, i, j: _t(y, i, 1) ** 3,
    6: lambda y, i, j: _t(y, j, 1) ** 3,
    7: lambda y, i, j: _t(y, i, 1) ** 3 * _t(y, i, 3),
    8: lambda y, i, j: _t(y, j, 1) ** 3 * _t(y, j, 3),
    9: lambda y, i, j: (_t(y, i, 3) ** 2 * _t(y, j, 1) ** 3 * _t(y, j, 3)
                        - _t(y, i, 1) ** 3 * _t(y, i, 3) * _t(y, j, 3) ** 2),
    10: lambda y, i, j: (_t(y, i, 3) ** 3 * _t(y, j, 1) ** 3 * _t(y, j, 3)
                         - _t(y, i, 1) ** 3 * _t(y, i, 3) ** 2 * _t(y, j, 3) ** 2),
}


def khovanskii_residuals(i: int, j: int, trials: int = 20, seed=None,
                         expected: Mapping[int, Callable] | None = None) -> np.ndarray:
    """Scaled ``|phi_k - expected_k|`` per trial and identity, shape ``(trials, 10)``."""
    expected = KHOVANSKII_EXPECTED if expected is None else expected
    n = max(i, j)
    bins = binomials_Xij(i, j, n)
    u, v = _random_uv(n, trials, np.random.default_rng(seed))
    y = _theta(u, v)
    out = np.empty((trials, len(bins)))
    for k, b in enumerate(bins, start=1):
        p, m = b.evaluate(y)
        rhs = expected[k](y, i, j)
        out[:, k - 1] = np.abs(p - m - rhs) / (1 + np.abs(p) + np.abs(m))
    return out


def verify_khovanskii_identities(i: int, j: int, trials: int = 20, tol: float = 1e-10,
                                 seed=None, expected: Mapping[int, Callable] | None = None) -> bool:
    """Substituting ``y = theta`` into the 10 binomials gives the stated ``phi_k``.

    ``expected`` replaces the table of right-hand sides (used for mutation tests).
    """
    if i == j:
        raise InvalidInputError("need two distinct oscillators")
    return bool(np.all(khovanskii_residuals(i, j, trials, seed, expected) <= tol))
