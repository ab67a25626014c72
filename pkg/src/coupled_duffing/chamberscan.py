"""Real-solution chambers of the single-oscillator (omega, lambda) slice.

Along the slice built by :func:`~coupled_duffing.polysys.build_from_slice`
with ``eta = 1/2``, ``gamma = 1/100`` and ``F = 0`` the discriminant is

    p(omega, lambda)^3 * q(omega, lambda)^2 * lambda^2 * (omega^2 + 36)^10.

The last factor is positive on real grids and is not tracked.  A scan solves
every grid node with Algorithm 1 and records the number of real roots next to
the signs of ``p`` and ``q``.  Nodes within ``zero_tol`` of ``p = 0``,
``q = 0`` or ``lambda = 0`` get sign 0 and are left out of the chamber checks.

Which sign pattern carries which real count is not assumed anywhere: use
:func:`chamber_counts` on a scan to read the mapping off the data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .polysys import CoupledSystem, build_from_slice
from .solver import SolverConfig, solve_algorithm1_many

__all__ = [
    "SliceConfig",
    "ChamberGrid",
    "WIDE_PRESET",
    "slice_factors",
    "scan",
    "chambers",
    "chamber_violations",
    "chamber_counts",
    "unpaired_count",
    "export_csv",
    "load_csv",
]

CSV_COLUMNS = ("omega", "lambda", "n_real", "n_found", "sign_p", "sign_q", "solver_ok",
               "n_unpaired")


@dataclass(frozen=True)
class SliceConfig:
    """Slice parameters, scan box and grid resolution ``(n_omega, n_lambda)``."""

    eta: float = 0.5
    gamma_damp: float = 0.01
    F_drive: float = 0.0
    Theta: float = 0.0
    omega_range: tuple[float, float] = (0.98, 1.04)
    lambda_range: tuple[float, float] = (0.0, 0.04)
    resolution: tuple[int, int] = (60, 40)
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    zero_tol: float = 1e-12
    seed: int = 0
    chunk: int = 400

    def __post_init__(self):
        if len(self.resolution) != 2 or min(self.resolution) < 2:
            raise InvalidInputError(f"resolution must have two entries >= 2, got {self.resolution}")
        for name in ("omega_range", "lambda_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise InvalidInputError(f"{name} must be a nonempty interval, got {(lo, hi)}")
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))

    def replace(self, **changes) -> "SliceConfig":
        return replace(self, **changes)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(*self.omega_range, self.resolution[0]),
                np.linspace(*self.lambda_range, self.resolution[1]))


# Larger box: the q = 0 branch through (0.97, 0) bends visibly here.
WIDE_PRESET = SliceConfig(omega_range=(0.9, 1.15), lambda_range=(0.0, 0.15))


@dataclass
class ChamberGrid:
    """Per-node scan data; arrays have shape ``(n_omega, n_lambda)``.

    ``n_unpaired`` counts non-real roots whose conjugate is not among the
    roots; it is 0 for a clean solve at real parameters.
    """

    omega: np.ndarray
    lam: np.ndarray
    n_real: np.ndarray
    n_found: np.ndarray
    sign_p: np.ndarray
    sign_q: np.ndarray
    solver_ok: np.ndarray
    n_unpaired: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_real.shape

    @property
    def sign_lambda(self) -> np.ndarray:
        return np.sign(self.lam).astype(int)

    def real_counts(self) -> set[int]:
        return set(int(k) for k in np.unique(self.n_real[self.solver_ok]))

    def rows(self):
        """Flat rows in grid order (omega major)."""
        n0, n1 = self.shape
        for i in range(n0):
            for j in range(n1):
                yield (self.omega[i, j], self.lam[i, j], int(self.n_real[i, j]),
                       int(self.n_found[i, j]), int(self.sign_p[i, j]), int(self.sign_q[i, j]),
                       bool(self.solver_ok[i, j]), int(self.n_unpaired[i, j]))


def slice_factors(omega, lam):
    """``(p, q)`` as printed for ``eta = 1/2``, ``gamma = 1/100``."""
    w2 = np.square(omega)
    l2 = np.square(lam)
    p = 10000 * w2**2 - 19999 * w2 - 2500 * l2 + 10000
    q = 2500 * w2**3 - 4700 * w2**2 - 625 * w2 * l2 + 2209 * w2 - 22500 * l2
    return p, q


def _sign(x, tol):
    s = np.sign(x).astype(int)
    s[np.abs(x) <= tol] = 0
    return s


def unpaired_count(points: np.ndarray, real_mask: np.ndarray, tol: float = 1e-8) -> int:
    """Non-real roots without a conjugate partner among ``points``.

    A root within ``tol`` of its own conjugate counts as paired; this happens
    for near-real clusters on the discriminant.
    """
    Z = points[~real_mask]
    if Z.shape[0] == 0:
        return 0
    scale = 1.0 + np.linalg.norm(Z, axis=1)
    d = np.linalg.norm(Z[:, None, :] - Z.conj()[None, :, :], axis=2)
    return int(np.sum(d.min(axis=1) > tol * scale))


def _node_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, i, j]))


def scan(cfg: SliceConfig | None = None) -> ChamberGrid:
    """Solve every node of the grid; node ``(i, j)`` is seeded by ``(seed, i, j)``."""
    cfg = cfg or SliceConfig()
    w, l = cfg.axes()
    W, L = np.meshgrid(w, l, indexing="ij")
    n0, n1 = W.shape
    idx = [(i, j) for i in range(n0) for j in range(n1)]
    systems = [CoupledSystem((build_from_slice(W[i, j], L[i, j], cfg.eta, cfg.gamma_damp,
                                               cfg.F_drive, cfg.Theta),)) for i, j in idx]
    seeds = [_node_rng(cfg.seed, i, j) for i, j in idx]
    sets = []
    for k in range(0, len(idx), cfg.chunk):
        sets += solve_algorithm1_many(systems[k:k + cfg.chunk], cfg.solver_cfg,
                                      seeds[k:k + cfg.chunk])
    n_real = np.array([s.n_real for s in sets]).reshape(n0, n1)
    n_found = np.array([s.n_solutions for s in sets]).reshape(n0, n1)
    unpaired = np.array([unpaired_count(s.array(), np.array(s.is_real, dtype=bool),
                                        cfg.solver_cfg.dedup_tol)
                         for s in sets]).reshape(n0, n1)
    p, q = slice_factors(W, L)
    return ChamberGrid(W, L, n_real, n_found, _sign(p, cfg.zero_tol), _sign(q, cfg.zero_tol),
                       n_found == 5, unpaired)


def chambers(grid: ChamberGrid) -> tuple[np.ndarray, int]:
    """4-connected components of equal ``(sign_p, sign_q, sign_lambda)``.

    Flagged nodes (any sign 0) get label -1.  Returns labels and their count.
    """
    key = grid.sign_p * 9 + grid.sign_q * 3 + grid.sign_lambda
    flagged = (grid.sign_p == 0) | (grid.sign_q == 0) | (grid.sign_lambda == 0)
    labels = np.full(grid.shape, -1, dtype=int)
    n = 0
    for k in np.unique(key[~flagged]):
        lab, m = ndimage.label((key == k) & ~flagged)
        labels[lab > 0] = lab[lab > 0] - 1 + n
        n += m
    return labels, n


def chamber_violations(grid: ChamberGrid) -> list[int]:
    """Chamber labels whose solver_ok nodes disagree on the real count."""
    labels, n = chambers(grid)
    bad = []
    for c in range(n):
        vals = np.unique(grid.n_real[(labels == c) & grid.solver_ok])
        if vals.size > 1:
            bad.append(c)
    return bad


def chamber_counts(grid: ChamberGrid) -> dict[tuple[int, int, int], list[int]]:
    """Real counts seen per sign pattern ``(sign_p, sign_q, sign_lambda)``."""
    out: dict[tuple[int, int, int], set[int]] = {}
    sl = grid.sign_lambda
    for i, j in zip(*np.nonzero(grid.solver_ok)):
        key = (int(grid.sign_p[i, j]), int(grid.sign_q[i, j]), int(sl[i, j]))
        if 0 in key:
            continue
        out.setdefault(key, set()).add(int(grid.n_real[i, j]))
    return {k: sorted(v) for k, v in sorted(out.items())}


def export_csv(grid: ChamberGrid, path) -> None:
    """One row per node, omega major; floats written with ``repr``."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for om, la, nr, nf, sp, sq, ok, nu in grid.rows():
                w.writerow((repr(float(om)), repr(float(la)), nr, nf, sp, sq, int(ok), nu))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def load_csv(path) -> ChamberGrid:
    """Inverse of :func:`export_csv`."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise InvalidInputError(f"{path}: unexpected header {rows[:1]}")
    data = rows[1:]
    om = np.array([float(r[0]) for r in data])
    n0 = len(np.unique(om))
    if n0 == 0 or len(data) % n0:
        raise InvalidInputError(f"{path}: rows do not form a grid")
    shape = (n0, len(data) // n0)

    def col(k, conv, dtype):
        return np.array([conv(r[k]) for r in data], dtype=dtype).reshape(shape)

    return ChamberGrid(col(0, float, float), col(1, float, float), col(2, int, int),
                       col(3, int, int), col(4, int, int), col(5, int, int),
                       col(6, lambda s: bool(int(s)), bool), col(7, int, int))
