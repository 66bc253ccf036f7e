"""Spin Hamiltonian with the DC field along z, its level structure and the
drive-allowed transitions.

All energies are frequencies in Hz. The field enters only through
``g_par * beta * B / h``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np

from .constants import CONSTANTS
from .eigen import eigensolve
from .spin import OperatorSet, product_operators, validate_spin

SWEEP_STEP = 4e-4  # T
INTENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class SpinSystem:
    """One paramagnetic species. Couplings are in Hz."""

    S: float = 0.5
    I: float = 0.0
    g_par: float = 5.51
    g_perp: float = 0.0
    A_par: float = 0.0
    E_rhombic: float = 0.0
    D_fine: float = 0.0
    line_width_fwhm: float = 3e5

    def __post_init__(self):
        validate_spin(self.S)
        validate_spin(self.I)
        if not (math.isfinite(self.g_par) and self.g_par > 0):
            raise ValueError(f"g_par must be > 0, got {self.g_par}")
        if not (math.isfinite(self.line_width_fwhm) and self.line_width_fwhm > 0):
            raise ValueError(f"line_width_fwhm must be > 0, got {self.line_width_fwhm}")
        for name in ("g_perp", "A_par", "E_rhombic", "D_fine"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def operators(self) -> OperatorSet:
        return _operators(float(self.S), float(self.I))

    def with_(self, **changes) -> SpinSystem:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def _operators(S: float, I: float) -> OperatorSet:
    return product_operators(S, I)


@dataclass(frozen=True)
class TransitionLine:
    b_field: float
    frequency: float
    intensity: float
    lower_index: int
    upper_index: int
    width_fwhm: float


def zeeman_hz_per_tesla(g: float) -> float:
    return g * CONSTANTS.bohr_hz_per_tesla


def build_hamiltonian(sys: SpinSystem, B: float) -> np.ndarray:
    """Hamiltonian matrix (Hz) on the |M_S, M_I> product basis at field ``B``."""
    if not math.isfinite(B):
        raise ValueError(f"field must be finite, got {B}")
    ops = sys.operators
    s = float(sys.S)
    ident = ops.identity
    h = zeeman_hz_per_tesla(sys.g_par) * B * ops.sz
    if sys.E_rhombic:
        h = h + sys.E_rhombic * (ops.sx @ ops.sx + ops.sy @ ops.sy)
    if sys.A_par:
        h = h + sys.A_par * (ops.sz @ ops.iz)
    if sys.D_fine:
        h = h + sys.D_fine * (ops.sz @ ops.sz - s * (s + 1) / 3.0 * ident)
    return h


def levels(sys: SpinSystem, B: float) -> tuple[np.ndarray, np.ndarray]:
    return eigensolve(build_hamiltonian(sys, B))


def drive_operator(ops: OperatorSet, theta: float) -> np.ndarray:
    """cos(theta) Sz + sin(theta) Sx for a linearly polarized mode field."""
    return math.cos(theta) * ops.sz + math.sin(theta) * ops.sx


def _gap_tolerance(w: np.ndarray) -> float:
    return 1e-10 * max(float(np.max(np.abs(w))), 1.0)


def transition_table(sys: SpinSystem, B: float, theta: float = math.pi / 2) -> list[TransitionLine]:
    """Drive-allowed transitions at field ``B``, sorted by (lower, upper) index.

    Degenerate pairs (zero frequency) are skipped since their matrix elements
    depend on the arbitrary basis chosen inside the degenerate subspace.
    """
    if not B >= 0:
        raise ValueError(f"field must be >= 0, got {B}")
    w, v = levels(sys, B)
    m = v.conj().T @ drive_operator(sys.operators, theta) @ v
    tol = _gap_tolerance(w)
    out = []
    n = len(w)
    for i in range(n):
        for j in range(i + 1, n):
            f = w[j] - w[i]
            if f <= tol:
                continue
            inten = float(abs(m[j, i]) ** 2)
            if inten < INTENSITY_FLOOR:
                continue
            out.append(TransitionLine(float(B), float(f), inten, i, j, sys.line_width_fwhm))
    return out


def transition_frequency(sys: SpinSystem, B: float, lower: int, upper: int) -> float:
    w, _ = levels(sys, B)
    return float(w[upper] - w[lower])


def _pair_gaps(sys: SpinSystem, B: float) -> np.ndarray:
    w, _ = levels(sys, B)
    return w[None, :] - w[:, None]


def sweep_grid(b_min: float, b_max: float, step: float = SWEEP_STEP) -> np.ndarray:
    """Inclusive uniform grid; the last point is ``b_max`` when it is not on the step."""
    if not b_max > b_min:
        raise ValueError(f"field range must be ordered, got [{b_min}, {b_max}]")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    n = int(math.floor((b_max - b_min) / step + 1e-9))
    grid = b_min + step * np.arange(n + 1)
    if b_max - grid[-1] > 1e-9 * step:
        grid = np.append(grid, b_max)
    return grid


def resonance_fields(
    sys: SpinSystem,
    f_mode: float,
    theta: float = math.pi / 2,
    b_range: tuple[float, float] = (0.0, 1.0),
    *,
    step: float = SWEEP_STEP,
    tol_hz: float = 1.0,
) -> list[float]:
    """Fields in ``b_range`` where a drive-allowed transition hits ``f_mode``.

    Uniform pre-scan at ``step`` brackets every sign change of each level-pair
    gap minus ``f_mode``; each bracket is refined by bisection until the
    frequency mismatch is below ``tol_hz``.
    """
    if not f_mode > 0:
        raise ValueError(f"mode frequency must be > 0, got {f_mode}")
    b0, b1 = b_range
    if b0 < 0:
        raise ValueError("field range must be non-negative")
    grid = sweep_grid(b0, b1, step)
    gaps = np.array([_pair_gaps(sys, b) for b in grid]) - f_mode
    n = gaps.shape[1]
    roots = []
    for i in range(n):
        for j in range(i + 1, n):
            d = gaps[:, i, j]
            for k in range(len(grid) - 1):
                lo, hi = grid[k], grid[k + 1]
                dlo, dhi = d[k], d[k + 1]
                if dlo == 0.0:
                    root = lo
                elif dlo * dhi < 0:
                    root = _bisect(sys, i, j, f_mode, lo, hi, dlo, tol_hz)
                elif k == len(grid) - 2 and dhi == 0.0:
                    root = hi
                else:
                    continue
                if _allowed(sys, root, theta, i, j):
                    roots.append(float(root))
    roots.sort()
    unique = []
    for r in roots:
        if not unique or r - unique[-1] > 1e-12:
            unique.append(r)
    return unique


def _bisect(sys, i, j, f_mode, lo, hi, dlo, tol_hz, max_iter=200):
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        dm = transition_frequency(sys, mid, i, j) - f_mode
        if abs(dm) < tol_hz or hi - lo < 1e-15:
            break
        if (dm < 0) == (dlo < 0):
            lo, dlo = mid, dm
        else:
            hi = mid
    return mid


def _allowed(sys, B, theta, i, j) -> bool:
    w, v = levels(sys, B)
    m = v.conj().T @ drive_operator(sys.operators, theta) @ v
    return abs(m[j, i]) ** 2 >= INTENSITY_FLOOR and w[j] - w[i] > _gap_tolerance(w)
