"""Tetragonal t2g-hole g-factor model.

The ground Kramers doublet is a|t2(0),+-> +- i b|t2(+-1),-+> with the
amplitudes fixed by eta = delta / zeta (tetragonal splitting over the
one-electron spin-orbit constant). Principal values:

    g_par  = g_e (a^2 - b^2) - 2 k b^2
    g_perp = g_e a^2 + 2 sqrt(2) k a b

with the orbital reduction factor k = alpha^2 k0. Signed values are returned;
comparisons against measured g use magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CONSTANTS

K0 = 0.43
G_E = CONSTANTS.free_electron_g
ETA_STEP = 1e-3


@dataclass(frozen=True)
class LigandParams:
    eta_ratio: float
    k: float
    alpha_sq: float | None = None
    k0: float = K0
    g_e: float = G_E

    @classmethod
    def from_covalency(cls, eta_ratio: float, alpha_sq: float, k0: float = K0, g_e: float = G_E):
        if not 0.5 <= alpha_sq <= 1.0:
            raise ValueError(f"alpha_sq must lie in [0.5, 1], got {alpha_sq}")
        return cls(eta_ratio=eta_ratio, k=alpha_sq * k0, alpha_sq=alpha_sq, k0=k0, g_e=g_e)

    def g_factors(self) -> tuple[float, float]:
        return g_from_ab(ab_from_eta(self.eta_ratio), self.k, self.g_e)


@dataclass(frozen=True)
class ABCoefficients:
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or abs(self.a**2 + self.b**2 - 1) > 1e-12:
            raise ValueError(f"invalid amplitudes a={self.a}, b={self.b}")


def _b_squared(eta):
    eta = np.asarray(eta, dtype=float)
    r = (eta - 0.5) / np.sqrt(eta * eta - eta + 2.25)
    return 0.5 * (1.0 - r)


def ab_from_eta(eta: float) -> ABCoefficients:
    if not math.isfinite(eta):
        raise ValueError("eta must be finite")
    r = (eta - 0.5) / math.sqrt(eta * eta - eta + 2.25)
    a = math.sqrt(0.5 * (1.0 + r))
    b = math.sqrt(0.5 * (1.0 - r))
    # renormalize away the last-ulp drift at large |eta|
    n = math.hypot(a, b)
    return ABCoefficients(a / n, b / n)


def ab_from_angle(phi: float) -> ABCoefficients:
    """a = sin(phi), b = cos(phi) for an anisotropy angle phi in [0, pi/2]."""
    if not 0.0 <= phi <= math.pi / 2:
        raise ValueError(f"anisotropy angle must lie in [0, pi/2], got {phi}")
    return ABCoefficients(math.sin(phi), math.cos(phi))


def g_from_ab(ab: ABCoefficients, k: float, g_e: float = G_E) -> tuple[float, float]:
    a, b = ab.a, ab.b
    g_par = g_e * (a * a - b * b) - 2 * k * b * b
    g_perp = g_e * a * a + 2 * math.sqrt(2) * k * a * b
    return g_par, g_perp


def g_par_of_eta(eta, k, g_e: float = G_E):
    """Vectorized signed g_par over ``eta`` (and broadcastable ``k``)."""
    b2 = _b_squared(eta)
    return g_e * (1.0 - 2.0 * b2) - 2.0 * np.asarray(k) * b2


def g_perp_of_eta(eta, k, g_e: float = G_E):
    b2 = _b_squared(eta)
    a2 = 1.0 - b2
    return g_e * a2 + 2 * math.sqrt(2) * np.asarray(k) * np.sqrt(a2 * b2)


@dataclass(frozen=True)
class EtaRoot:
    eta: float
    g_par: float
    g_perp: float

    @property
    def branch(self) -> str:
        return "positive" if self.g_par >= 0 else "negative"


def solve_eta(
    g_par_target: float,
    k: float,
    eta_range: tuple[float, float] = (-100.0, 100.0),
    *,
    step: float = ETA_STEP,
    g_e: float = G_E,
    tol: float = 1e-9,
) -> list[EtaRoot]:
    """All eta in ``eta_range`` with |g_par(eta, k)| equal to the target.

    Dense scan at ``step`` followed by bisection; an empty list means no
    feasible eta exists in the range.
    """
    lo, hi = eta_range
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"eta range must be finite and ordered, got {eta_range}")
    if not 0.0 <= k <= K0:
        raise ValueError(f"k must lie in [0, {K0}], got {k}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    grid = lo + step * np.arange(n + 1)
    if hi - grid[-1] > 1e-12:
        grid = np.append(grid, hi)

    def resid(eta):
        return np.abs(g_par_of_eta(eta, k, g_e)) - g_par_target

    d = resid(grid)
    roots = []
    for idx in np.nonzero(d == 0.0)[0]:
        roots.append(float(grid[idx]))
    for idx in np.nonzero(d[:-1] * d[1:] < 0)[0]:
        a, b = float(grid[idx]), float(grid[idx + 1])
        da = float(d[idx])
        for _ in range(200):
            m = 0.5 * (a + b)
            dm = float(resid(m))
            if abs(dm) < tol or b - a < 1e-15 * max(1.0, abs(m)):
                break
            if (dm < 0) == (da < 0):
                a, da = m, dm
            else:
                b = m
        roots.append(m)
    roots.sort()
    out = []
    for eta in roots:
        if out and abs(eta - out[-1].eta) < step / 2:
            continue
        out.append(EtaRoot(eta, float(g_par_of_eta(eta, k, g_e)), float(g_perp_of_eta(eta, k, g_e))))
    return out


def boundary_note(g_par_target: float, k: float, g_e: float = G_E) -> str | None:
    """Describe targets that are reached only in an eta -> +-infinity limit."""
    notes = []
    upper = g_e + 2 * k
    if g_par_target >= upper:
        notes.append(f"|g_par| < g_e + 2k = {upper:.6g} for every finite eta; the bound is approached only as eta -> -inf")
    if abs(g_par_target - g_e) <= 1e-12 * g_e or g_par_target > g_e:
        notes.append(f"positive branch g_par -> g_e = {g_e:.6g} only as eta -> +inf")
    return "; ".join(notes) or None


@dataclass(frozen=True)
class FeasibilityBound:
    bound: float  # analytic supremum of |g_par|
    k_at_max: float
    b_sq_at_max: float
    grid_max: float | None = None
    grid_argmax: tuple[float, float] | None = None  # (eta, k)

    @property
    def attained(self) -> bool:
        """The supremum sits at b^2 = 1, i.e. eta -> -inf, unless k = 0."""
        return self.b_sq_at_max == 0.0


def feasible_gmax(k_range: tuple[float, float] = (0.0, K0), g_e: float = G_E) -> FeasibilityBound:
    """Supremum of |g_par| over all eta and k in ``k_range``.

    g_par is affine in b^2, so the extremes sit at b^2 = 0 (value g_e) and
    b^2 = 1 (value -(g_e + 2k)).
    """
    k_lo, k_hi = k_range
    if not 0.0 <= k_lo <= k_hi <= K0:
        raise ValueError(f"k range must satisfy 0 <= k_lo <= k_hi <= {K0}, got {k_range}")
    if k_hi > 0:
        return FeasibilityBound(bound=g_e + 2 * k_hi, k_at_max=k_hi, b_sq_at_max=1.0)
    return FeasibilityBound(bound=g_e, k_at_max=0.0, b_sq_at_max=0.0)


def grid_gmax(
    eta_range=(-100.0, 100.0),
    k_range=(0.0, K0),
    eta_step: float = 1e-3,
    k_step: float = 1e-3,
    g_e: float = G_E,
    chunk: int = 20000,
) -> tuple[float, float, float]:
    """Brute-force max of |g_par| on a dense (eta, k) grid; returns (max, eta, k)."""
    n_eta = int(round((eta_range[1] - eta_range[0]) / eta_step)) + 1
    n_k = int(round((k_range[1] - k_range[0]) / k_step)) + 1
    etas = eta_range[0] + eta_step * np.arange(n_eta)
    ks = k_range[0] + k_step * np.arange(n_k)
    best = (-1.0, 0.0, 0.0)
    for start in range(0, n_eta, chunk):
        e = etas[start:start + chunk]
        vals = np.abs(g_par_of_eta(e[:, None], ks[None, :], g_e))
        idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[idx] > best[0]:
            best = (float(vals[idx]), float(e[idx[0]]), float(ks[idx[1]]))
    return best


def forward_table(etas, k: float, g_e: float = G_E) -> list[dict]:
    rows = []
    for eta in etas:
        ab = ab_from_eta(float(eta))
        gp, gq = g_from_ab(ab, k, g_e)
        rows.append({"eta": float(eta), "k": k, "a": ab.a, "b": ab.b, "g_par": gp, "g_perp": gq,
                     "abs_g_par": abs(gp), "abs_g_perp": abs(gq)})
    return rows
