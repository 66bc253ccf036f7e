"""Reference computations that share no code path with the package."""

from fractions import Fraction

import mpmath as mp
import numpy as np


def negative_count(m: np.ndarray, x: float) -> int:
    """Eigenvalues of real symmetric ``m`` below ``x`` (Sylvester inertia via LDL^T pivots)."""
    a = m - x * np.eye(len(m))
    a = a.astype(float).copy()
    n = len(a)
    neg = 0
    for k in range(n):
        piv = a[k, k]
        if piv == 0.0:
            piv = 1e-300
        if piv < 0:
            neg += 1
        if k + 1 < n:
            col = a[k + 1:, k] / piv
            a[k + 1:, k + 1:] -= np.outer(col, a[k, k + 1:])
    return neg


def hermitian_eigs_bisection(h: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Eigenvalues of complex Hermitian ``h`` by bisection on the inertia count.

    Uses the real 2n x 2n embedding [[Re, -Im], [Im, Re]], whose spectrum is
    that of ``h`` with every eigenvalue doubled.
    """
    n = len(h)
    big = np.block([[h.real, -h.imag], [h.imag, h.real]])
    r = float(np.max(np.sum(np.abs(big), axis=1))) + 1.0
    out = []
    for k in range(n):
        target = 2 * k + 1  # the (2k+1)-th smallest of the doubled spectrum
        lo, hi = -r, r
        while hi - lo > tol * r:
            mid = 0.5 * (lo + hi)
            if negative_count(big, mid) >= target:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def sum_m_squared(s: Fraction) -> Fraction:
    m = s
    total = Fraction(0)
    while m >= -s:
        total += m * m
        m -= 1
    return total


def ligand_ab_mp(eta):
    mp.mp.dps = 40
    eta = mp.mpf(eta)
    r = (eta - mp.mpf(1) / 2) / mp.sqrt(eta**2 - eta + mp.mpf(9) / 4)
    return mp.sqrt((1 + r) / 2), mp.sqrt((1 - r) / 2)


def ligand_g_mp(eta, k, g_e):
    a, b = ligand_ab_mp(eta)
    k = mp.mpf(k)
    g_e = mp.mpf(g_e)
    return g_e * (a**2 - b**2) - 2 * k * b**2, g_e * a**2 + 2 * mp.sqrt(2) * k * a * b


def trapezoid(y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))
