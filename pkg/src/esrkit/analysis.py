"""Line finding on field sweeps, effective-g regression and spin-parameter
refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .constants import CONSTANTS
from .hamiltonian import SpinSystem, transition_table

MAD_TO_SIGMA = 1.4826


@dataclass
class SweepTrace:
    mode_frequency: float
    b_points: np.ndarray
    s21_db: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.b_points = np.asarray(self.b_points, dtype=float)
        self.s21_db = np.asarray(self.s21_db, dtype=float)
        if self.b_points.shape != self.s21_db.shape or self.b_points.ndim != 1:
            raise ValueError("b_points and s21_db must be 1-D and of equal length")
        if np.any(np.diff(self.b_points) <= 0):
            raise ValueError("b_points must be strictly increasing")
        if not self.mode_frequency > 0:
            raise ValueError("mode_frequency must be > 0")


@dataclass(frozen=True)
class PeakEstimate:
    b_center: float
    depth_db: float
    fwhm_b: float
    snr: float

    def to_dict(self) -> dict:
        return {"b_center": self.b_center, "depth_db": self.depth_db,
                "fwhm_b": self.fwhm_b, "snr": self.snr}


def robust_baseline(y) -> tuple[float, float]:
    """Median level and MAD-derived noise RMS."""
    y = np.asarray(y, dtype=float)
    base = float(np.median(y))
    return base, MAD_TO_SIGMA * float(np.median(np.abs(y - base)))


def _lorentz3(b, d):
    """Vertex of 1/depth through three samples.

    A Lorentzian dip has 1/depth quadratic in field, so the vertex gives the
    exact centre, peak depth and half width from three samples, however
    sparse. Returns None when the samples do not describe a dip.
    """
    if np.any(d <= 0):
        return None
    x0 = b[1]
    scale = max(b[2] - b[0], 1e-300)
    x = (b - x0) / scale
    r = 1.0 / d
    c2, c1, c0 = np.polyfit(x, r, 2)
    if not c2 > 0:
        return None
    xv = -c1 / (2 * c2)
    r0 = c0 - c1 * c1 / (4 * c2)
    if not r0 > 0:
        return None
    center = x0 + xv * scale
    if not b[0] <= center <= b[2]:
        return None
    return center, 1.0 / r0, math.sqrt(r0 / c2) * scale


def _parabola3(b, y):
    x0 = b[1]
    scale = max(b[2] - b[0], 1e-300)
    c2, c1, c0 = np.polyfit((b - x0) / scale, y, 2)
    if not c2 > 0:
        return x0, float(y[1])
    xv = float(np.clip(-c1 / (2 * c2), (b[0] - x0) / scale, (b[2] - x0) / scale))
    return x0 + xv * scale, float(c0 + c1 * xv + c2 * xv * xv)


def _half_depth_crossings(b, y, i, level):
    n = len(y)
    left = right = None
    for k in range(i, 0, -1):
        if y[k - 1] >= level:
            left = b[k - 1] + (level - y[k - 1]) * (b[k] - b[k - 1]) / (y[k] - y[k - 1])
            break
    for k in range(i, n - 1):
        if y[k + 1] >= level:
            right = b[k] + (level - y[k]) * (b[k + 1] - b[k]) / (y[k + 1] - y[k])
            break
    return left, right


def _polish_lorentzian(b, y, i, base, center, depth, hw, window):
    """Least-squares Lorentzian with a free local baseline.

    The median level is biased by the tails of the line itself, which matters
    when the line is narrower than the field step; fitting the baseline
    alongside removes that bias. Returns None unless the fit lands inside the
    bracketing samples.
    """
    lo = max(0, i - window)
    hi = min(len(y), i + window + 1)
    bw, yw = b[lo:hi], y[lo:hi]
    if len(bw) < 5:
        return None
    step = float(b[min(i + 1, len(b) - 1)] - b[max(i - 1, 0)]) / 2
    x = (bw - b[i]) / step
    w0 = max(hw / step, 1e-6) if hw else 0.5
    x0 = (center - b[i]) / step
    d0 = max(depth, 1e-30)

    def model(p):
        return p[0] - np.exp(p[3]) / ((x - p[1]) ** 2 + np.exp(2 * p[2]))

    p0 = np.array([base, x0, math.log(w0), math.log(d0 * (w0 * w0 + 0.0))])
    try:
        res = least_squares(lambda p: model(p) - yw, p0, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=2000)
    except (ValueError, np.linalg.LinAlgError):
        return None
    if not res.success:
        return None
    bl, xc, lw, ls = res.x
    if not (abs(xc) <= 1.0 and np.all(np.isfinite(res.x))):
        return None
    w = math.exp(lw)
    return b[i] + xc * step, math.exp(ls) / (w * w), w * step, bl


def detect_peaks(trace: SweepTrace, snr_threshold: float = 5.0) -> list[PeakEstimate]:
    """Dips deeper than ``snr_threshold`` robust noise RMS below the median level.

    Returns peaks ordered by field. Each isolated minimum is refined by
    three-point reciprocal-parabola interpolation (exact for a Lorentzian dip
    given the baseline), then polished by a local Lorentzian least-squares fit
    with a free baseline. An ordinary parabola in dB is the fallback when the
    samples are not dip-shaped.
    """
    if not snr_threshold > 0:
        raise ValueError("snr_threshold must be > 0")
    b, y = trace.b_points, trace.s21_db
    if len(y) < 5:
        raise ValueError(f"need at least 5 points, got {len(y)}")
    base, noise = robust_baseline(y)
    floor = 1e-9 * max(1.0, abs(base))
    thr = max(snr_threshold * noise, floor)
    idx, props = find_peaks(-y, height=-(base - thr), prominence=thr, plateau_size=1)
    step = float(np.median(np.diff(b)))
    out = []
    for n_peak, (i, le, re) in enumerate(zip(idx, props["left_edges"], props["right_edges"])):
        local_base = base
        if re > le:
            # flat-bottomed minimum: take the plateau midpoint
            center = 0.5 * (b[le] + b[re])
            depth = base - float(y[i])
            left, right = _half_depth_crossings(b, y, le, base - depth / 2)
            fwhm = (right - left) if left is not None and right is not None else b[re] - b[le]
        elif 0 < i < len(y) - 1:
            bb, yy = b[i - 1:i + 2], y[i - 1:i + 2]
            fit = _lorentz3(bb, base - yy)
            if fit is not None:
                center, depth, hw = fit
            else:
                center, ymin = _parabola3(bb, yy)
                depth, hw = base - ymin, None
            # keep the polish window clear of neighbouring dips
            gaps = [abs(int(j) - int(i)) for j in idx if j != i]
            window = max(4, int(2 * (hw or step) / step) * 4)
            if gaps:
                window = min(window, max(2, min(gaps) // 2))
            polished = _polish_lorentzian(b, y, i, base, center, depth, hw, window)
            if polished is not None:
                center, depth, hw, local_base = polished
            fwhm = 2 * hw if hw else None
            dn = local_base - yy
            if (dn[0] >= depth / 2 and dn[2] >= depth / 2) or fwhm is None:
                left, right = _half_depth_crossings(b, y, i, local_base - depth / 2)
                if left is not None and right is not None and right > left:
                    fwhm = right - left
        else:
            center, depth = float(b[i]), base - float(y[i])
            left, right = _half_depth_crossings(b, y, i, base - depth / 2)
            fwhm = (right - left) if left is not None and right is not None else None
        if fwhm is None or not fwhm > 0:
            fwhm = step
        center = float(min(max(center, b[0]), b[-1]))
        snr = depth / max(noise, floor)
        out.append(PeakEstimate(center, float(depth), float(fwhm), float(snr)))
    out.sort(key=lambda p: p.b_center)
    return out


@dataclass(frozen=True)
class GFitResult:
    g_eff: float
    intercept: float  # Hz
    residuals: np.ndarray  # Hz, f - fit
    covariance: np.ndarray  # of (g_eff, intercept)
    slope: float  # Hz/T
    force_zero_intercept: bool

    @property
    def g_sigma(self) -> float:
        return float(math.sqrt(self.covariance[0, 0]))

    def to_dict(self) -> dict:
        return {
            "g_eff": self.g_eff,
            "intercept_hz": self.intercept,
            "slope_hz_per_tesla": self.slope,
            "residuals_hz": [float(r) for r in self.residuals],
            "covariance": [[_finite_or_none(v) for v in row] for row in self.covariance],
            "force_zero_intercept": self.force_zero_intercept,
        }


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def fit_g_linear(points, force_zero_intercept: bool = True) -> GFitResult:
    """Least-squares f = (g beta / h) B + c over (B_res, f) pairs."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    n = len(pts)
    need = 1 if force_zero_intercept else 2
    if n < need:
        raise ValueError(f"need at least {need} point(s) for this fit, got {n}")
    B, f = pts[:, 0], pts[:, 1]
    X = B[:, None] if force_zero_intercept else np.column_stack([B, np.ones(n)])
    coef, *_ = np.linalg.lstsq(X, f, rcond=None)
    resid = f - X @ coef
    dof = n - X.shape[1]
    xtx_inv = np.linalg.inv(X.T @ X)
    s2 = float(resid @ resid) / dof if dof > 0 else math.nan
    cov_coef = s2 * xtx_inv
    to_g = 1.0 / CONSTANTS.bohr_hz_per_tesla
    cov = np.zeros((2, 2))
    cov[0, 0] = cov_coef[0, 0] * to_g**2
    if not force_zero_intercept:
        cov[0, 1] = cov[1, 0] = cov_coef[0, 1] * to_g
        cov[1, 1] = cov_coef[1, 1]
    slope = float(coef[0])
    intercept = 0.0 if force_zero_intercept else float(coef[1])
    return GFitResult(slope * to_g, intercept, resid, cov, slope, force_zero_intercept)


# -- parameter refinement -------------------------------------------------

FREE_PARAMETERS = ("g_par", "A_par", "E_rhombic", "D_fine")


@dataclass
class FitReport:
    converged: bool
    objective: float  # Hz^2
    iterations: int
    cycles: int
    residuals: list[float]  # Hz, f_mode - predicted
    history: list[float]  # best objective after each iteration
    free: tuple[str, ...]
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "objective_hz2": self.objective,
            "iterations": self.iterations,
            "cycles": self.cycles,
            "residuals_hz": self.residuals,
            "free": list(self.free),
            "message": self.message,
        }


def predicted_frequency(sys: SpinSystem, B: float, theta: float, f_mode: float) -> float:
    """Allowed transition frequency at ``B`` closest to ``f_mode`` (0 when none)."""
    lines = transition_table(sys, max(B, 0.0), theta)
    if not lines:
        return 0.0
    return min((ln.frequency for ln in lines), key=lambda f: abs(f - f_mode))


def nelder_mead(fun, x0, steps, *, max_iter=5000, rtol=1e-10, atol=0.0, xtol=1e-13):
    """Plain Nelder-Mead simplex.

    Convergence is checked once per cycle (n + 1 iterations): the best value
    must have changed by less than ``rtol`` relative and the simplex values
    spread by less than ``rtol`` relative, or the best value must be <= atol.
    A simplex shrunk below ``xtol`` relative to the best vertex also stops the
    search, since objective differences there are floating-point round-off.
    Returns (x_best, f_best, iterations, cycles, history, converged).
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    simplex = [x0.copy()]
    for i in range(n):
        x = x0.copy()
        x[i] += steps[i]
        simplex.append(x)
    values = [fun(x) for x in simplex]
    history = []
    it = cycles = 0
    cycle_start = min(values)
    if cycle_start <= atol:
        k = int(np.argmin(values))
        return simplex[k], values[k], 0, 0, history, True
    while it < max_iter:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[k] for k in order]
        values = [values[k] for k in order]
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fun(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fun(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = fun(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                best = simplex[0]
                for k in range(1, n + 1):
                    simplex[k] = best + 0.5 * (simplex[k] - best)
                    values[k] = fun(simplex[k])
        it += 1
        history.append(min(values))
        if it % (n + 1) == 0:
            cycles += 1
            fbest, fworst = min(values), max(values)
            if fbest <= atol:
                break
            scale = max(abs(fbest), np.finfo(float).tiny)
            if abs(cycle_start - fbest) <= rtol * scale and fworst - fbest <= rtol * scale:
                break
            best = simplex[int(np.argmin(values))]
            size = max(float(np.max(np.abs(x - best))) for x in simplex)
            if size <= xtol * max(float(np.max(np.abs(best))), np.finfo(float).tiny):
                break
            cycle_start = fbest
    k = int(np.argmin(values))
    converged = it < max_iter
    return simplex[k], values[k], it, cycles, history, converged


def fit_spin_params(lines, model: SpinSystem, free=("g_par",), *, max_iter: int = 5000):
    """Refine the ``free`` fields of ``model`` against (mode, peak) pairs.

    Minimizes the sum over lines of (f_mode - predicted transition frequency
    at the peak field)^2 with a derivative-free simplex. Returns the refined
    SpinSystem and a :class:`FitReport`.
    """
    lines = list(lines)
    free = tuple(free)
    unknown = [p for p in free if p not in FREE_PARAMETERS]
    if unknown:
        raise ValueError(f"unknown free parameters {unknown}; allowed {FREE_PARAMETERS}")
    if not free:
        raise ValueError("at least one free parameter is required")
    if len(lines) < len(free):
        raise ValueError(
            f"underdetermined fit: {len(lines)} line(s) for {len(free)} free parameter(s)"
        )

    def build(x):
        return model.with_(**{name: float(v) for name, v in zip(free, x)})

    def residuals(sys):
        return [m.frequency - predicted_frequency(sys, p.b_center, m.theta, m.frequency)
                for m, p in lines]

    def objective(x):
        try:
            sys = build(x)
        except ValueError:
            return math.inf
        return float(sum(r * r for r in residuals(sys)))

    x0 = np.array([getattr(model, name) for name in free], dtype=float)
    steps = [0.05 * abs(v) if v != 0 else 1e5 for v in x0]
    # below (1e-6 Hz)^2 per line the objective is eigensolver round-off
    atol = 1e-12 * len(lines)
    x, fbest, it, cycles, history, converged = nelder_mead(
        objective, x0, steps, max_iter=max_iter, atol=atol
    )
    sys = build(x)
    report = FitReport(
        converged=converged, objective=fbest, iterations=it, cycles=cycles,
        residuals=residuals(sys), history=history, free=free,
        message="converged" if converged else f"iteration budget {max_iter} exhausted; best-so-far returned",
    )
    return sys, report
