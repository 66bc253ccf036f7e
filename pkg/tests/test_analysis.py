import math

import numpy as np
import pytest

from esrkit import CONSTANTS, SpinSystem
from esrkit.analysis import (
    PeakEstimate,
    SweepTrace,
    detect_peaks,
    fit_g_linear,
    fit_spin_params,
    nelder_mead,
    robust_baseline,
)
from esrkit.hamiltonian import SWEEP_STEP, resonance_fields, sweep_grid
from esrkit.synth import ModeSpec, synth_map

BH = CONSTANTS.bohr_hz_per_tesla


def lorentz_trace(b, centers, depth=2.0, hw=1e-5, base=-20.0, noise=0.0, seed=0):
    y = np.full_like(b, base)
    for c in centers:
        y -= depth / (1 + ((b - c) / hw) ** 2)
    if noise:
        y += np.random.default_rng(seed).normal(0, noise, b.size)
    return SweepTrace(4.546e8, b, y)


def test_single_dip_recovered():
    b = np.linspace(0, 0.01, 201)
    peaks = detect_peaks(lorentz_trace(b, [0.00431]))
    assert len(peaks) == 1
    p = peaks[0]
    assert p.b_center == pytest.approx(0.00431, abs=1e-9)
    assert p.depth_db == pytest.approx(2.0, rel=1e-4)
    assert p.fwhm_b == pytest.approx(2e-5, rel=1e-3)


def test_offset_invariance():
    b = np.linspace(0, 0.01, 201)
    a = detect_peaks(lorentz_trace(b, [0.0043], base=-20.0, noise=0.01, seed=3))
    c = detect_peaks(SweepTrace(4.546e8, b, lorentz_trace(b, [0.0043], base=-20.0, noise=0.01, seed=3).s21_db + 7.5))
    assert [p.b_center for p in a] == pytest.approx([p.b_center for p in c], abs=1e-9)


def test_two_separated_dips():
    b = np.linspace(0, 0.01, 1001)
    peaks = detect_peaks(lorentz_trace(b, [0.003, 0.007], hw=5e-5))
    assert [p.b_center for p in peaks] == pytest.approx([0.003, 0.007], abs=1e-8)


def test_flat_trace_has_no_peaks():
    b = np.linspace(0, 0.01, 101)
    assert detect_peaks(SweepTrace(4.5e8, b, np.full_like(b, -20.0))) == []
    noisy = np.random.default_rng(0).normal(-20, 0.1, b.size)
    assert detect_peaks(SweepTrace(4.5e8, b, noisy), snr_threshold=6) == []


def test_noise_threshold_scales_with_mad():
    y = np.random.default_rng(1).normal(0, 2.0, 20001)
    base, sigma = robust_baseline(y)
    assert sigma == pytest.approx(2.0, rel=0.03)


def test_undersampled_line_on_protocol_grid():
    # 300 kHz line at g = 5.51 is ~4 uT wide, far below the 0.4 mT step
    sys = SpinSystem(g_par=5.51)
    m = synth_map(sys, [ModeSpec(4.546e8)])
    p = detect_peaks(m.trace(0))
    assert len(p) == 1
    assert p[0].b_center == pytest.approx(4.546e8 / (5.51 * BH), rel=1e-6)


def test_trace_validation():
    with pytest.raises(ValueError):
        SweepTrace(4.5e8, np.array([0.0, 0.1, 0.05]), np.zeros(3))
    with pytest.raises(ValueError):
        SweepTrace(4.5e8, np.array([0.0, 0.1]), np.zeros(3))
    with pytest.raises(ValueError):
        detect_peaks(lorentz_trace(np.linspace(0, 1, 101), [0.5]), snr_threshold=0)


def test_fit_g_exact():
    B = np.array([0.005, 0.0077, 0.0081])
    pts = np.column_stack([B, 5.51 * BH * B])
    r = fit_g_linear(pts)
    assert r.g_eff == pytest.approx(5.51, rel=1e-12)
    assert np.max(np.abs(r.residuals)) < 1e-3
    free = fit_g_linear(pts, force_zero_intercept=False)
    assert free.intercept == pytest.approx(0.0, abs=1e-2)


def test_fit_g_needs_points():
    assert fit_g_linear([(0.005, 5.51 * BH * 0.005)]).g_eff == pytest.approx(5.51)
    with pytest.raises(ValueError):
        fit_g_linear([(0.005, 1e8)], force_zero_intercept=False)
    with pytest.raises(ValueError):
        fit_g_linear([])


def test_fit_g_error_bars_cover_truth():
    rng = np.random.default_rng(42)
    B = np.linspace(0.004, 0.009, 8)
    sig = 2e5
    hits = 0
    trials = 2000
    for _ in range(trials):
        f = 5.51 * BH * B + rng.normal(0, sig, B.size)
        r = fit_g_linear(np.column_stack([B, f]), force_zero_intercept=False)
        hits += abs(r.g_eff - 5.51) < 3 * r.g_sigma
    assert hits / trials > 0.95


def _lines(g, freqs):
    sys = SpinSystem(g_par=g)
    out = []
    for f in freqs:
        m = ModeSpec(f)
        B = resonance_fields(sys, f, m.theta, (0, 0.02), step=1e-3)[0]
        out.append((m, PeakEstimate(B, 1.0, 4e-6, 100.0)))
    return out


def test_fit_spin_round_trip():
    lines = _lines(5.51, [0.4546e9, 0.5993e9, 0.6228e9])
    sys, rep = fit_spin_params(lines, SpinSystem(g_par=5.0))
    assert rep.converged
    assert sys.g_par == pytest.approx(5.51, rel=1e-6)
    hist = np.array(rep.history)
    assert np.all(np.diff(hist) <= 0)


def test_exact_guess_converges_immediately():
    # for S = 1/2 without hyperfine the resonance field is exactly f / (g beta/h)
    lines = [(ModeSpec(f), PeakEstimate(f / (5.51 * BH), 1.0, 4e-6, 100.0))
             for f in (0.4546e9, 0.6228e9)]
    sys, rep = fit_spin_params(lines, SpinSystem(g_par=5.51))
    assert rep.converged and rep.cycles <= 1
    assert sys.g_par == pytest.approx(5.51, rel=1e-9)
    assert rep.objective <= 1e-12 * len(lines)


def test_round_off_plateau_terminates():
    # bisected fields leave a ~0.1 Hz residual floor the simplex cannot beat
    lines = _lines(5.51, [0.4546e9, 0.6228e9])
    sys, rep = fit_spin_params(lines, SpinSystem(g_par=5.51))
    assert rep.converged
    assert sys.g_par == pytest.approx(5.51, rel=1e-8)


def test_minimum_is_stationary():
    lines = _lines(5.51, [0.4546e9, 0.5993e9])
    sys, rep = fit_spin_params(lines, SpinSystem(g_par=5.3))

    def obj(g):
        _, r = fit_spin_params(lines, SpinSystem(g_par=g), max_iter=0)
        return r.objective

    h = 1e-6
    grad = (obj(sys.g_par + h) - obj(sys.g_par - h)) / (2 * h)
    # scale: curvature * h ~ (f/g)^2 * h
    assert abs(grad) < 1e-3 * (0.5e9 / 5.51) ** 2 * h * 10


def test_underdetermined_and_unknown_parameters():
    lines = _lines(5.51, [0.4546e9])
    with pytest.raises(ValueError, match="underdetermined"):
        fit_spin_params(lines, SpinSystem(g_par=5.5), free=("g_par", "E_rhombic"))
    with pytest.raises(ValueError, match="unknown"):
        fit_spin_params(lines, SpinSystem(g_par=5.5), free=("g_perp",))


def test_noisy_pipeline_round_trip():
    sys = SpinSystem(g_par=5.51)
    modes = [ModeSpec(f) for f in (0.4546e9, 0.5993e9, 0.6228e9)]
    pts = []
    for i, m in enumerate(modes):
        b0 = m.frequency / (5.51 * BH)
        grid = np.linspace(b0 - 5e-5, b0 + 5e-5, 401)
        smap = synth_map(sys, [m], grid, noise_db=0.1, seed=11 + i)
        peaks = detect_peaks(smap.trace(0))
        assert len(peaks) == 1
        pts.append((peaks[0].b_center, m.frequency))
    assert fit_g_linear(pts).g_eff == pytest.approx(5.51, rel=0.01)


def test_nelder_mead_rosenbrock():
    def rosen(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    x, f, it, cycles, hist, ok = nelder_mead(rosen, [-1.2, 1.0], [0.1, 0.1], rtol=1e-14)
    assert ok
    assert x == pytest.approx([1.0, 1.0], abs=1e-4)
    assert all(a >= b for a, b in zip(hist, hist[1:]))


def test_nelder_mead_budget_exhausted():
    x, f, it, cycles, hist, ok = nelder_mead(lambda x: float(x[0] ** 2 + 1), [3.0], [1.0], max_iter=4)
    assert not ok and it == 4
