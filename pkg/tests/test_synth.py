import math

import numpy as np
import pytest

from esrkit import CONSTANTS, SpinSystem
from esrkit.lineshape import AsymmetryParams
from esrkit.synth import ModeSpec, mode_window, resonator_baseline_db, synth_map

SYS = SpinSystem(g_par=5.51)
MODE = ModeSpec(4.546e8)
B_RES = MODE.frequency / (5.51 * CONSTANTS.bohr_hz_per_tesla)


def fine_grid(half=2e-5, n=201):
    return np.linspace(B_RES - half, B_RES + half, n)


def test_mode_window_centre_exact():
    f = mode_window(MODE, 101, 5)
    assert f[50] == MODE.frequency
    assert f[0] == pytest.approx(MODE.frequency - 5 * MODE.linewidth)
    with pytest.raises(ValueError):
        mode_window(MODE, 100, 5)


def test_baseline_peaks_at_mode():
    f = mode_window(MODE, 101, 5)
    base = resonator_baseline_db(f, [MODE], -20.0)
    assert base[50] == pytest.approx(-20.0)
    assert np.argmax(base) == 50
    # amplitude -3 dB... of power: |S21| falls by 1/sqrt(2) at f +- linewidth/2
    half = resonator_baseline_db([MODE.frequency + MODE.linewidth / 2], [MODE], 0.0)
    assert half[0] == pytest.approx(-10 * math.log10(2), rel=1e-12)


def test_dip_at_resonance_field():
    m = synth_map(SYS, [MODE], fine_grid())
    tr = m.trace(0)
    k = int(np.argmin(tr.s21_db))
    assert abs(tr.b_points[k] - B_RES) <= (tr.b_points[1] - tr.b_points[0])
    # |<+|Sx|->|^2 = 1/4 for S = 1/2
    assert m.s21_db[k, m.center_columns[0]] == pytest.approx(-20.0 - 10 * 0.25, abs=0.01)


def test_zero_depth_is_flat():
    m = synth_map(SYS, [MODE], fine_grid(), spin_signal_depth=0.0)
    np.testing.assert_array_equal(m.s21_db, np.tile(m.s21_db[0], (m.s21_db.shape[0], 1)))


def test_determinism_and_seed_dependence():
    a = synth_map(SYS, [MODE], fine_grid(n=21), noise_db=0.1, seed=7)
    b = synth_map(SYS, [MODE], fine_grid(n=21), noise_db=0.1, seed=7)
    c = synth_map(SYS, [MODE], fine_grid(n=21), noise_db=0.1, seed=8)
    assert np.array_equal(a.s21_db, b.s21_db)
    assert not np.array_equal(a.s21_db, c.s21_db)
    assert a.rng_seed == 7


def test_noise_rms():
    m0 = synth_map(SYS, [MODE], fine_grid(n=101), spin_signal_depth=0.0)
    m = synth_map(SYS, [MODE], fine_grid(n=101), spin_signal_depth=0.0, noise_db=0.2, seed=1)
    assert np.std(m.s21_db - m0.s21_db) == pytest.approx(0.2, rel=0.05)


def test_argmin_independent_of_depth():
    grid = fine_grid()
    mins = {int(np.argmin(synth_map(SYS, [MODE], grid, spin_signal_depth=d).trace(0).s21_db))
            for d in (0.5, 3.0, 10.0, 40.0)}
    assert len(mins) == 1


def test_asymmetry_mirrors_about_line_centre():
    grid = np.linspace(B_RES - 2e-5, B_RES + 2e-5, 401)
    flat = synth_map(SYS, [MODE], grid, spin_signal_depth=0.0).trace(0).s21_db
    dip_p = flat - synth_map(SYS, [MODE], grid, asym=AsymmetryParams(0.4)).trace(0).s21_db
    dip_m = flat - synth_map(SYS, [MODE], grid, asym=AsymmetryParams(-0.4)).trace(0).s21_db
    # mirrored asymmetry reflects the dip about the resonance field
    k = int(np.argmin(np.abs(grid - B_RES)))
    span = min(k, len(grid) - 1 - k)
    upper = np.interp(2 * B_RES - grid[k - span:k + span + 1], grid, dip_m)
    np.testing.assert_allclose(dip_p[k - span:k + span + 1], upper, atol=5e-3)
    assert synth_map(SYS, [MODE], grid, asym=AsymmetryParams(0.4)).metadata["line_shape"].endswith("(phenomenological)")


def test_three_modes_layout():
    modes = [ModeSpec(f) for f in (0.4546e9, 0.5993e9, 0.6228e9)]
    m = synth_map(SYS, modes, np.linspace(0, 0.01, 5))
    assert m.s21_db.shape == (5, 303)
    for i, mode in enumerate(modes):
        assert m.f_axis[m.center_columns[i]] == mode.frequency
        b, f, s = m.mode_map(i)
        assert s.shape == (5, 101)


def test_overlapping_modes_rejected():
    with pytest.raises(ValueError, match="overlap"):
        synth_map(SYS, [ModeSpec(4.546e8), ModeSpec(4.55e8)])


@pytest.mark.parametrize("kw", [{"spin_signal_depth": -1}, {"noise_db": -0.1}, {"b_grid": [0.1, 0.05]}])
def test_argument_validation(kw):
    with pytest.raises(ValueError):
        synth_map(SYS, [MODE], **kw)


def test_output_is_read_only():
    m = synth_map(SYS, [MODE], fine_grid(n=11))
    with pytest.raises(ValueError):
        m.s21_db[0, 0] = 0.0
