"""Synthetic (B, f) transmission maps of spin lines seen through resonator modes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import SweepTrace
from .hamiltonian import SWEEP_STEP, SpinSystem, sweep_grid, transition_table
from .lineshape import AsymmetryParams, line_profile

DB_CONVENTION = "20*log10(|S21|)"


@dataclass(frozen=True)
class ModeSpec:
    frequency: float
    loaded_q: float = 1000.0
    theta: float = math.pi / 2
    fill_factor: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValueError(f"mode frequency must be > 0, got {self.frequency}")
        if not (math.isfinite(self.loaded_q) and self.loaded_q > 0):
            raise ValueError(f"loaded_q must be > 0, got {self.loaded_q}")
        if not 0 < self.fill_factor <= 1:
            raise ValueError(f"fill_factor must lie in (0, 1], got {self.fill_factor}")

    @property
    def linewidth(self) -> float:
        """Mode FWHM f/Q in Hz."""
        return self.frequency / self.loaded_q


@dataclass(frozen=True)
class SpectrumMap:
    """|S21| in dB on a (B, f) grid; ``s21_db[i, j]`` belongs to ``b_axis[i]``, ``f_axis[j]``."""

    b_axis: np.ndarray
    f_axis: np.ndarray
    s21_db: np.ndarray
    rng_seed: int
    modes: tuple[ModeSpec, ...] = ()
    mode_slices: tuple[slice, ...] = ()
    center_columns: tuple[int, ...] = ()
    metadata: dict = field(default_factory=dict)

    def mode_map(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sl = self.mode_slices[index]
        return self.b_axis, self.f_axis[sl], self.s21_db[:, sl]

    def trace(self, index: int) -> SweepTrace:
        """Field sweep at the centre frequency of mode ``index``."""
        col = self.center_columns[index]
        return SweepTrace(
            mode_frequency=float(self.f_axis[col]),
            b_points=self.b_axis.copy(),
            s21_db=self.s21_db[:, col].copy(),
            metadata={"seed": self.rng_seed, "source": "synth", "mode_index": index},
        )


def mode_window(mode: ModeSpec, points: int, span_linewidths: float) -> np.ndarray:
    if points < 3 or points % 2 == 0:
        raise ValueError("frequency points per mode must be an odd number >= 3")
    half = span_linewidths * mode.linewidth
    f = np.linspace(mode.frequency - half, mode.frequency + half, points)
    f[points // 2] = mode.frequency
    return f


def resonator_baseline_db(f, modes, peak_db: float) -> np.ndarray:
    """Sum of single-pole mode responses (amplitude), rendered in dB."""
    f = np.asarray(f, dtype=float)
    amp = np.zeros_like(f)
    peak = 10.0 ** (peak_db / 20.0)
    for m in modes:
        x = 2.0 * m.loaded_q * (f - m.frequency) / m.frequency
        amp = amp + peak / np.sqrt(1.0 + x * x)
    return 20.0 * np.log10(amp)


def _check_modes(modes, span_linewidths):
    ordered = sorted(modes, key=lambda m: m.frequency)
    for lo, hi in zip(ordered, ordered[1:]):
        if hi.frequency - lo.frequency <= span_linewidths * (lo.linewidth + hi.linewidth):
            raise ValueError(
                f"mode windows overlap: {lo.frequency:.6g} Hz and {hi.frequency:.6g} Hz"
            )
    return ordered


def synth_map(
    sys: SpinSystem,
    modes,
    b_grid=None,
    spin_signal_depth: float = 10.0,
    asym: AsymmetryParams | None = None,
    noise_db: float = 0.0,
    seed: int = 0,
    *,
    freq_points: int = 101,
    span_linewidths: float = 5.0,
    baseline_peak_db: float = -20.0,
) -> SpectrumMap:
    """Synthesize a transmission map.

    At every field each drive-allowed transition subtracts
    ``spin_signal_depth * intensity * profile(f)`` dB, where ``profile`` is the
    unit-peak line shape centred on the transition frequency. Subtracting in
    dB is multiplying in linear power. Gaussian noise of RMS ``noise_db`` is
    drawn row by row from streams spawned off ``seed``.
    """
    modes = list(modes)
    if not modes:
        raise ValueError("at least one mode is required")
    if spin_signal_depth < 0:
        raise ValueError("spin_signal_depth must be >= 0")
    if noise_db < 0:
        raise ValueError("noise_db must be >= 0")
    modes = _check_modes(modes, span_linewidths)
    if b_grid is None:
        b_grid = sweep_grid(0.0, 0.015, SWEEP_STEP)
    b_axis = np.asarray(b_grid, dtype=float)
    if b_axis.ndim != 1 or len(b_axis) < 2 or np.any(np.diff(b_axis) <= 0):
        raise ValueError("field grid must be strictly increasing with >= 2 points")
    if b_axis[0] < 0:
        raise ValueError("field grid must be non-negative")

    windows = [mode_window(m, freq_points, span_linewidths) for m in modes]
    f_axis = np.concatenate(windows)
    slices, centers, start = [], [], 0
    for w in windows:
        slices.append(slice(start, start + len(w)))
        centers.append(start + len(w) // 2)
        start += len(w)

    base = resonator_baseline_db(f_axis, modes, baseline_peak_db)
    s21 = np.tile(base, (len(b_axis), 1))
    thetas = sorted({m.theta for m in modes})
    if spin_signal_depth > 0:
        for row, B in enumerate(b_axis):
            lines = {th: transition_table(sys, float(B), th) for th in thetas}
            for m, sl in zip(modes, slices):
                f = f_axis[sl]
                for line in lines[m.theta]:
                    s21[row, sl] -= spin_signal_depth * line.intensity * line_profile(
                        f, line.frequency, line.width_fwhm, asym
                    )
    if noise_db > 0:
        streams = np.random.SeedSequence(seed).spawn(len(b_axis))
        for row, ss in enumerate(streams):
            s21[row] += np.random.default_rng(ss).normal(0.0, noise_db, size=s21.shape[1])

    metadata = {
        "db_convention": DB_CONVENTION,
        "spin_signal_depth_db": spin_signal_depth,
        "noise_db": noise_db,
        "baseline_peak_db": baseline_peak_db,
        "line_shape": "Lorentzian" if asym is None else AsymmetryParams.LABEL,
        "asymmetry_a_s": None if asym is None else asym.a_s,
    }
    for a in (b_axis, f_axis, s21):
        a.setflags(write=False)
    return SpectrumMap(
        b_axis=b_axis, f_axis=f_axis, s21_db=s21, rng_seed=int(seed),
        modes=tuple(modes), mode_slices=tuple(slices), center_columns=tuple(centers),
        metadata=metadata,
    )
