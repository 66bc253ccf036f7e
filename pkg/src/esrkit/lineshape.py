"""Normalized line-shape densities (unit area over frequency)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def lorentzian(w, w0, fwhm):
    """(1/pi) (fwhm/2) / ((w - w0)^2 + (fwhm/2)^2), in 1/Hz."""
    if not fwhm > 0:
        raise ValueError(f"fwhm must be > 0, got {fwhm}")
    hw = 0.5 * fwhm
    x = np.asarray(w, dtype=float) - w0
    return (hw / math.pi) / (x * x + hw * hw)


def asym_lorentzian(w, w0, gamma_left, gamma_right):
    """Two-half-width Lorentzian: FWHM ``gamma_left`` below ``w0``, ``gamma_right`` above.

    Both halves share the peak value 4 / (pi (gamma_left + gamma_right)), which
    keeps the density continuous and of unit total area.
    """
    if not (gamma_left > 0 and gamma_right > 0):
        raise ValueError("both half-widths must be > 0")
    x = np.asarray(w, dtype=float) - w0
    peak = 4.0 / (math.pi * (gamma_left + gamma_right))
    width = np.where(x < 0, gamma_left, gamma_right)
    u = 2.0 * x / width
    return peak / (1.0 + u * u)


@dataclass(frozen=True)
class AsymmetryParams:
    """Line asymmetry a_s = (G_R - G_L) / (G_R + G_L) at fixed mean width.

    This two-half-width form is a phenomenological choice and is labelled as
    such wherever it lands in output metadata.
    """

    a_s: float

    LABEL = "two-half-width Lorentzian (phenomenological)"

    def __post_init__(self):
        if not -1.0 < self.a_s < 1.0:
            raise ValueError(f"a_s must lie in (-1, 1), got {self.a_s}")

    def widths(self, fwhm: float) -> tuple[float, float]:
        """(gamma_left, gamma_right) with mean equal to ``fwhm``."""
        return fwhm * (1.0 - self.a_s), fwhm * (1.0 + self.a_s)

    def mirrored(self) -> AsymmetryParams:
        return AsymmetryParams(-self.a_s)


def line_profile(w, w0, fwhm, asym: AsymmetryParams | None = None):
    """Shape scaled to unit peak height."""
    if asym is None:
        return lorentzian(w, w0, fwhm) * (math.pi * fwhm / 2.0)
    gl, gr = asym.widths(fwhm)
    return asym_lorentzian(w, w0, gl, gr) * (math.pi * (gl + gr) / 4.0)
