"""Minimum detectable spin number for a resonator ESR measurement and its
conversion to a lattice concentration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .constants import CONSTANTS
from .spin import validate_spin

CRYSTAL_DIAMETER = 3.27e-3  # m
CRYSTAL_HEIGHT = 3.66e-3  # m
STO_LATTICE_CONSTANT = 3.905e-10  # m


def cylinder_volume(diameter: float = CRYSTAL_DIAMETER, height: float = CRYSTAL_HEIGHT) -> float:
    return math.pi * (diameter / 2) ** 2 * height


@dataclass(frozen=True)
class SensitivityInput:
    """Inputs of the minimum-spin-number estimate.

    ``line_width`` and ``mode_frequency`` only enter as their ratio, so any
    common unit works (Hz by default). ``g`` defaults to the free-electron value.
    """

    mode_volume: float = cylinder_volume()
    sample_temperature: float = 0.02
    spin: float = 0.5
    g: float = CONSTANTS.free_electron_g
    fill_factor: float = 1.0
    loaded_q: float = 1000.0
    noise_power_ratio: float = 1.0
    line_width: float = 3e5
    mode_frequency: float = 4.546e8

    def __post_init__(self):
        s = validate_spin(self.spin)
        if s == 0:
            raise ValueError("spin must be > 0 (S(S+1) appears in a denominator)")
        for name in ("mode_volume", "sample_temperature", "g", "fill_factor", "loaded_q",
                     "noise_power_ratio", "line_width", "mode_frequency"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        if self.fill_factor > 1:
            raise ValueError(f"fill_factor must be <= 1, got {self.fill_factor}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LatticeSpec:
    lattice_constant: float = STO_LATTICE_CONSTANT
    sites_per_cell: int = 1

    def __post_init__(self):
        if not (self.lattice_constant > 0 and self.sites_per_cell > 0):
            raise ValueError("lattice constant and sites per cell must be positive")

    def site_count(self, volume: float) -> float:
        return self.sites_per_cell * volume / self.lattice_constant**3


def n_min(inp: SensitivityInput, constants=CONSTANTS) -> float:
    """(3 kB V T / (g^2 beta^2 mu0 S(S+1))) (dw/w) (1/(fill Q)) sqrt(Pn/P)."""
    s = float(inp.spin)
    thermal = 3 * constants.boltzmann * inp.mode_volume * inp.sample_temperature
    magnetic = inp.g**2 * constants.bohr_magneton**2 * constants.vacuum_permeability * s * (s + 1)
    return (
        thermal / magnetic
        * (inp.line_width / inp.mode_frequency)
        / (inp.fill_factor * inp.loaded_q)
        * math.sqrt(inp.noise_power_ratio)
    )


def ppm_of(count: float, volume: float, lattice: LatticeSpec = LatticeSpec()) -> float:
    if not (count > 0 and volume > 0):
        raise ValueError("count and volume must be positive")
    return 1e6 * count / lattice.site_count(volume)


def sensitivity_row(inp: SensitivityInput, lattice: LatticeSpec = LatticeSpec()) -> dict:
    n = n_min(inp)
    return {
        "mode_frequency": inp.mode_frequency,
        "loaded_q": inp.loaded_q,
        "n_min": n,
        "sites": lattice.site_count(inp.mode_volume),
        "ppm": ppm_of(n, inp.mode_volume, lattice),
    }
