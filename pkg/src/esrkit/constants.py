"""CODATA constants used throughout the package (SI units)."""

from dataclasses import dataclass

from scipy import constants as _sc

_pc = _sc.physical_constants


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = _sc.h  # J s
    bohr_magneton: float = _pc["Bohr magneton"][0]  # J/T
    boltzmann: float = _sc.k  # J/K
    vacuum_permeability: float = _sc.mu_0  # T m/A
    free_electron_g: float = -_pc["electron g factor"][0]
    gamma_electron: float = _pc["electron gyromag. ratio"][0]  # rad/(s T)
    gamma_proton: float = _pc["proton gyromag. ratio"][0]  # rad/(s T)

    @property
    def bohr_hz_per_tesla(self) -> float:
        """beta/h in Hz/T."""
        return self.bohr_magneton / self.h


CONSTANTS = PhysicalConstants()
