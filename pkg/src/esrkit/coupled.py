"""Low-field coupled |F, M_F> basis for S = I = 1/2.

State vectors are expressed on the product basis ordered
|+1/2,+1/2>, |+1/2,-1/2>, |-1/2,+1/2>, |-1/2,-1/2> (M_S outer, M_I inner).

Two mixing angles are kept apart on purpose. :func:`mixing_angle` evaluates the
closed form quoted for the |1,0> / |0,0> pair as written. :func:`lowfield_levels`
diagonalizes an isotropic-hyperfine Breit-Rabi Hamiltonian and extracts the
angle from the numerical eigenvector; the two are compared, never merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS
from .eigen import eigensolve
from .spin import product_operators

LABELS = ("|1,1>", "|1,0>", "|1,-1>", "|0,0>")
QUANTUM_NUMBERS = {"|1,1>": (1, 1), "|1,0>": (1, 0), "|1,-1>": (1, -1), "|0,0>": (0, 0)}


class MixingDomainError(ValueError):
    """Field lies outside the real domain of the closed-form mixing angle."""

    def __init__(self, B: float, crossover_field: float):
        super().__init__(
            f"mixing angle undefined at B={B:.6g} T: |(gamma_S - gamma_I) B / 2pi| exceeds A; "
            f"real domain ends at the crossover field {crossover_field:.6g} T"
        )
        self.B = B
        self.crossover_field = crossover_field


def crossover_field(A: float, gamma_s: float, gamma_i: float) -> float:
    """Field where (gamma_S - gamma_I) B / 2pi equals A (Hz)."""
    return 2 * math.pi * A / abs(gamma_s - gamma_i)


def mixing_angle(
    A: float,
    gamma_s: float = CONSTANTS.gamma_electron,
    gamma_i: float = CONSTANTS.gamma_proton,
    B: float = 0.0,
) -> float:
    """Closed-form mixing angle phi in rad.

    ``A`` is in Hz and the gyromagnetic ratios in rad/(s T); the Zeeman
    difference is converted to Hz before it meets ``A``.
    """
    if not A > 0:
        raise ValueError(f"hyperfine constant must be > 0, got {A}")
    x = (gamma_s - gamma_i) * B / (2 * math.pi)
    disc = A * A - x * x
    if disc < 0:
        raise MixingDomainError(B, crossover_field(A, gamma_s, gamma_i))
    return math.atan((x + math.sqrt(disc)) / A)


@dataclass(frozen=True)
class CoupledStates:
    mixing_angle: float
    states: dict[str, np.ndarray]
    g_F: float | None = None

    def labels(self):
        return LABELS

    def F(self, label: str) -> int:
        return QUANTUM_NUMBERS[label][0]

    def M_F(self, label: str) -> int:
        return QUANTUM_NUMBERS[label][1]

    def matrix(self) -> np.ndarray:
        """Columns are the states in ``LABELS`` order."""
        return np.column_stack([self.states[k] for k in LABELS])


def coupled_states(phi: float, g_F: float | None = None) -> CoupledStates:
    if not math.isfinite(phi):
        raise ValueError("mixing angle must be finite")
    c, s = math.cos(phi), math.sin(phi)
    states = {
        "|1,1>": np.array([1, 0, 0, 0], dtype=complex),
        "|1,0>": np.array([0, c, s, 0], dtype=complex),
        "|1,-1>": np.array([0, 0, 0, 1], dtype=complex),
        "|0,0>": np.array([0, -s, c, 0], dtype=complex),
    }
    for v in states.values():
        v.setflags(write=False)
    return CoupledStates(mixing_angle=phi, states=states, g_F=g_F)


def lowfield_hamiltonian(A: float, gamma_s: float, gamma_i: float, B: float) -> np.ndarray:
    """(gamma_S/2pi) B Sz - (gamma_I/2pi) B Iz + A S.I, in Hz."""
    ops = product_operators(0.5, 0.5)
    sx, sy, sz = ops.electron()
    ix, iy, iz = ops.nuclear()
    return (
        gamma_s * B / (2 * math.pi) * sz
        - gamma_i * B / (2 * math.pi) * iz
        + A * (sx @ ix + sy @ iy + sz @ iz)
    )


def numeric_mixing_angle(A: float, gamma_s: float, gamma_i: float, B: float) -> float:
    """Angle of the upper M_F = 0 eigenvector, written as cos|+-> + sin|-+>."""
    h = lowfield_hamiltonian(A, gamma_s, gamma_i, B)
    block = h[np.ix_([1, 2], [1, 2])]
    _, v = eigensolve(block)
    upper = v[:, 1]
    # remove the arbitrary global phase, then fix the sign of the |+-> amplitude
    k = int(np.argmax(np.abs(upper)))
    upper = upper * (abs(upper[k]) / upper[k])
    c, s = upper.real
    if c < 0:
        c, s = -c, -s
    return math.atan2(s, c)


def coupled_g_factor(A: float, gamma_s: float, gamma_i: float, B: float, dB: float = 1e-6) -> float:
    """Effective g of the F = 1 manifold from the field slope of E(1,+1) - E(1,-1).

    The slope is divided by beta/h times the M_F difference of 2.
    """
    def split(b):
        h = lowfield_hamiltonian(A, gamma_s, gamma_i, b)
        return (h[0, 0] - h[3, 3]).real

    lo = max(B - dB, 0.0)
    hi = B + dB
    slope = (split(hi) - split(lo)) / (hi - lo)
    return slope / (2 * CONSTANTS.bohr_hz_per_tesla)


@dataclass
class LowFieldReport:
    B: float
    A: float
    energies: np.ndarray
    states: np.ndarray
    overlaps: dict[str, float | None]
    numeric_mixing_angle: float
    closed_form_angle: float | None
    discrepancy: float | None
    domain_note: str | None = None
    g_F: float | None = None
    coupled: CoupledStates | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "B_tesla": self.B,
            "A_hz": self.A,
            "energies_hz": [float(e) for e in self.energies],
            "overlaps": self.overlaps,
            "closed_form_mixing_angle_rad": self.closed_form_angle,
            "numeric_mixing_angle_rad": self.numeric_mixing_angle,
            "angle_discrepancy_rad": self.discrepancy,
            "domain_note": self.domain_note,
            "g_F": self.g_F,
        }


def _eigenspace_overlap(psi, w, v, tol):
    """Largest projection norm of ``psi`` onto any (possibly degenerate) eigenspace."""
    best = 0.0
    k = 0
    while k < len(w):
        members = np.abs(w - w[k]) <= tol
        proj = v[:, members].conj().T @ psi
        best = max(best, float(np.linalg.norm(proj)))
        k = int(np.max(np.nonzero(members)[0])) + 1
    return best


def lowfield_levels(
    A: float,
    gamma_s: float = CONSTANTS.gamma_electron,
    gamma_i: float = CONSTANTS.gamma_proton,
    B: float = 0.0,
) -> LowFieldReport:
    """Diagonalize the low-field Hamiltonian and compare with the closed-form basis."""
    if not B >= 0:
        raise ValueError(f"field must be >= 0, got {B}")
    h = lowfield_hamiltonian(A, gamma_s, gamma_i, B)
    w, v = eigensolve(h)
    tol = 1e-9 * max(abs(A), float(np.max(np.abs(w))), 1.0)
    g_F = coupled_g_factor(A, gamma_s, gamma_i, B)
    phi_num = numeric_mixing_angle(A, gamma_s, gamma_i, B)
    try:
        phi = mixing_angle(A, gamma_s, gamma_i, B)
        note = None
    except MixingDomainError as exc:
        phi, note = None, str(exc)
    basis = coupled_states(phi if phi is not None else phi_num, g_F=g_F)
    overlaps = {}
    for label in LABELS:
        if phi is None and label in ("|1,0>", "|0,0>"):
            overlaps[label] = None
            continue
        overlaps[label] = _eigenspace_overlap(basis.states[label], w, v, tol)
    return LowFieldReport(
        B=B, A=A, energies=w, states=v, overlaps=overlaps,
        numeric_mixing_angle=phi_num, closed_form_angle=phi,
        discrepancy=None if phi is None else phi - phi_num,
        domain_note=note, g_F=g_F, coupled=basis,
    )


def discrepancy_table(A: float, fractions, gamma_s=CONSTANTS.gamma_electron, gamma_i=CONSTANTS.gamma_proton):
    """Closed-form vs numeric mixing angle at fields where (gamma_S - gamma_I)B/2pi = fraction * A."""
    bc = crossover_field(A, gamma_s, gamma_i)
    rows = []
    for frac in fractions:
        rep = lowfield_levels(A, gamma_s, gamma_i, frac * bc)
        rows.append({"zeeman_over_A": float(frac), **rep.to_dict()})
    return rows
