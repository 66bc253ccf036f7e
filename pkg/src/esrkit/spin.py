"""Angular-momentum matrices and their embedding on the electron x nuclear
product space.

Basis conventions: single spins use |m> with m = s, s-1, ..., -s. The product
space is ordered |M_S, M_I> with M_S the outer (slow) index and M_I the inner
index, both descending. For S = I = 1/2 the indices are

    0: |+1/2, +1/2>   1: |+1/2, -1/2>   2: |-1/2, +1/2>   3: |-1/2, -1/2>
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def validate_spin(s) -> Fraction:
    """Return ``s`` as an exact half-integer, raising ``ValueError`` otherwise."""
    try:
        value = float(s)
    except (TypeError, ValueError):
        raise ValueError(f"spin must be a number, got {s!r}") from None
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"spin must be a non-negative half-integer, got {s!r}")
    twice = round(2 * value)
    if abs(2 * value - twice) > 1e-12:
        raise ValueError(f"spin must be a non-negative half-integer, got {s!r}")
    return Fraction(twice, 2)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OperatorSet:
    """Spin operators on a (possibly composite) Hilbert space.

    ``sz, sx, sy, s_plus, s_minus`` act on the electron spin; the ``i*``
    operators act on the nuclear spin and are ``None`` for a bare spin set
    from :func:`spin_matrices`. All arrays are complex and read-only.
    """

    S: Fraction
    I: Fraction | None
    sz: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    iz: np.ndarray | None = None
    ix: np.ndarray | None = None
    iy: np.ndarray | None = None
    i_plus: np.ndarray | None = None
    i_minus: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def electron(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sx, self.sy, self.sz

    def nuclear(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.iz is None:
            raise ValueError("operator set carries no nuclear spin")
        return self.ix, self.iy, self.iz


def spin_matrices(s) -> OperatorSet:
    """Spin-``s`` matrices in the descending |m> basis.

    >>> spin_matrices(0.5).sz.real
    array([[ 0.5,  0. ],
           [ 0. , -0.5]])
    """
    s = validate_spin(s)
    sf = float(s)
    m = sf - np.arange(int(2 * s) + 1)
    sz = np.diag(m)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1)); row k has m[k], column k+1 has m[k]-1
    sp = np.diag(np.sqrt(sf * (sf + 1) - m[1:] * (m[1:] + 1)), k=1)
    sm = sp.T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return OperatorSet(
        S=s, I=None,
        sz=_frozen(sz), sx=_frozen(sx), sy=_frozen(sy),
        s_plus=_frozen(sp), s_minus=_frozen(sm),
    )


def embed_product(elec: OperatorSet, nuc: OperatorSet) -> OperatorSet:
    """Tensor electron operators with the nuclear identity and vice versa."""
    one_e = np.eye(elec.dim)
    one_n = np.eye(nuc.dim)

    def e(op):
        return _frozen(np.kron(op, one_n))

    def n(op):
        return _frozen(np.kron(one_e, op))

    return OperatorSet(
        S=elec.S, I=nuc.S,
        sz=e(elec.sz), sx=e(elec.sx), sy=e(elec.sy),
        s_plus=e(elec.s_plus), s_minus=e(elec.s_minus),
        iz=n(nuc.sz), ix=n(nuc.sx), iy=n(nuc.sy),
        i_plus=n(nuc.s_plus), i_minus=n(nuc.s_minus),
    )


def product_operators(S, I) -> OperatorSet:
    """Shortcut for ``embed_product(spin_matrices(S), spin_matrices(I))``."""
    return embed_product(spin_matrices(S), spin_matrices(I))


def product_labels(S, I) -> list[tuple[float, float]]:
    """(M_S, M_I) label of each product-basis index."""
    S = float(validate_spin(S))
    I = float(validate_spin(I))
    ms = S - np.arange(int(2 * S) + 1)
    mi = I - np.arange(int(2 * I) + 1)
    return [(float(a), float(b)) for a in ms for b in mi]
