"""Cyclic Jacobi diagonalization for small dense Hermitian matrices."""

from __future__ import annotations

import numpy as np

HERMITIAN_RTOL = 1e-10
OFF_DIAG_RTOL = 1e-13
MAX_SWEEPS = 60


class ConvergenceError(RuntimeError):
    """Raised when the sweep budget is exhausted; carries the final residual."""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eigensolve(h, *, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of Hermitian ``h``.

    Columns of the returned matrix are the eigenvectors. Iterates cyclic
    Jacobi sweeps until the off-diagonal Frobenius norm is below
    ``1e-13 * ||h||_F``.

    Raises
    ------
    ValueError
        If ``h`` is not square or fails the Hermiticity check (1e-10 relative).
    ConvergenceError
        If the tolerance is not reached within ``max_sweeps`` sweeps.
    """
    a = np.array(h, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    norm = float(np.linalg.norm(a))
    if np.linalg.norm(a - a.conj().T) > HERMITIAN_RTOL * max(norm, np.finfo(float).tiny):
        raise ValueError("matrix is not Hermitian within 1e-10 relative")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    target = OFF_DIAG_RTOL * norm

    sweeps = 0
    off = _off_norm(a)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})",
                residual=off, sweeps=sweeps,
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # phase makes the pivot real, then a real rotation annihilates it
                phase = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u
        sweeps += 1
        off = _off_norm(a)

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
