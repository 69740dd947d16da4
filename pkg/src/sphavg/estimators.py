"""Finalizing averaged trajectories: top eigenvector and correlations."""

from dataclasses import dataclass
from math import log

import numpy as np


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the last Rayleigh quotient.

    A near-degenerate top of the spectrum usually means the averaged
    second moment has no resolvable spike yet (T or n too small).
    """

    def __init__(self, message: str, rayleigh: float):
        super().__init__(message)
        self.rayleigh = rayleigh


@dataclass(frozen=True)
class AveragedSecondMoment:
    """Time average of iterate outer products over a trajectory.

    Symmetric, positive semidefinite, and unit trace (each outer product
    of a unit vector has trace one); construction validates all three.
    """

    matrix: np.ndarray
    total_time: float

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise ValueError("matrix is not symmetric within 1e-12")
        if abs(float(np.trace(m)) - 1.0) > 1e-9:
            raise ValueError(f"trace {np.trace(m)!r} is not 1 within 1e-9")
        if float(np.linalg.eigvalsh(m)[0]) < -1e-10:
            raise ValueError("matrix has an eigenvalue below -1e-10")


def top_eigenvector(m, tol: float = 1e-10, max_iter: int | None = None,
                    seed: int = 0, v0=None):
    """Leading eigenpair of a symmetric matrix by power iteration.

    Starts from a seeded random vector (or ``v0``), stops when consecutive
    Rayleigh quotients agree to relative ``tol``, and estimates the
    spectral gap with one deflated sweep. Returns (eigenvector, eigenvalue,
    gap_estimate); the eigenvector sign is unspecified.
    """
    matrix = m.matrix if isinstance(m, AveragedSecondMoment) else np.asarray(m, dtype=float)
    d = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != d:
        raise ValueError(f"matrix must be square, got {matrix.shape}")
    if max_iter is None:
        max_iter = max(100, int(10 * d * log(max(d, 2))))
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    v, lam = _power_iterate(matrix, tol, max_iter, seed, v0)
    deflated = matrix - lam * np.outer(v, v)
    try:
        _, lam2 = _power_iterate(deflated, max(tol, 1e-8), max_iter, seed + 1, None)
    except PowerIterationError as err:
        lam2 = err.rayleigh
    return v, lam, lam - lam2


def _power_iterate(matrix: np.ndarray, tol: float, max_iter: int, seed: int, v0):
    if v0 is None:
        v = np.random.default_rng(seed).standard_normal(matrix.shape[0])
    else:
        v = np.asarray(v0, dtype=float).copy()
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    lam = np.inf
    for _ in range(max_iter):
        w = matrix @ v
        lam = float(v @ w)
        # Rayleigh increments converge twice as fast as the eigenvector, so
        # also require the residual before declaring convergence
        if abs(lam - lam_prev) <= tol * abs(lam) and \
                float(np.linalg.norm(w - lam * v)) <= 10 * tol * abs(lam):
            return v, lam
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            # v is in the kernel; any vector is an eigenvector for eigenvalue 0
            return v, 0.0
        v = w / nrm
        lam_prev = lam
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last Rayleigh quotient {lam:.6e}); spectrum may be near-degenerate",
        rayleigh=lam,
    )


def correlation(u, v, symmetry: str = "signed") -> float:
    """Inner product of two unit vectors, absolute-valued when the model
    cannot distinguish +/- the planted direction (even links)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    c = float(np.dot(u, v))
    if symmetry == "signed":
        return c
    if symmetry == "absolute":
        return abs(c)
    raise ValueError(f"symmetry must be 'signed' or 'absolute', got {symmetry!r}")
