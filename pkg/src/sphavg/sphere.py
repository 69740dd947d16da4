"""Geometry primitives for the unit sphere S^{d-1}.

Vectors are plain float ndarrays. A "unit vector" is any 1-d array of
length d >= 2 with Euclidean norm 1 (within 1e-9); `as_unit` builds one by
renormalizing, which keeps long simulation runs from accumulating drift.
"""

import numpy as np

UNIT_NORM_TOL = 1e-9
_MIN_NORM = 1e-300


def as_unit(coords) -> np.ndarray:
    """Validate and renormalize coordinates into a unit vector.

    Raises ValueError for d < 2 (the sphere degenerates) or a near-zero
    input norm.
    """
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ValueError(f"unit vectors need d >= 2, got shape {v.shape}")
    nrm = float(np.linalg.norm(v))
    if not np.isfinite(nrm) or nrm <= _MIN_NORM:
        raise ValueError("cannot normalize a (near-)zero or non-finite vector")
    return v / nrm


def is_unit(v, tol: float = UNIT_NORM_TOL) -> bool:
    """True if ``v`` has unit norm within ``tol``."""
    return abs(float(np.linalg.norm(v)) - 1.0) <= tol


def sample_uniform(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw uniform point(s) on S^{d-1} (Gaussian draw + normalization).

    Returns shape (d,) for ``size=None``, else (size, d). The sampler is
    rotation invariant and rejection free.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if size is None:
        g = rng.standard_normal(d)
        return g / np.linalg.norm(g)
    g = rng.standard_normal((size, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def project_tangent(base: np.ndarray, v) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the tangent space at ``base``.

    Computes v - (v . base) base for unit-norm ``base``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != base.shape:
        raise ValueError(f"shape mismatch: base {base.shape}, v {v.shape}")
    return v - np.dot(v, base) * base


def retract(v) -> np.ndarray:
    """Renormalize ``v`` back onto the sphere after a discrete step."""
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm <= _MIN_NORM:
        raise ValueError("degenerate retraction: input norm is (near-)zero")
    return v / nrm


def spherical_even_moment(d: int, two_k: int) -> float:
    """Closed-form moment E[z_1^{2k}] for z uniform on S^{d-1}.

    ``two_k`` is the full power 2k. The value is
    (2k-1)!! / prod_{j=0}^{k-1} (d + 2j), which is Theta(d^{-k}).
    Odd powers return 0 by symmetry rather than raising, so callers can
    form k*(m_{k-1} - m_{k+1}) uniformly over parities.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if two_k < 0:
        raise ValueError(f"moment order must be >= 0, got {two_k}")
    if two_k % 2 == 1:
        return 0.0
    k = two_k // 2
    num = 1.0
    den = 1.0
    for j in range(k):
        num *= 2 * j + 1  # (2k-1)!! built as 1*3*...*(2k-1)
        den *= d + 2 * j
    return num / den
