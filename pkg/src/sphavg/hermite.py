"""Normalized probabilist Hermite polynomials and link functions.

The polynomials h_k are normalized so E_{z~N(0,1)}[h_k(z)^2] = 1. Link
functions bundle a scalar map with its first two derivatives; built-in
links (other than the Hermite ones, which are already unit norm) are
rescaled on construction to unit L2 norm against the standard Gaussian,
so population constants stay comparable across links.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, sqrt
from typing import Callable

import numpy as np
import numpy.polynomial.hermite_e as herme
import numpy.polynomial.polynomial as npoly

DEFAULT_TRUNCATION = 16
DEFAULT_NODES = 128
DEFAULT_COEFF_TOL = 1e-8


def hermite_eval(k: int, x):
    """Evaluate the k-th normalized probabilist Hermite polynomial.

    Uses the stable three-term recurrence in the orthonormal scaling,
    h_{j+1}(x) = (x h_j(x) - sqrt(j) h_{j-1}(x)) / sqrt(j+1),
    equivalent to the monic recurrence followed by division by sqrt(k!).
    Accepts scalars or arrays.
    """
    if k < 0:
        raise ValueError(f"polynomial order must be >= 0, got {k}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, k):
        h, h_prev = (x * h - sqrt(j) * h_prev) / sqrt(j + 1), h
    return h if h.ndim else float(h)


def _hermite_poly_coeffs(k: int) -> np.ndarray:
    """Power-basis coefficients of h_k (ascending order)."""
    e = np.zeros(k + 1)
    e[k] = 1.0
    return herme.herme2poly(e) / sqrt(factorial(k))


@lru_cache(maxsize=8)
def _quadrature(nodes: int):
    """Gauss-Hermite nodes and weights for the N(0,1) weight."""
    x, w = herme.hermegauss(nodes)
    return x, w / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class LinkFunction:
    """A scalar link with evaluable first and second derivatives.

    ``poly_derivative_coeffs`` holds the ascending power-basis coefficients
    of the derivative when the link is polynomial; gradient code uses it to
    reduce empirical gradients to precomputed data moments.
    """

    kind: str
    value: Callable = field(repr=False)
    derivative: Callable = field(repr=False)
    second_derivative: Callable = field(repr=False)
    poly_derivative_coeffs: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def hermite(k: int) -> "LinkFunction":
        """The pure Hermite link h_k; already unit norm."""
        if k < 1:
            raise ValueError(f"hermite link needs k >= 1, got {k}")
        dcoef = npoly.polyder(_hermite_poly_coeffs(k))
        return LinkFunction(
            kind=f"hermite({k})",
            value=lambda t, k=k: hermite_eval(k, t),
            derivative=lambda t, k=k: sqrt(k) * hermite_eval(k - 1, t),
            second_derivative=lambda t, k=k: (
                sqrt(k * (k - 1)) * hermite_eval(k - 2, t) if k >= 2 else np.zeros_like(np.asarray(t, dtype=float))
            ),
            poly_derivative_coeffs=dcoef,
        )

    @staticmethod
    def polynomial(coeffs, normalize: bool = True) -> "LinkFunction":
        """Link sum_j coeffs[j] t^j (ascending order)."""
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        scale = 1.0 / _l2_norm(lambda t: npoly.polyval(t, c)) if normalize else 1.0
        c = c * scale
        dc = npoly.polyder(c)
        d2c = npoly.polyder(dc) if dc.size else np.zeros(1)
        return LinkFunction(
            kind="polynomial",
            value=lambda t, c=c: npoly.polyval(t, c),
            derivative=lambda t, dc=dc: npoly.polyval(t, dc),
            second_derivative=lambda t, d2c=d2c: npoly.polyval(t, d2c),
            poly_derivative_coeffs=dc,
        )

    @staticmethod
    def identity() -> "LinkFunction":
        return LinkFunction(
            kind="identity",
            value=lambda t: np.asarray(t, dtype=float) + 0.0,
            derivative=lambda t: np.ones_like(np.asarray(t, dtype=float)),
            second_derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            poly_derivative_coeffs=np.array([1.0]),
        )

    @staticmethod
    def square(normalize: bool = True) -> "LinkFunction":
        """t^2; rescaled to unit Gaussian L2 norm unless disabled."""
        return LinkFunction.polynomial([0.0, 0.0, 1.0], normalize=normalize)._replace_kind("square")

    @staticmethod
    def relu(normalize: bool = True) -> "LinkFunction":
        s = 1.0 / _l2_norm(lambda t: np.maximum(t, 0.0)) if normalize else 1.0
        return LinkFunction(
            kind="relu",
            value=lambda t, s=s: s * np.maximum(np.asarray(t, dtype=float), 0.0),
            derivative=lambda t, s=s: s * (np.asarray(t, dtype=float) > 0.0).astype(float),
            second_derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        )

    @staticmethod
    def absolute_value(normalize: bool = True) -> "LinkFunction":
        s = 1.0 / _l2_norm(np.abs) if normalize else 1.0
        return LinkFunction(
            kind="absolute_value",
            value=lambda t, s=s: s * np.abs(np.asarray(t, dtype=float)),
            derivative=lambda t, s=s: s * np.sign(np.asarray(t, dtype=float)),
            second_derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        )

    @staticmethod
    def tabulated(ts, values, normalize: bool = True) -> "LinkFunction":
        """Piecewise-linear link from a sample table; derivatives from the table."""
        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if ts.ndim != 1 or ts.shape != values.shape or ts.size < 3:
            raise ValueError("need matching 1-d tables with at least 3 points")
        dv = np.gradient(values, ts)
        d2v = np.gradient(dv, ts)
        s = 1.0 / _l2_norm(lambda t: np.interp(t, ts, values)) if normalize else 1.0
        return LinkFunction(
            kind="tabulated",
            value=lambda t, s=s: s * np.interp(t, ts, values),
            derivative=lambda t, s=s: s * np.interp(t, ts, dv),
            second_derivative=lambda t, s=s: s * np.interp(t, ts, d2v),
        )

    @staticmethod
    def from_callables(
        name: str,
        value: Callable,
        derivative: Callable,
        second_derivative: Callable | None = None,
        normalize: bool = True,
    ) -> "LinkFunction":
        """Wrap explicit callables as a link (used for non-built-in links)."""
        s = 1.0 / _l2_norm(value) if normalize else 1.0
        if second_derivative is None:
            h = 1e-5
            second_derivative = lambda t, d=derivative: (d(np.asarray(t) + h) - d(np.asarray(t) - h)) / (2 * h)
        return LinkFunction(
            kind=name,
            value=lambda t, s=s: s * np.asarray(value(t), dtype=float),
            derivative=lambda t, s=s: s * np.asarray(derivative(t), dtype=float),
            second_derivative=lambda t, s=s: s * np.asarray(second_derivative(t), dtype=float),
        )

    def _replace_kind(self, kind: str) -> "LinkFunction":
        return LinkFunction(
            kind=kind,
            value=self.value,
            derivative=self.derivative,
            second_derivative=self.second_derivative,
            poly_derivative_coeffs=self.poly_derivative_coeffs,
        )

    def gaussian_l2_norm_sq(self, nodes: int = DEFAULT_NODES) -> float:
        """E_{z~N(0,1)}[sigma(z)^2] by quadrature."""
        x, w = _quadrature(nodes)
        vals = np.asarray(self.value(x), dtype=float)
        return float(np.dot(w, vals * vals))


def _l2_norm(fn: Callable, nodes: int = DEFAULT_NODES) -> float:
    x, w = _quadrature(nodes)
    vals = np.asarray(fn(x), dtype=float)
    nrm_sq = float(np.dot(w, vals * vals))
    if not np.isfinite(nrm_sq) or nrm_sq <= 0.0:
        raise ValueError("link has non-finite or zero Gaussian L2 norm")
    return sqrt(nrm_sq)


@dataclass(frozen=True)
class HermiteExpansion:
    """Truncated Hermite coefficients c_0..c_K of a link function.

    ``residual_mass`` is the L2 mass not captured by the truncation,
    E[sigma^2] - sum c_k^2; Bessel's inequality keeps it >= 0 up to
    quadrature noise.
    """

    coefficients: np.ndarray
    truncation_order: int
    residual_mass: float

    def __post_init__(self):
        if self.coefficients.shape != (self.truncation_order + 1,):
            raise ValueError("coefficient count must be truncation_order + 1")
        if self.residual_mass < -1e-6:
            raise ValueError(f"Bessel violation: residual mass {self.residual_mass:.3e} < -1e-6")


def expand(link: LinkFunction, K: int = DEFAULT_TRUNCATION, quadrature_nodes: int = DEFAULT_NODES) -> HermiteExpansion:
    """Hermite coefficients of ``link`` by Gauss-Hermite quadrature.

    Exact (to roundoff) for polynomial links of degree <= nodes-1-K.
    Requires quadrature_nodes >= 2K+1 so the discrete inner products keep
    the h_k orthonormal.
    """
    if K < 1:
        raise ValueError(f"truncation order must be >= 1, got {K}")
    if quadrature_nodes < 2 * K + 1:
        raise ValueError(f"need at least 2K+1 = {2 * K + 1} nodes, got {quadrature_nodes}")
    x, w = _quadrature(quadrature_nodes)
    vals = np.asarray(link.value(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("link evaluated to non-finite values at quadrature nodes")
    wv = w * vals
    coeffs = np.empty(K + 1)
    h_prev = np.ones_like(x)
    h = x.copy()
    coeffs[0] = wv.sum()
    coeffs[1] = np.dot(wv, h)
    for j in range(1, K):
        h, h_prev = (x * h - sqrt(j) * h_prev) / sqrt(j + 1), h
        coeffs[j + 1] = np.dot(wv, h)
    l2_sq = float(np.dot(w, vals * vals))
    return HermiteExpansion(
        coefficients=coeffs,
        truncation_order=K,
        residual_mass=l2_sq - float(np.dot(coeffs, coeffs)),
    )


def information_exponent(expansion: HermiteExpansion, tol: float = DEFAULT_COEFF_TOL) -> int:
    """Smallest k >= 1 with |c_k| > tol.

    Raises ValueError when every coefficient with k >= 1 sits below the
    tolerance (no recoverable signal at this truncation).
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    above = np.nonzero(np.abs(expansion.coefficients[1:]) > tol)[0]
    if above.size == 0:
        raise ValueError(
            f"no Hermite coefficient above tol={tol:g} for k in 1..{expansion.truncation_order}; no signal"
        )
    return int(above[0]) + 1
