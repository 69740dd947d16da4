"""Independent ground-truth computations for verification.

Everything here evaluates stationary averages over i.i.d. uniform sphere
samples or closed-form population quantities. None of it shares a code
path with the SDE integrator, so agreement between the two is evidence,
not tautology. Accumulation is single-pass in fixed chunk order, which
keeps results reproducible bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .sphere import as_unit, project_tangent, sample_uniform, spherical_even_moment

_MC_CHUNK = 20_000


@dataclass(frozen=True)
class StationaryAverages:
    """Monte-Carlo estimates of E_z[b(z)] and E_z[z b(z)^T + b(z) z^T]."""

    b_bar: np.ndarray
    g_bar: np.ndarray
    mc_samples: int
    se_b: np.ndarray
    se_g: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.g_bar - self.g_bar.T)) > 1e-12:
            raise ValueError("g_bar must be symmetric within 1e-12")
        if np.any(self.se_b < 0) or np.any(self.se_g < 0):
            raise ValueError("standard errors must be nonnegative")


def mc_stationary(instance, samples: int, seed: int = 0) -> StationaryAverages:
    """Average the drift field over uniform sphere samples.

    Reports entrywise standard errors so callers can state agreement
    thresholds in SE multiples instead of absolute tolerances.
    """
    if samples < 10**3:
        raise ValueError(f"need at least 1e3 samples, got {samples}")
    d = instance.dimension
    rng = np.random.default_rng(seed)
    sum_b = np.zeros(d)
    sum_b2 = np.zeros(d)
    sum_g = np.zeros((d, d))
    sum_g2 = np.zeros((d, d))
    done = 0
    while done < samples:
        m = min(_MC_CHUNK, samples - done)
        z = sample_uniform(d, rng, size=m)
        b = instance.gradient_batch(z)
        sum_b += b.sum(axis=0)
        sum_b2 += (b * b).sum(axis=0)
        zb = z.T @ b
        sum_g += zb + zb.T
        a = (z * z).T @ (b * b)
        cross = (z * b).T @ (z * b)
        sum_g2 += a + a.T + 2.0 * cross
        done += m
    n = float(samples)
    b_bar = sum_b / n
    g_bar = (sum_g + sum_g.T) / (2.0 * n)  # symmetrize roundoff
    var_b = np.maximum(sum_b2 / n - b_bar**2, 0.0)
    var_g = np.maximum(sum_g2 / n - g_bar**2, 0.0)
    return StationaryAverages(
        b_bar=b_bar,
        g_bar=g_bar,
        mc_samples=samples,
        se_b=np.sqrt(var_b / n),
        se_g=np.sqrt(var_g / n),
    )


def closed_form_tpca_scale(k: int, d: int) -> float:
    """Population drift magnitude c = k (m_{k-1} - m_{k+1}) for odd-order
    noiseless tensor instances, where m_j = E[z_1^j] on S^{d-1}.

    Theta(d^{-(k-1)/2}); the even closed form does not take this shape,
    so even k raises a parity error.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError(f"closed form requires odd k >= 1, got {k}")
    return k * (spherical_even_moment(d, k - 1) - spherical_even_moment(d, k + 1))


def population_sim_gradient(expansion, theta, theta_star) -> np.ndarray:
    """Exact population drift of the single-index correlation loss.

    From the Hermite coefficients alone (no data):
    sum_k k c_k^2 (theta . theta_star)^{k-1} P_theta(theta_star).
    """
    theta = as_unit(theta)
    theta_star = as_unit(theta_star)
    m = float(np.dot(theta, theta_star))
    c = expansion.coefficients
    scale = 0.0
    for k in range(1, c.shape[0]):
        if c[k] != 0.0:
            scale += k * c[k] ** 2 * m ** (k - 1)
    return scale * project_tangent(theta, theta_star)
