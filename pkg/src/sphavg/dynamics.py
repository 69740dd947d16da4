"""Time integration on the sphere.

Euler-Maruyama discretization of the drifted spherical SDE

    d theta = (-(d-1)/2 theta + eps * b(theta)) dt + P_theta dW,

with per-step retraction back to the sphere (the continuous process stays
on the sphere exactly; renormalization restores the invariant at O(dt^2)
per step). Iterate averages accumulate at every step via streaming means;
the record stride only thins diagnostics, never the estimator.

The batch driver advances any number of replicas (seeds) in lock-step
through vectorized arithmetic; each replica owns its own generator, so a
trajectory is a pure function of (config, instance, seed).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .estimators import AveragedSecondMoment, PowerIterationError, top_eigenvector
from .models import SampleStreamExhausted  # noqa: F401  (re-exported for callers)
from .sphere import as_unit, project_tangent, retract, sample_uniform

RADIAL_STABILITY_LIMIT = 0.1
MAX_TOTAL_STEPS = 10**9
DEFAULT_STEP_BUDGET = 2_000_000


@dataclass(frozen=True)
class SdeConfig:
    """Integration parameters for one Langevin run."""

    dimension: int
    epsilon: float
    dt: float
    horizon_T: float
    seed: int = 0
    record_stride: int = 1
    couple_brownian: bool = False

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dimension}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dt * (self.dimension - 1) / 2 >= RADIAL_STABILITY_LIMIT:
            raise ValueError(
                f"dt={self.dt} too large: dt*(d-1)/2 must stay below {RADIAL_STABILITY_LIMIT}"
            )
        if self.horizon_T <= 0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")
        if self.horizon_T / self.dt > MAX_TOTAL_STEPS:
            raise ValueError(f"horizon/dt exceeds the {MAX_TOTAL_STEPS:.0e} step sanity bound")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_T / self.dt))


def default_dt(d: int) -> float:
    """Step size 0.1/d, making the per-step radial contraction ~0.05."""
    return 0.1 / d


def default_epsilon(k_star: int, d: int) -> float:
    """Drift scale strictly inside the estimator's admissible regime.

    Odd k_star: 0.1 * d^{-max(0,(k_star-3))/2 - 0.1};
    even k_star: 0.1 * d^{-(k_star-2)/2 - 0.1}. The 0.1 prefactor and the
    -0.1 exponent slack are pilot-calibrated defaults.
    """
    if k_star < 1:
        raise ValueError(f"k_star must be >= 1, got {k_star}")
    if k_star % 2 == 1:
        expo = max(0, k_star - 3) / 2 + 0.1
    else:
        expo = (k_star - 2) / 2 + 0.1
    return 0.1 * d ** (-expo)


def default_horizon(k_star: int, d: int, epsilon: float, dt: float,
                    max_steps: int = DEFAULT_STEP_BUDGET) -> float:
    """Averaging horizon 10*d^{k}/eps^2 (odd) or 10*d^{k+1}/eps^2 (even),
    capped by a step-count budget with a warning when the cap binds."""
    power = k_star if k_star % 2 == 1 else k_star + 1
    horizon = 10.0 * d**power / epsilon**2
    cap = max_steps * dt
    if horizon > cap:
        warnings.warn(
            f"horizon {horizon:.3g} exceeds the {max_steps} step budget; "
            f"capping at T={cap:.3g} (results may be under-averaged)",
            RuntimeWarning,
            stacklevel=2,
        )
        horizon = cap
    return horizon


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def langevin_step(theta: np.ndarray, b, epsilon: float, dt: float, noise) -> np.ndarray:
    """One Euler-Maruyama step of the drifted spherical SDE.

    theta' = retract(theta + dt*(-(d-1)/2 theta + eps b) + sqrt(dt) P_theta noise).
    ``b`` must be tangent at theta (may be None when epsilon is 0).
    """
    d = theta.shape[0]
    if dt < 0 or dt * (d - 1) / 2 >= RADIAL_STABILITY_LIMIT:
        raise ValueError(f"dt={dt} outside the radial stability bound")
    if dt == 0.0:
        return theta.copy()
    drift = -(d - 1) / 2 * theta
    if epsilon != 0.0:
        b = np.asarray(b, dtype=float)
        if abs(float(np.dot(b, theta))) > 1e-6 * (1.0 + float(np.linalg.norm(b))):
            raise ValueError("drift field b is not tangent at theta")
        drift = drift + epsilon * b
    noise = np.asarray(noise, dtype=float)
    return retract(theta + dt * drift + np.sqrt(dt) * project_tangent(theta, noise))


def brownian_step(beta: np.ndarray, dt: float, noise) -> np.ndarray:
    """One step of the coupled driftless process (the epsilon=0 dynamics)."""
    return langevin_step(beta, None, 0.0, dt, noise)


# ---------------------------------------------------------------------------
# trajectory summaries
# ---------------------------------------------------------------------------

RECORD_COLUMNS = ("time", "corr_iterate", "corr_avg", "corr_eig", "err_sup", "norm_avg")


@dataclass
class TrajectorySummary:
    """Running averages and diagnostics of one integrated trajectory."""

    config: SdeConfig
    theta_hat: np.ndarray
    second_moment: AveragedSecondMoment | None
    records: dict
    columns: tuple
    error_sup: float | None
    max_drift_norm: float | None
    n_steps: int
    final_theta: np.ndarray | None = field(repr=False, default=None)

    def to_csv(self, path) -> None:
        """One diagnostics row per record stride; floats at full precision."""
        cols = list(self.columns)
        rows = zip(*(self.records[c] for c in cols))
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def finalize_odd(summary: TrajectorySummary) -> np.ndarray:
    """Normalized averaged iterate, the odd-information-exponent estimate."""
    nrm = float(np.linalg.norm(summary.theta_hat))
    if nrm <= 1e-300:
        raise ValueError(
            "averaged iterate is (near-)zero: horizon too short or the "
            "first-order estimator vanishes (even information exponent)"
        )
    return summary.theta_hat / nrm


# ---------------------------------------------------------------------------
# batch integrator
# ---------------------------------------------------------------------------

def run_batch(config: SdeConfig, instance, seeds, *, theta_star=None,
              track_second_moment: bool = True, record_eig: bool = False,
              noise_chunk: int = 2048) -> list[TrajectorySummary]:
    """Integrate one replica per seed, all sharing ``instance``.

    Replicas advance in lock-step with vectorized arithmetic but draw noise
    from per-seed generators, so each returned trajectory depends only on
    (config, instance, its seed, the full seed tuple). Initialization is
    uniform on the sphere; when ``config.couple_brownian`` the driftless
    twin runs on the identical noise and sup_t |theta_t - beta_t| is
    tracked. Diagnostics are recorded at state indices 0, stride, 2*stride,
    ... <= n_steps (the t=0 row echoes the initial iterate for the average).
    """
    if config.epsilon > 0.0 and instance is None:
        raise ValueError("an instance is required when epsilon > 0")
    if theta_star is None and instance is not None:
        theta_star = instance.theta_star
    if theta_star is not None:
        theta_star = as_unit(theta_star)

    d = config.dimension
    steps = config.n_steps
    dt = config.dt
    sqrt_dt = np.sqrt(dt)
    eps = config.epsilon
    stride = config.record_stride
    seeds = list(seeds)
    B = len(seeds)

    rngs = [np.random.default_rng(s) for s in seeds]
    theta = np.stack([sample_uniform(d, rng) for rng in rngs])
    beta = theta.copy() if config.couple_brownian else None

    mean = np.zeros((B, d))
    second = np.zeros((B, d, d)) if track_second_moment else None
    err_sup = np.zeros(B) if config.couple_brownian else None
    max_b = np.zeros(B) if eps > 0.0 else None
    work = instance.make_workspace(B) if instance is not None else None

    columns = ["time", "corr_iterate", "corr_avg"]
    if record_eig and track_second_moment:
        columns.append("corr_eig")
    if config.couple_brownian:
        columns.append("err_sup")
    columns.append("norm_avg")
    recs = {c: [] for c in columns}
    eig_warm = [None] * B

    def record(state_index: int, count: int):
        recs["time"].append(np.full(B, state_index * dt))
        if theta_star is not None:
            recs["corr_iterate"].append(theta @ theta_star)
        else:
            recs["corr_iterate"].append(np.full(B, np.nan))
        if count == 0:
            avg, norms = theta, np.ones(B)
        else:
            norms = np.linalg.norm(mean, axis=1)
            avg = mean
        if theta_star is not None:
            recs["corr_avg"].append((avg @ theta_star) / np.where(norms > 0, norms, 1.0))
        else:
            recs["corr_avg"].append(np.full(B, np.nan))
        if "corr_eig" in recs:
            vals = np.full(B, np.nan)
            if count > 0 and theta_star is not None:
                for j in range(B):
                    try:
                        v, _, _ = top_eigenvector(
                            0.5 * (second[j] + second[j].T), tol=1e-8, seed=seeds[j], v0=eig_warm[j]
                        )
                        eig_warm[j] = v
                        vals[j] = abs(float(v @ theta_star))
                    except PowerIterationError:
                        pass
            recs["corr_eig"].append(vals)
        if "err_sup" in recs:
            recs["err_sup"].append(err_sup.copy())
        recs["norm_avg"].append(norms if count > 0 else np.ones(B))

    noise_buf = np.empty((B, noise_chunk, d))
    pos = noise_chunk
    radial = -(d - 1) / 2.0

    record(0, 0)
    for i in range(steps):
        if eps > 0.0:
            b = instance.gradient_batch(theta, work=work)
            if max_b is not None:
                np.maximum(max_b, np.linalg.norm(b, axis=1), out=max_b)
        count = i + 1
        mean += (theta - mean) / count
        if second is not None:
            second += (np.einsum("bi,bj->bij", theta, theta) - second) / count
        if pos == noise_chunk:
            for j, rng in enumerate(rngs):
                noise_buf[j] = rng.standard_normal((noise_chunk, d))
            pos = 0
        w = noise_buf[:, pos, :]
        pos += 1

        drift = radial * theta
        if eps > 0.0:
            drift = drift + eps * b
        wt = w - np.einsum("bi,bi->b", w, theta)[:, None] * theta
        prop = theta + dt * drift + sqrt_dt * wt
        theta = prop / np.linalg.norm(prop, axis=1, keepdims=True)

        if beta is not None:
            wb = w - np.einsum("bi,bi->b", w, beta)[:, None] * beta
            prop_b = beta + dt * (radial * beta) + sqrt_dt * wb
            beta = prop_b / np.linalg.norm(prop_b, axis=1, keepdims=True)
            np.maximum(err_sup, np.linalg.norm(theta - beta, axis=1), out=err_sup)

        if count % stride == 0:
            record(count, count)

    summaries = []
    for j in range(B):
        sm = None
        if second is not None:
            sm = AveragedSecondMoment(matrix=0.5 * (second[j] + second[j].T), total_time=steps * dt)
        summaries.append(
            TrajectorySummary(
                config=SdeConfig(
                    dimension=d, epsilon=eps, dt=dt, horizon_T=config.horizon_T,
                    seed=seeds[j], record_stride=stride, couple_brownian=config.couple_brownian,
                ),
                theta_hat=mean[j].copy(),
                second_moment=sm,
                records={c: np.array([r[j] for r in recs[c]]) for c in columns},
                columns=tuple(columns),
                error_sup=float(err_sup[j]) if err_sup is not None else None,
                max_drift_norm=float(max_b[j]) if max_b is not None else None,
                n_steps=steps,
                final_theta=theta[j].copy(),
            )
        )
    return summaries


def run_algorithm_one(config: SdeConfig, instance, **kwargs) -> TrajectorySummary:
    """Integrate a single trajectory from ``config.seed`` and average it."""
    return run_batch(config, instance, [config.seed], **kwargs)[0]


# ---------------------------------------------------------------------------
# discrete-update baselines
# ---------------------------------------------------------------------------

def minibatch_sgd_step(theta: np.ndarray, sample, eta: float, link) -> np.ndarray:
    """Normalized stochastic-gradient step on one sample.

    The ambient per-sample gradient -y sigma'(theta.x) x is projected to
    the tangent space before the update; normalization would kill the
    radial part only to O(eta^2), so projecting removes an O(eta) bias.
    """
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    x, y = sample
    g = -y * float(link.derivative(float(np.dot(theta, x)))) * project_tangent(theta, x)
    return retract(theta - eta * g)


def run_minibatch_sgd(dataset, eta: float, steps: int, seed: int, *,
                      theta0=None, record_stride: int | None = None,
                      track_second_moment: bool = False):
    """Iterate-averaged minibatch SGD (batch size 1, uniform resampling).

    Returns a TrajectorySummary-like record dict: the time column counts
    steps, the averages accumulate every step exactly as in the SDE runs.
    """
    n, d = dataset.inputs.shape
    if record_stride is None:
        record_stride = max(1, steps // 256)
    rng = np.random.default_rng(seed)
    theta = sample_uniform(d, rng) if theta0 is None else as_unit(theta0)
    theta_star = dataset.theta_star
    link = dataset.link
    mean = np.zeros(d)
    second = np.zeros((d, d)) if track_second_moment else None
    X, y = dataset.inputs, dataset.labels
    coeffs = link.poly_derivative_coeffs
    records = {"time": [], "corr_iterate": [], "corr_avg": [], "norm_avg": []}
    max_abs_corr = 0.0

    def record(idx, count):
        records["time"].append(float(idx))
        records["corr_iterate"].append(float(theta @ theta_star))
        if count == 0:
            records["corr_avg"].append(float(theta @ theta_star))
            records["norm_avg"].append(1.0)
        else:
            nrm = float(np.linalg.norm(mean))
            records["corr_avg"].append(float(mean @ theta_star) / (nrm if nrm > 0 else 1.0))
            records["norm_avg"].append(nrm)

    record(0, 0)
    for i in range(steps):
        count = i + 1
        mean += (theta - mean) / count
        if second is not None:
            second += (np.outer(theta, theta) - second) / count
        idx = int(rng.integers(0, n))
        x = X[idx]
        u = float(x @ theta)
        if coeffs is not None:
            s = 0.0
            for c in coeffs[::-1]:
                s = s * u + c
        else:
            s = float(link.derivative(u))
        step_vec = (eta * y[idx] * s) * (x - u * theta)
        theta = theta + step_vec
        theta /= np.linalg.norm(theta)
        max_abs_corr = max(max_abs_corr, abs(float(theta @ theta_star)))
        if count % record_stride == 0:
            record(count, count)

    out = {
        "records": {k: np.array(v) for k, v in records.items()},
        "columns": ("time", "corr_iterate", "corr_avg", "norm_avg"),
        "theta_hat": mean,
        "final_theta": theta,
        "max_abs_corr_iterate": max_abs_corr,
        "n_steps": steps,
    }
    if second is not None:
        out["second_moment"] = AveragedSecondMoment(
            matrix=0.5 * (second + second.T), total_time=float(steps)
        )
    return out


def online_sgd_refine(theta0, stream, eta: float, steps: int) -> np.ndarray:
    """Spherical online SGD ascent on per-sample correlation.

    Intended for a warm start whose correlation with the planted direction
    is strictly positive; consumes one fresh sample per step and raises
    SampleStreamExhausted when the stream cannot supply them.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    theta = as_unit(theta0)
    link = stream.link
    for _ in range(steps):
        x, y = stream.draw()
        u = float(x @ theta)
        theta = theta + (eta * y * float(link.derivative(u))) * (x - u * theta)
        theta /= np.linalg.norm(theta)
    return theta
