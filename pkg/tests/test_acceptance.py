"""Acceptance suite: one test per numbered criterion, one PASS line each.

The heavy runs use pilot-calibrated drift scales and horizons (see the
inline constants); every tolerance is fixed here, nothing is deferred.
Run with `-s` to see the per-criterion PASS lines and timings.
"""

import time
from math import sqrt

import numpy as np
import pytest

from sphavg import dynamics, models, oracles, runner
from sphavg.estimators import top_eigenvector
from sphavg.hermite import LinkFunction, expand, hermite_eval, information_exponent, _quadrature
from sphavg.models import TensorPcaInstance, make_single_index
from sphavg.sphere import project_tangent, sample_uniform


def _report(criterion, t0, detail):
    print(f"\ncriterion {criterion}: PASS ({time.perf_counter() - t0:.1f}s) - {detail}")


def _e1(d):
    v = np.zeros(d)
    v[0] = 1.0
    return v


def damped_cubic_link(alpha=8.0):
    """Bounded information-exponent-3 link: (t^3 + gamma t) e^{-t^2/alpha},
    gamma chosen so the first Hermite coefficient vanishes."""
    b = 1.0 / alpha
    gamma = -3.0 * (1 + 2 * b) ** -2.5 / (1 + 2 * b) ** -1.5
    return LinkFunction.from_callables(
        "damped_cubic",
        value=lambda t: (t**3 + gamma * t) * np.exp(-(t**2) / alpha),
        derivative=lambda t: np.exp(-(t**2) / alpha)
        * (3 * t**2 + gamma - 2 * t * (t**3 + gamma * t) / alpha),
    )


# ---------------------------------------------------------------------------
# criterion 1: geometry / Hermite unit suite  (< 10 s)
# ---------------------------------------------------------------------------

def test_criterion_1_geometry_and_hermite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    # norm preservation through sampling and integration steps
    theta = sample_uniform(12, rng)
    for _ in range(500):
        theta = dynamics.langevin_step(theta, None, 0.0, 0.005, rng.standard_normal(12))
        assert abs(np.linalg.norm(theta) - 1.0) <= 1e-9
    # tangency of projections
    for _ in range(200):
        base = sample_uniform(9, rng)
        t = project_tangent(base, rng.standard_normal(9) * 5.0)
        assert abs(np.dot(t, base)) <= 1e-10 * max(np.linalg.norm(t), 1e-30)
    # Hermite orthonormality at <= 1e-8 for i, j <= 10
    x, w = _quadrature(64)
    H = np.stack([hermite_eval(k, x) for k in range(11)])
    gram = (H * w) @ H.T
    assert np.max(np.abs(gram - np.eye(11))) <= 1e-8
    # information exponents exactly as published
    assert information_exponent(expand(LinkFunction.identity())) == 1
    assert information_exponent(expand(LinkFunction.relu())) == 1
    assert information_exponent(expand(LinkFunction.absolute_value())) == 2
    assert information_exponent(expand(LinkFunction.square())) == 2
    bump = LinkFunction.from_callables(
        "t2_gauss_bump",
        value=lambda t: t**2 * np.exp(-(t**2)),
        derivative=lambda t: (2 * t - 2 * t**3) * np.exp(-(t**2)),
    )
    assert information_exponent(expand(bump)) == 4
    for k in range(1, 7):
        assert information_exponent(expand(LinkFunction.hermite(k))) == k
    _report(1, t0, "norms<=1e-9, tangency<=1e-10, orthonormality<=1e-8, exponents exact")


# ---------------------------------------------------------------------------
# criterion 2: gradient oracles  (< 30 s)
# ---------------------------------------------------------------------------

def _ambient_fd_gradient(loss, theta, h=1e-5):
    d = theta.shape[0]
    g = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[i] = (loss(theta + e) - loss(theta - e)) / (2 * h)
    return g


def test_criterion_2_gradient_oracles():
    t0 = time.perf_counter()
    links = [LinkFunction.hermite(2), LinkFunction.hermite(3), LinkFunction.hermite(4),
             LinkFunction.hermite(5), LinkFunction.square(), LinkFunction.identity()]
    worst_sim = 0.0
    for case in range(50):
        rng = np.random.default_rng(10_000 + case)
        d = int(rng.integers(5, 9))
        n = int(rng.integers(50, 400))
        ds = make_single_index(n, d, links[case % len(links)], sample_uniform(d, rng),
                               float(rng.uniform(0, 1)), seed=case)
        theta = sample_uniform(d, rng)
        b = ds.gradient(theta)
        fd = project_tangent(theta, _ambient_fd_gradient(ds.loss, theta))
        rel = np.linalg.norm(fd + b) / np.linalg.norm(b)
        worst_sim = max(worst_sim, rel)
    assert worst_sim <= 1e-4, f"worst single-index FD mismatch {worst_sim:.2e}"

    worst_tpca = 0.0
    for case in range(50):
        rng = np.random.default_rng(20_000 + case)
        d = int(rng.integers(5, 9))
        k = int(rng.integers(2, 5))
        inst = TensorPcaInstance.from_sample_count(k, d, sample_uniform(d, rng),
                                                   n=int(rng.integers(20, 200)), noise_seed=case)
        theta = sample_uniform(d, rng)
        b = inst.gradient(theta)
        fd = project_tangent(theta, _ambient_fd_gradient(inst.loss, theta))
        rel = np.linalg.norm(fd + b) / np.linalg.norm(b)
        worst_tpca = max(worst_tpca, rel)
    assert worst_tpca <= 1e-4, f"worst tensor FD mismatch {worst_tpca:.2e}"

    # dual-path consistency at k=3, d=8
    ts = sample_uniform(8, np.random.default_rng(1))
    mat = TensorPcaInstance.from_sample_count(3, 8, ts, n=100, noise_seed=5, storage="materialized")
    imp = TensorPcaInstance.from_sample_count(3, 8, ts, n=100, noise_seed=5, storage="implicit")
    worst_dual = 0.0
    for case in range(20):
        theta = sample_uniform(8, np.random.default_rng(30_000 + case))
        worst_dual = max(worst_dual, float(np.max(np.abs(mat.gradient(theta) - imp.gradient(theta)))))
    assert worst_dual <= 1e-12
    _report(2, t0, f"FD rel err sim {worst_sim:.1e}, tpca {worst_tpca:.1e}; dual path {worst_dual:.1e}")


# ---------------------------------------------------------------------------
# criterion 3: closed form vs Monte Carlo  (< 2 min)
# ---------------------------------------------------------------------------

def test_criterion_3_closed_form_vs_monte_carlo():
    t0 = time.perf_counter()
    for k in (3, 5):
        for d in (10, 20):
            inst = TensorPcaInstance(k, d, _e1(d), 0.0)
            stats = oracles.mc_stationary(inst, 100_000, seed=17 * k + d)
            target = oracles.closed_form_tpca_scale(k, d) * _e1(d)
            gap = np.abs(stats.b_bar - target)
            assert np.all(gap <= 4 * stats.se_b + 1e-12), f"k={k}, d={d}: max {np.max(gap / stats.se_b):.2f} SE"
    _report(3, t0, "noiseless b-bar matches k(m_{k-1}-m_{k+1}) within 4 SE on the k x d grid")


# ---------------------------------------------------------------------------
# criterion 4: ergodic-average scaling  (< 5 min)
# ---------------------------------------------------------------------------

def test_criterion_4_ergodic_scaling():
    t0 = time.perf_counter()
    d = 20
    cfg = dynamics.SdeConfig(dimension=d, epsilon=0.0, dt=0.005, horizon_T=160.0,
                             record_stride=2000)
    summaries = dynamics.run_batch(cfg, None, list(range(20)), theta_star=_e1(d),
                                   track_second_moment=False)
    times = summaries[0].records["time"]
    horizons = np.array([10.0, 40.0, 160.0])
    means = []
    for T in horizons:
        i = int(np.argmin(np.abs(times - T)))
        assert times[i] == T
        means.append(np.mean([s.records["norm_avg"][i] for s in summaries]))
    slope = np.polyfit(np.log(horizons), np.log(means), 1)[0]
    assert -0.65 <= slope <= -0.35, f"slope {slope:.3f}"
    _report(4, t0, f"||avg beta|| vs T log-log slope {slope:.3f} (target -0.5 +/- 0.15)")


# ---------------------------------------------------------------------------
# criterion 5: coupled-error bound  (< 10 min)
# ---------------------------------------------------------------------------

def test_criterion_5_coupled_error_bound():
    t0 = time.perf_counter()
    d, k = 20, 3
    inst = TensorPcaInstance.from_sample_count(k, d, _e1(d), n=50 * d * d, noise_seed=0)
    eps0 = dynamics.default_epsilon(k, d)
    normalized = []
    held = None
    for mult in (1, 2, 4):
        eps = mult * eps0
        cfg = dynamics.SdeConfig(dimension=d, epsilon=eps, dt=0.005, horizon_T=50.0,
                                 record_stride=10_000, couple_brownian=True)
        summaries = dynamics.run_batch(cfg, inst, list(range(20)), track_second_moment=False)
        sups = np.array([s.error_sup for s in summaries])
        bounds = np.array([10 * eps * s.max_drift_norm / d for s in summaries])
        if mult == 1:
            held = int(np.sum(sups <= bounds))
            assert held >= 18, f"bound held on only {held}/20 seeds"
        normalized.append(sups.mean() / eps)
    ratio = max(normalized) / min(normalized)
    assert ratio <= 1.3, f"sup||E||/eps spread {ratio:.3f} over a 4x eps range"
    _report(5, t0, f"bound held {held}/20 at default eps; linearity spread {ratio:.3f} (<= 1.3)")


# ---------------------------------------------------------------------------
# criterion 6: odd-case end-to-end recovery  (< 20 min)
# ---------------------------------------------------------------------------

C6_TENSOR_CONFIG = dict(
    problem="tensor_pca", k_or_link=3, d=20, n=20_000,  # n = 50 d^2
    epsilon=0.7, horizon=10_000.0, dt=0.005,            # pilot-calibrated
    seeds=list(range(10)),
)


@pytest.fixture(scope="module")
def c6_tensor_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c6_tensor")
    cfg = runner.ExperimentConfig.from_dict({**C6_TENSOR_CONFIG, "output_dir": str(out)})
    return runner.run(cfg), out


def test_criterion_6_odd_recovery(c6_tensor_run, tmp_path):
    t0 = time.perf_counter()
    manifest, _ = c6_tensor_run
    corr = np.array([r["final_corr_avg"] for r in manifest["per_seed"]])
    corr_it = np.array([r["final_corr_iterate"] for r in manifest["per_seed"]])
    max_it = np.array([r["max_abs_corr_iterate"] for r in manifest["per_seed"]])
    d = C6_TENSOR_CONFIG["d"]
    assert np.sum(corr >= 0.8) >= 8, f"tensor recovery {np.round(corr, 3)}"
    assert np.sum(max_it <= 10 / sqrt(d)) >= 8  # equator confinement
    assert np.all(corr >= corr_it)  # the average dominates the raw iterate

    sim_cfg = runner.ExperimentConfig.from_dict(dict(
        problem="single_index", k_or_link="hermite(3)", d=30, n={"paper_scale": 10},
        epsilon=1.5, horizon=4000.0, dt=0.005,          # pilot-calibrated
        seeds=list(range(10)), output_dir=str(tmp_path / "c6_sim"),
    ))
    sim_manifest = runner.run(sim_cfg)
    sim_corr = np.array([r["final_corr_avg"] for r in sim_manifest["per_seed"]])
    sim_max_it = np.array([r["max_abs_corr_iterate"] for r in sim_manifest["per_seed"]])
    assert np.sum(sim_corr >= 0.6) >= 8, f"single-index recovery {np.round(sim_corr, 3)}"
    assert np.sum(sim_max_it <= 10 / sqrt(30)) >= 8
    # fraction of recorded steps beyond the equator band stays below 5%
    for name in sim_manifest["csv_files"]:
        data = np.genfromtxt(tmp_path / "c6_sim" / name, delimiter=",", names=True)
        frac = np.mean(np.abs(data["corr_iterate"]) > 10 / sqrt(30))
        assert frac <= 0.05
    _report(6, t0, f"tensor corr>=0.8 on {np.sum(corr >= 0.8)}/10 "
                   f"(min {corr.min():.3f}); h3 corr>=0.6 on {np.sum(sim_corr >= 0.6)}/10 "
                   f"(min {sim_corr.min():.3f}); iterates near the equator throughout")


# ---------------------------------------------------------------------------
# criterion 7: even-case end-to-end recovery  (< 20 min)
# ---------------------------------------------------------------------------

def test_criterion_7_even_recovery(tmp_path):
    t0 = time.perf_counter()
    cfg = runner.ExperimentConfig.from_dict(dict(
        problem="single_index", k_or_link="hermite(4)", d=30, n={"paper_scale": 10},
        epsilon=6.0, horizon=2000.0, dt=0.005,          # pilot-calibrated
        seeds=list(range(10)), output_dir=str(tmp_path / "c7"),
    ))
    manifest = runner.run(cfg)
    eig = np.array([r["final_corr_eig"] for r in manifest["per_seed"]], dtype=float)
    first_order = np.abs([r["final_corr_avg"] for r in manifest["per_seed"]])
    assert np.sum(eig >= 0.6) >= 8, f"eigenvector recovery {np.round(eig, 3)}"
    assert np.sum(first_order <= 0.3) >= 8, f"first-order estimator not null {np.round(first_order, 3)}"
    _report(7, t0, f"|v1(M-hat).ts| >= 0.6 on {np.sum(eig >= 0.6)}/10 (min {eig.min():.3f}); "
                   f"first-order |corr| <= 0.3 on {np.sum(first_order <= 0.3)}/10")


# ---------------------------------------------------------------------------
# criterion 8: warm start + online SGD  (< 5 min)
# ---------------------------------------------------------------------------

def test_criterion_8_warm_start_refinement():
    t0 = time.perf_counter()
    d = 30
    link = damped_cubic_link()
    assert information_exponent(expand(link)) == 3
    ts = sample_uniform(d, np.random.default_rng([0, 0xA5]))
    m0 = d ** -0.25  # the averaging stage's warm-start magnitude; >= 0.3
    assert m0 >= 0.3
    finals = []
    for seed in range(10):
        rng = np.random.default_rng(7_000_000 + seed)
        u = rng.standard_normal(d)
        u -= (u @ ts) * ts
        u /= np.linalg.norm(u)
        theta0 = m0 * ts + sqrt(1 - m0 * m0) * u
        stream = models.FreshSampleStream(link, ts, 0.0, seed=seed, limit=20 * d)
        refined = dynamics.online_sgd_refine(theta0, stream, 0.003, 20 * d)  # eta pilot-tuned
        finals.append(float(refined @ ts))
    finals = np.array(finals)
    assert np.sum(finals >= 0.9) >= 8, f"refinement {np.round(finals, 3)}"
    _report(8, t0, f"corr >= 0.9 on {np.sum(finals >= 0.9)}/10 from warm start {m0:.3f} "
                   f"with 20d = {20 * d} fresh samples (min {finals.min():.3f})")


# ---------------------------------------------------------------------------
# criterion 9: minibatch SGD variant  (< 15 min)
# ---------------------------------------------------------------------------

def test_criterion_9_minibatch_variant():
    t0 = time.perf_counter()
    d = 50
    ds = make_single_index(10 * d * d, d, LinkFunction.hermite(3), _e1(d), 1.0, seed=0)
    band = 10 / sqrt(d)
    results = {}
    for eta in (0.005, 0.01, 0.02, 0.05):
        trace = dynamics.run_minibatch_sgd(ds, eta, 100_000, seed=1)
        nrm = np.linalg.norm(trace["theta_hat"])
        corr = float(trace["theta_hat"] @ ds.theta_star) / nrm
        results[eta] = (corr, trace["max_abs_corr_iterate"])
    winners = [eta for eta, (corr, mx) in results.items() if corr >= 0.5 and mx <= band]
    assert winners, f"no learning rate recovered the average: {results}"
    _report(9, t0, f"eta in {winners} reach avg corr >= 0.5 with the raw iterate inside "
                   f"the 10/sqrt(d) band; all results {{eta: (corr, max|it|)}} = "
                   + str({k: (round(v[0], 3), round(v[1], 3)) for k, v in results.items()}))


# ---------------------------------------------------------------------------
# criterion 10: bitwise determinism of criterion-6 runs
# ---------------------------------------------------------------------------

def test_criterion_10_bitwise_determinism(c6_tensor_run, tmp_path):
    t0 = time.perf_counter()
    manifest, first_dir = c6_tensor_run
    cfg = runner.ExperimentConfig.from_dict({**C6_TENSOR_CONFIG, "output_dir": str(tmp_path / "again")})
    second = runner.run(cfg)
    assert second["csv_files"] == manifest["csv_files"]
    for name in manifest["csv_files"]:
        assert (first_dir / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
    assert second["per_seed"] == manifest["per_seed"]
    _report(10, t0, f"all {len(manifest['csv_files'])} per-seed CSVs byte-identical across reruns")
