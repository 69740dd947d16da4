import numpy as np
import pytest

from sphavg import models
from sphavg.hermite import LinkFunction
from sphavg.models import (
    SingleIndexDataset,
    TensorPcaInstance,
    correlation_loss,
    make_single_index,
    noise_block,
    sim_gradient,
    tpca_gradient,
    tpca_loss,
)
from sphavg.sphere import as_unit, sample_uniform


def _e1(d):
    v = np.zeros(d)
    v[0] = 1.0
    return v


# ---------------------------------------------------------------------------
# counter-based noise
# ---------------------------------------------------------------------------

def test_noise_block_chunk_invariance():
    whole = noise_block(7, 0, 1000)
    pieces = np.concatenate([noise_block(7, 0, 137), noise_block(7, 137, 400), noise_block(7, 537, 463)])
    assert np.array_equal(whole, pieces)
    assert abs(whole.mean()) < 0.15 and abs(whole.std() - 1.0) < 0.1


def test_noise_block_seed_sensitivity():
    assert not np.array_equal(noise_block(1, 0, 64), noise_block(2, 0, 64))


# ---------------------------------------------------------------------------
# single-index datasets
# ---------------------------------------------------------------------------

def test_make_single_index_identity_noiseless_labels():
    ts = as_unit(np.ones(4))
    ds = make_single_index(50, 4, LinkFunction.identity(), ts, 0.0, seed=0)
    assert np.array_equal(ds.labels, ds.inputs @ ts)


def test_make_single_index_deterministic():
    link = LinkFunction.hermite(2)
    a = make_single_index(100, 5, link, _e1(5), 0.3, seed=42)
    b = make_single_index(100, 5, link, _e1(5), 0.3, seed=42)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)


def test_label_mean_vanishes_for_h2():
    ds = make_single_index(10_000, 10, LinkFunction.hermite(2), _e1(10), 0.0, seed=1)
    se = ds.labels.std() / np.sqrt(ds.n)
    assert abs(ds.labels.mean()) <= 3 * se  # E[h2] = 0 under the model


def test_sim_gradient_is_tangent():
    ds = make_single_index(200, 6, LinkFunction.hermite(3), _e1(6), 1.0, seed=2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        theta = sample_uniform(6, rng)
        b = sim_gradient(ds, theta)
        assert abs(b @ theta) <= 1e-10 * max(np.linalg.norm(b), 1e-30)


def _fd_directional(loss, theta, v, h=1e-5):
    return (loss(theta + h * v) - loss(theta - h * v)) / (2 * h)


@pytest.mark.parametrize("link_name", ["hermite3", "hermite4", "relu"])
def test_sim_gradient_matches_loss_finite_difference(link_name):
    link = {"hermite3": LinkFunction.hermite(3), "hermite4": LinkFunction.hermite(4),
            "relu": LinkFunction.relu()}[link_name]
    rng = np.random.default_rng(4)
    ds = make_single_index(300, 7, link, sample_uniform(7, rng), 0.5, seed=5)
    for _ in range(10):
        theta = sample_uniform(7, rng)
        b = ds.gradient(theta)
        for _ in range(2):
            v = rng.standard_normal(7)
            v -= (v @ theta) * theta
            v /= np.linalg.norm(v)
            fd = _fd_directional(ds.loss, theta, v)
            assert fd == pytest.approx(-(b @ v), rel=1e-4, abs=1e-7)


def test_sim_gradient_single_sample_finite_difference():
    rng = np.random.default_rng(6)
    ds = make_single_index(1, 5, LinkFunction.hermite(3), sample_uniform(5, rng), 1.0, seed=7)
    theta = sample_uniform(5, rng)
    b = ds.gradient(theta)
    v = rng.standard_normal(5)
    v -= (v @ theta) * theta
    v /= np.linalg.norm(v)
    assert _fd_directional(ds.loss, theta, v) == pytest.approx(-(b @ v), rel=1e-4)


def test_population_drift_identity_link_orthogonal_start():
    # noiseless identity link: E[b(theta)] = P_theta(theta_star); at
    # theta perp theta_star the drift toward theta_star has size 1
    d = 8
    ts = _e1(d)
    theta = np.zeros(d)
    theta[1] = 1.0
    ds = make_single_index(100_000, d, LinkFunction.identity(), ts, 0.0, seed=8)
    b = ds.gradient(theta)
    # standard error of the projected empirical mean
    se = np.sqrt(d / ds.n)
    assert b @ ts == pytest.approx(1.0, abs=3 * se)


def test_correlation_loss_values():
    d = 6
    ds = make_single_index(100_000, d, LinkFunction.hermite(1), _e1(d), 0.0, seed=9)
    assert correlation_loss(ds, _e1(d)) == pytest.approx(0.0, abs=3 * 2.0 / np.sqrt(ds.n))
    zero = SingleIndexDataset(ds.inputs[:100], np.zeros(100), ds.link, _e1(d), 0.0, seed=0)
    assert correlation_loss(zero, sample_uniform(d, np.random.default_rng(0))) == 1.0


def test_fast_moment_path_matches_generic_path():
    # degree-2 derivative uses precomputed moments; force the generic route
    # by dropping the polynomial coefficients and compare
    rng = np.random.default_rng(10)
    link = LinkFunction.hermite(3)
    ds = make_single_index(500, 6, link, sample_uniform(6, rng), 0.7, seed=11)
    assert ds._moments is not None
    stripped = LinkFunction(
        kind=link.kind, value=link.value, derivative=link.derivative,
        second_derivative=link.second_derivative, poly_derivative_coeffs=None,
    )
    generic = SingleIndexDataset(ds.inputs, ds.labels, stripped, ds.theta_star, ds.noise_std, ds.seed)
    assert generic._moments is None
    for _ in range(10):
        theta = sample_uniform(6, rng)
        assert np.allclose(ds.gradient(theta), generic.gradient(theta), atol=1e-12)


def test_gradient_batch_matches_single():
    rng = np.random.default_rng(12)
    ds = make_single_index(400, 5, LinkFunction.hermite(4), sample_uniform(5, rng), 0.5, seed=13)
    thetas = sample_uniform(5, rng, size=7)
    batch = ds.gradient_batch(thetas)
    for i in range(7):
        assert np.allclose(batch[i], ds.gradient(thetas[i]), atol=1e-13)


def test_dataset_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(14)
    ds = make_single_index(40, 5, LinkFunction.hermite(3), sample_uniform(5, rng), 0.25, seed=15)
    path = tmp_path / "data.csv"
    models.save_dataset(ds, path)
    loaded = models.load_dataset(path)
    assert np.array_equal(loaded.inputs, ds.inputs)
    assert np.array_equal(loaded.labels, ds.labels)
    assert loaded.link.kind == ds.link.kind
    assert np.array_equal(loaded.theta_star, ds.theta_star)
    assert loaded.noise_std == ds.noise_std


# ---------------------------------------------------------------------------
# tensor PCA
# ---------------------------------------------------------------------------

def test_tpca_noiseless_gradient_exact():
    d, k = 9, 3
    ts = _e1(d)
    inst = TensorPcaInstance(k, d, ts, 0.0)
    assert np.allclose(tpca_gradient(inst, ts), 0.0, atol=1e-15)
    rng = np.random.default_rng(16)
    for _ in range(10):
        theta = sample_uniform(d, rng)
        m = theta @ ts
        expected = k * m ** (k - 1) * (ts - m * theta)
        assert np.allclose(tpca_gradient(inst, theta), expected, atol=1e-12)


def test_tpca_noiseless_loss_values():
    d, k = 7, 4
    ts = _e1(d)
    inst = TensorPcaInstance(k, d, ts, 0.0)
    assert tpca_loss(inst, ts) == pytest.approx(-1.0, abs=1e-15)
    perp = np.zeros(d)
    perp[1] = 1.0
    assert tpca_loss(inst, perp) == pytest.approx(0.0, abs=1e-15)


def test_tpca_materialized_vs_implicit_identical():
    d, k = 8, 3
    ts = as_unit(np.arange(1.0, d + 1.0))
    mat = TensorPcaInstance.from_sample_count(k, d, ts, n=100, noise_seed=21, storage="materialized")
    imp = TensorPcaInstance.from_sample_count(k, d, ts, n=100, noise_seed=21, storage="implicit")
    rng = np.random.default_rng(17)
    for _ in range(10):
        theta = sample_uniform(d, rng)
        gm = mat.gradient(theta)
        gi = imp.gradient(theta)
        assert np.max(np.abs(gm - gi)) <= 1e-12
        assert mat.loss(theta) == pytest.approx(imp.loss(theta), abs=1e-12)


def test_tpca_implicit_chunk_order_invariance(monkeypatch):
    d, k = 6, 3
    ts = _e1(d)
    imp = TensorPcaInstance(k, d, ts, 0.5, noise_seed=3, storage="implicit")
    theta = sample_uniform(d, np.random.default_rng(18))
    g1 = imp.gradient(theta)
    monkeypatch.setattr(models, "_NOISE_CHUNK", 17)
    g2 = imp.gradient(theta)
    assert np.max(np.abs(g1 - g2)) <= 1e-13


@pytest.mark.parametrize("k", [3, 4])
def test_tpca_gradient_matches_loss_finite_difference(k):
    d = 6
    rng = np.random.default_rng(19)
    inst = TensorPcaInstance.from_sample_count(k, d, sample_uniform(d, rng), n=50, noise_seed=5)
    for _ in range(10):
        theta = sample_uniform(d, rng)
        b = inst.gradient(theta)
        v = rng.standard_normal(d)
        v -= (v @ theta) * theta
        v /= np.linalg.norm(v)
        fd = _fd_directional(inst.loss, theta, v)
        assert fd == pytest.approx(-(b @ v), rel=1e-4, abs=1e-9)


def test_tpca_gradient_tangency_and_boundedness():
    d, k, n = 10, 3, 500
    inst = TensorPcaInstance.from_sample_count(k, d, _e1(d), n=n, noise_seed=6)
    rng = np.random.default_rng(20)
    thetas = sample_uniform(d, rng, size=1000)
    grads = inst.gradient_batch(thetas)
    dots = np.abs(np.einsum("bi,bi->b", grads, thetas))
    norms = np.linalg.norm(grads, axis=1)
    assert np.all(dots <= 1e-10 * np.maximum(norms, 1e-30))
    bound = 1.0 + np.sqrt(d / n)
    ratio = norms.max() / (k * bound)
    # the empirical max stays bounded relative to 1 + sqrt(d/n)
    assert ratio <= 5.0, f"sup ||b|| / (k(1+sqrt(d/n))) = {ratio:.3f}"


def test_tpca_storage_rules():
    with pytest.raises(ValueError):
        TensorPcaInstance(3, 500, _e1(500), 0.1, storage="materialized")  # 1.25e8 entries
    auto = TensorPcaInstance(3, 8, _e1(8), 0.1)
    assert auto.storage == "materialized"
    with pytest.raises(ValueError):
        TensorPcaInstance(1, 8, _e1(8), 0.1)


def test_fresh_sample_stream_exhaustion():
    stream = models.FreshSampleStream(LinkFunction.identity(), _e1(4), 0.0, seed=0, limit=3)
    for _ in range(3):
        x, y = stream.draw()
        assert y == pytest.approx(float(x[0]))
    with pytest.raises(models.SampleStreamExhausted):
        stream.draw()
