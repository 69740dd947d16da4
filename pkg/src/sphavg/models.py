"""Problem instances: single-index datasets and spiked-tensor instances.

Both expose the negative spherical gradient b(theta) of their training
loss (single evaluation and batched-over-replicas forms) plus the loss
itself. Instances are immutable after construction; gradient evaluation
allocates no shared state, so concurrent use is safe.
"""

import csv
import itertools
import json
from math import factorial
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .hermite import LinkFunction
from .sphere import as_unit, project_tangent

MATERIALIZE_LIMIT = 10**7
_NOISE_CHUNK = 1 << 16


class SampleStreamExhausted(RuntimeError):
    """Raised when a fresh-sample stream runs out of samples."""


# ---------------------------------------------------------------------------
# counter-based noise for implicit tensors
# ---------------------------------------------------------------------------

def noise_block(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals for flat tensor indices [start, start+count).

    Deterministic function of (seed, index), independent of how the range
    is chunked: Philox is advanced to the 64-bit word at ``start`` (one
    counter block yields 4 words) and each word maps to a normal through
    the inverse Gaussian CDF, so every index consumes exactly one word.
    """
    if count <= 0:
        return np.zeros(0)
    bg = np.random.Philox(key=seed)
    blocks, within = divmod(start, 4)
    if blocks:
        bg.advance(blocks)
    raw = bg.random_raw(within + count)[within:]
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54
    return ndtri(u)


def _flat_digits(flat: np.ndarray, d: int, k: int) -> np.ndarray:
    """Row-major multi-indices (columns) for flat indices into a (d,)*k tensor."""
    digits = np.empty((flat.size, k), dtype=np.int64)
    rem = flat
    for r in range(k - 1, -1, -1):
        digits[:, r] = rem % d
        rem = rem // d
    return digits


# ---------------------------------------------------------------------------
# tensor PCA
# ---------------------------------------------------------------------------

class TensorPcaInstance:
    """Spiked k-tensor observation: signal theta_star^{(x)k} plus scaled
    i.i.d. Gaussian noise on every one of the d^k entries (no symmetrization).

    The loss is the negative inner product with theta^{(x)k}; its exact
    spherical gradient is k P_theta(T_sym[theta^{(x)k-1}]) where T_sym
    averages the k one-slot contractions of the unsymmetrized tensor, so
    loss and gradient are finite-difference consistent.

    ``storage='materialized'`` keeps the slot-averaged noise as a dense
    (d, d^{k-1}) matrix (allowed up to 1e7 entries); ``'implicit'``
    regenerates entries from the counter-based stream on every contraction,
    bit-identical across calls and evaluation orders.
    """

    def __init__(self, order: int, dimension: int, theta_star, noise_scale: float,
                 noise_seed: int = 0, storage: str = "auto"):
        if order < 2:
            raise ValueError(f"tensor order must be >= 2, got {order}")
        if noise_scale < 0:
            raise ValueError(f"noise_scale must be >= 0, got {noise_scale}")
        self.order = int(order)
        self.dimension = int(dimension)
        self.theta_star = as_unit(theta_star)
        if self.theta_star.shape[0] != self.dimension:
            raise ValueError("theta_star dimension mismatch")
        self.noise_scale = float(noise_scale)
        self.noise_seed = int(noise_seed)
        entries = self.dimension ** self.order
        if storage == "auto":
            storage = "materialized" if entries <= MATERIALIZE_LIMIT else "implicit"
        if storage == "materialized" and entries > MATERIALIZE_LIMIT:
            raise ValueError(f"materialized storage limited to {MATERIALIZE_LIMIT} entries, need {entries}")
        if storage not in ("materialized", "implicit"):
            raise ValueError(f"unknown storage {storage!r}")
        self.storage = storage
        self._sym_flat = None
        if storage == "materialized" and self.noise_scale > 0.0:
            self._sym_flat = self._build_symmetrized()

    @classmethod
    def from_sample_count(cls, order: int, dimension: int, theta_star, n: int,
                          noise_seed: int = 0, storage: str = "auto") -> "TensorPcaInstance":
        """Instance with the n-sample noise level n^{-1/2}."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return cls(order, dimension, theta_star, n ** -0.5, noise_seed, storage)

    def _build_symmetrized(self) -> np.ndarray:
        d, k = self.dimension, self.order
        z = noise_block(self.noise_seed, 0, d**k).reshape((d,) * k)
        sym = np.zeros_like(z)
        for perm in itertools.permutations(range(k)):
            sym += np.transpose(z, perm)
        sym /= float(factorial(k))
        return np.ascontiguousarray(sym.reshape(d, d ** (k - 1)))

    # -- contraction helpers ------------------------------------------------

    def _power_weights(self, thetas: np.ndarray) -> np.ndarray:
        """Flattened (k-1)-fold outer powers of each row, shape (B, d^{k-1})."""
        w = thetas
        for _ in range(self.order - 2):
            w = (w[:, :, None] * thetas[:, None, :]).reshape(thetas.shape[0], -1)
        return w

    def _noise_slot_sum(self, thetas: np.ndarray) -> np.ndarray:
        """Sum over slots of the one-slot noise contractions, (B, d).

        Equals k * Z_sym[theta^{(x)k-1}] and is the exact ambient gradient
        of <Z, theta^{(x)k}>.
        """
        B, d = thetas.shape
        k = self.order
        if self._sym_flat is not None:
            return k * (self._power_weights(thetas) @ self._sym_flat.T)
        out = np.zeros((B, d))
        total = d**k
        for start in range(0, total, _NOISE_CHUNK):
            count = min(_NOISE_CHUNK, total - start)
            z = noise_block(self.noise_seed, start, count)
            digits = _flat_digits(np.arange(start, start + count, dtype=np.int64), d, k)
            gathered = thetas[:, digits]                      # (B, count, k)
            prefix = np.ones((B, count, k))
            for r in range(1, k):
                prefix[:, :, r] = prefix[:, :, r - 1] * gathered[:, :, r - 1]
            suffix = np.ones((B, count, k))
            for r in range(k - 2, -1, -1):
                suffix[:, :, r] = suffix[:, :, r + 1] * gathered[:, :, r + 1]
            for b in range(B):
                for r in range(k):
                    out[b] += np.bincount(
                        digits[:, r], weights=z * prefix[b, :, r] * suffix[b, :, r], minlength=d
                    )
        return out

    # -- public surface ------------------------------------------------------

    def gradient_batch(self, thetas: np.ndarray, work=None) -> np.ndarray:
        """Negative spherical gradients, one row per unit-norm row of ``thetas``."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[1] != self.dimension:
            raise ValueError("theta dimension mismatch")
        k = self.order
        m = thetas @ self.theta_star
        amb = (k * m ** (k - 1))[:, None] * self.theta_star[None, :]
        if self.noise_scale > 0.0:
            amb = amb + self.noise_scale * self._noise_slot_sum(thetas)
        amb -= np.einsum("bi,bi->b", amb, thetas)[:, None] * thetas
        return amb

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.gradient_batch(theta[None, :])[0]

    def loss_batch(self, thetas: np.ndarray) -> np.ndarray:
        """Negative inner product of the tensor with theta^{(x)k}, per row."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        k = self.order
        vals = (thetas @ self.theta_star) ** k
        if self.noise_scale > 0.0:
            slot = self._noise_slot_sum(thetas)
            vals = vals + self.noise_scale * np.einsum("bi,bi->b", slot, thetas) / k
        return -vals

    def loss(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(self.loss_batch(theta[None, :])[0])

    def make_workspace(self, batch: int):
        return None


# ---------------------------------------------------------------------------
# single-index models
# ---------------------------------------------------------------------------

class SingleIndexDataset:
    """n labelled Gaussian samples y_i = sigma(theta_star . x_i) + xi_i.

    The correlation loss is (1/n) sum_i (1 - sigma(theta . x_i) y_i); its
    negative spherical gradient is (1/n) sum_i y_i sigma'(theta . x_i)
    P_theta(x_i). When sigma' is a polynomial of degree <= 2 and the
    dimension is small, gradients reduce to precomputed data moments
    (a d-vector, a d x d matrix and a d x d^2 contraction), which makes
    long SDE runs independent of n per step.
    """

    def __init__(self, inputs: np.ndarray, labels: np.ndarray, link: LinkFunction,
                 theta_star, noise_std: float, seed: int):
        self.inputs = np.asarray(inputs, dtype=float)
        self.labels = np.asarray(labels, dtype=float)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("inputs must be (n, d) with matching labels")
        if self.inputs.shape[0] < 1 or self.inputs.shape[1] < 2:
            raise ValueError("need n >= 1 and d >= 2")
        self.link = link
        self.theta_star = as_unit(theta_star)
        if self.theta_star.shape[0] != self.inputs.shape[1]:
            raise ValueError("theta_star dimension mismatch")
        self.noise_std = float(noise_std)
        self.seed = int(seed)
        self._moments = self._build_moments()

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]

    def _build_moments(self):
        """Moment arrays for polynomial sigma' of degree <= 2, else None."""
        coeffs = self.link.poly_derivative_coeffs
        d = self.dimension
        if coeffs is None or coeffs.size > 3 or d > 64:
            return None
        X, y = self.inputs, self.labels
        n = self.n
        a = np.zeros(3)
        a[: coeffs.size] = coeffs
        v0 = X.T @ y / n
        m1 = X.T @ (y[:, None] * X) / n
        q2 = np.zeros((d, d * d))
        yx = y[:, None] * X
        for start in range(0, n, 1024):
            sl = slice(start, min(start + 1024, n))
            q2 += np.einsum("ij,ik,il->jkl", yx[sl], X[sl], X[sl], optimize=True).reshape(d, d * d)
        q2 /= n
        return a, v0, m1, q2

    def _ambient_gradient(self, thetas: np.ndarray, work=None) -> np.ndarray:
        X, y = self.inputs, self.labels
        if self._moments is not None:
            a, v0, m1, q2 = self._moments
            B, d = thetas.shape
            w2 = (thetas[:, :, None] * thetas[:, None, :]).reshape(B, d * d)
            return a[0] * v0[None, :] + a[1] * (thetas @ m1.T) + a[2] * (w2 @ q2.T)
        if work is None:
            work = self.make_workspace(thetas.shape[0])
        U, W = work["U"], work["W"]
        np.matmul(X, thetas.T, out=U)
        coeffs = self.link.poly_derivative_coeffs
        if coeffs is not None:
            # in-place Horner keeps the per-step cost allocation free
            W[:] = coeffs[-1]
            for c in coeffs[-2::-1]:
                W *= U
                W += c
        else:
            W[:] = self.link.derivative(U)
        W *= y[:, None]
        return (X.T @ W).T / self.n

    def gradient_batch(self, thetas: np.ndarray, work=None) -> np.ndarray:
        """Negative spherical gradients of the correlation loss, per row."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[1] != self.dimension:
            raise ValueError("theta dimension mismatch")
        amb = self._ambient_gradient(thetas, work=work)
        amb -= np.einsum("bi,bi->b", amb, thetas)[:, None] * thetas
        return amb

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.gradient_batch(theta[None, :])[0]

    def loss_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        preds = self.link.value(self.inputs @ thetas.T)
        return 1.0 - (preds * self.labels[:, None]).mean(axis=0)

    def loss(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(self.loss_batch(theta[None, :])[0])

    def sample(self, index: int):
        return self.inputs[index], self.labels[index]

    def make_workspace(self, batch: int):
        if self._moments is not None:
            return None
        return {"U": np.empty((self.n, batch)), "W": np.empty((self.n, batch))}


def make_single_index(n: int, d: int, link: LinkFunction, theta_star,
                      noise_std: float, seed: int) -> SingleIndexDataset:
    """Draw a reproducible dataset from the planted model.

    The generator consumes the (n, d) input block first and the n label
    noises second, so datasets with the same seed are bit-identical.
    """
    if n < 1 or d < 2:
        raise ValueError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    theta_star = as_unit(theta_star)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    noise = rng.standard_normal(n)
    y = np.asarray(link.value(X @ theta_star), dtype=float) + noise_std * noise
    return SingleIndexDataset(X, y, link, theta_star, noise_std, seed)


def sim_gradient(dataset: SingleIndexDataset, theta) -> np.ndarray:
    """Negative spherical gradient of the empirical correlation loss."""
    return dataset.gradient(theta)


def correlation_loss(dataset: SingleIndexDataset, theta) -> float:
    """(1/n) sum_i (1 - sigma(theta . x_i) y_i)."""
    return dataset.loss(theta)


def tpca_gradient(instance: TensorPcaInstance, theta) -> np.ndarray:
    """Negative spherical gradient of the tensor negative log-likelihood."""
    return instance.gradient(theta)


def tpca_loss(instance: TensorPcaInstance, theta) -> float:
    """Negative inner product of the observed tensor with theta^{(x)k}."""
    return instance.loss(theta)


class FreshSampleStream:
    """Finite stream of fresh samples from a planted single-index model."""

    def __init__(self, link: LinkFunction, theta_star, noise_std: float, seed: int, limit: int):
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit}")
        self.link = link
        self.theta_star = as_unit(theta_star)
        self.noise_std = float(noise_std)
        self.limit = int(limit)
        self._rng = np.random.default_rng(seed)
        self._drawn = 0

    @property
    def remaining(self) -> int:
        return self.limit - self._drawn

    def draw(self):
        if self._drawn >= self.limit:
            raise SampleStreamExhausted(f"stream exhausted after {self.limit} samples")
        self._drawn += 1
        x = self._rng.standard_normal(self.theta_star.shape[0])
        y = float(self.link.value(x @ self.theta_star)) + self.noise_std * float(self._rng.standard_normal())
        return x, y


# ---------------------------------------------------------------------------
# dataset CSV round trip
# ---------------------------------------------------------------------------

def save_dataset(dataset: SingleIndexDataset, csv_path, sidecar_path=None) -> None:
    """Write rows x_1..x_d,y plus a JSON sidecar of model metadata."""
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    d = dataset.dimension
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(d)] + ["y"])
        for row, label in zip(dataset.inputs, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])
    meta = {
        "link_kind": dataset.link.kind,
        "seed": dataset.seed,
        "theta_star": [repr(float(v)) for v in dataset.theta_star],
        "noise_std": dataset.noise_std,
        "n": dataset.n,
        "d": d,
    }
    sidecar_path.write_text(json.dumps(meta, indent=2))


def load_dataset(csv_path, sidecar_path=None) -> SingleIndexDataset:
    """Inverse of ``save_dataset``; only built-in link kinds round trip."""
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    meta = json.loads(sidecar_path.read_text())
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    link = link_from_name(meta["link_kind"])
    theta_star = np.array([float(v) for v in meta["theta_star"]])
    return SingleIndexDataset(
        inputs=data[:, :-1],
        labels=data[:, -1],
        link=link,
        theta_star=theta_star,
        noise_std=float(meta["noise_std"]),
        seed=int(meta["seed"]),
    )


def link_from_name(name: str) -> LinkFunction:
    """Resolve a built-in link from its kind string, e.g. 'hermite(3)'."""
    name = name.strip()
    if name.startswith("hermite(") and name.endswith(")"):
        return LinkFunction.hermite(int(name[len("hermite("):-1]))
    simple = {
        "identity": LinkFunction.identity,
        "square": LinkFunction.square,
        "relu": LinkFunction.relu,
        "absolute_value": LinkFunction.absolute_value,
    }
    if name in simple:
        return simple[name]()
    raise ValueError(f"unknown link kind {name!r}")
