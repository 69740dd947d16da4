"""Drift fields b(theta) and their losses.

Both problem families expose the negative spherical gradient of a loss:
the correlation loss for single-index data, the negative tensor inner
product for spiked tensors. This script checks finite-difference
consistency and the equality of the materialized and implicit (counter-
based streaming) tensor noise paths.
"""

import numpy as np

from sphavg.hermite import LinkFunction
from sphavg.models import TensorPcaInstance, make_single_index
from sphavg.sphere import sample_uniform

rng = np.random.default_rng(1)

print("== single-index: gradient vs central finite differences ==")
ds = make_single_index(500, 8, LinkFunction.hermite(3), sample_uniform(8, rng), 0.5, seed=2)
theta = sample_uniform(8, rng)
b = ds.gradient(theta)
v = rng.standard_normal(8)
v -= (v @ theta) * theta
v /= np.linalg.norm(v)
h = 1e-5
fd = (ds.loss(theta + h * v) - ds.loss(theta - h * v)) / (2 * h)
print(f"  directional FD {fd:+.8f}   -b.v {-(b @ v):+.8f}")

print("\n== tensor PCA: materialized vs implicit noise storage ==")
ts = sample_uniform(8, rng)
mat = TensorPcaInstance.from_sample_count(3, 8, ts, n=200, noise_seed=3, storage="materialized")
imp = TensorPcaInstance.from_sample_count(3, 8, ts, n=200, noise_seed=3, storage="implicit")
theta = sample_uniform(8, rng)
gm, gi = mat.gradient(theta), imp.gradient(theta)
print(f"  max |materialized - implicit| = {np.max(np.abs(gm - gi)):.2e}")
print(f"  losses: {mat.loss(theta):+.6f} vs {imp.loss(theta):+.6f}")

print("\n== tensor PCA: noiseless geometry ==")
inst = TensorPcaInstance(3, 8, ts, 0.0)
m = theta @ ts
expected = 3 * m**2 * (ts - m * theta)
print(f"  b(theta) vs k m^(k-1) P_theta(theta_star): max diff {np.max(np.abs(inst.gradient(theta) - expected)):.2e}")
print(f"  loss at theta_star: {inst.loss(ts):+.1f} (signal fully aligned)")
