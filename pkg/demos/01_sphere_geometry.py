"""Geometry primitives on the sphere.

Uniform sampling is a Gaussian draw followed by normalization; this script
checks the closed-form even moments E[z_1^{2k}] = (2k-1)!!/prod(d+2j)
against Monte-Carlo estimates and demonstrates rotation invariance of the
empirical second-moment matrix.
"""

import numpy as np

from sphavg import sphere

rng = np.random.default_rng(0)

print("== closed-form moments vs Monte Carlo ==")
for d in (5, 20, 100):
    z = sphere.sample_uniform(d, rng, size=200_000)
    for k in (1, 2, 3):
        mc = (z[:, 0] ** (2 * k)).mean()
        exact = sphere.spherical_even_moment(d, 2 * k)
        print(f"  d={d:>3} E[z1^{2*k}]: closed form {exact:.3e}   MC {mc:.3e}")

print("\n== tangent projection ==")
base = sphere.sample_uniform(8, rng)
v = rng.standard_normal(8)
t = sphere.project_tangent(base, v)
print(f"  |t . base| = {abs(t @ base):.2e} (tangent to machine precision)")
print(f"  projecting twice moves coords by {np.linalg.norm(sphere.project_tangent(base, t) - t):.2e}")

print("\n== rotation invariance ==")
d, n = 10, 100_000
q, _ = np.linalg.qr(rng.standard_normal((d, d)))
z = sphere.sample_uniform(d, rng, size=n)
emp = (z @ q.T).T @ (z @ q.T) / n
print(f"  ||Q-rotated second moment - I/d||_op = {np.linalg.norm(emp - np.eye(d) / d, 2):.4f}")
