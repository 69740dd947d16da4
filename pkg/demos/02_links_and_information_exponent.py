"""Link functions, Hermite expansions, and the information exponent.

The information exponent (index of the first nonzero Hermite coefficient
at or above 1) controls how hard a planted direction is to find. This
script expands the built-in links and a custom bump-modulated square and
prints their leading coefficients and exponents.
"""

import numpy as np

from sphavg.hermite import LinkFunction, expand, information_exponent

links = [
    LinkFunction.identity(),
    LinkFunction.relu(),
    LinkFunction.absolute_value(),
    LinkFunction.square(),
    LinkFunction.hermite(3),
    LinkFunction.hermite(4),
    LinkFunction.from_callables(
        "t^2 exp(-t^2)",
        value=lambda t: t**2 * np.exp(-(t**2)),
        derivative=lambda t: (2 * t - 2 * t**3) * np.exp(-(t**2)),
    ),
]

print(f"{'link':<16} {'k*':>3}   c_1..c_6")
for link in links:
    e = expand(link)
    k = information_exponent(e)
    coeffs = " ".join(f"{c:+.3f}" for c in e.coefficients[1:7])
    print(f"{link.kind:<16} {k:>3}   {coeffs}")

print("\nAll non-Hermite built-ins are rescaled to unit Gaussian L2 norm at")
print("construction, so E[sigma^2] = 1 for each:")
for link in links[:4]:
    print(f"  {link.kind:<16} E[sigma^2] = {link.gaussian_l2_norm_sq():.12f}")
