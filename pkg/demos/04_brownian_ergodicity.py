"""Ergodic averaging of spherical Brownian motion.

With the drift turned off the iterate is pure Brownian motion on the
sphere, whose time average contracts to zero like 1/sqrt(T d). The decay
exponent is read off a log-log regression across horizons.
"""

import numpy as np

from sphavg import dynamics

d = 20
cfg = dynamics.SdeConfig(dimension=d, epsilon=0.0, dt=0.005, horizon_T=160.0, record_stride=2000)
theta_star = np.eye(d)[0]
summaries = dynamics.run_batch(cfg, None, list(range(20)), theta_star=theta_star,
                               track_second_moment=False)

times = summaries[0].records["time"]
horizons = (10.0, 40.0, 160.0)
print(f"{'T':>6} {'mean ||avg beta||':>18} {'x sqrt((d-1)T)':>15}")
means = []
for T in horizons:
    i = int(np.argmin(np.abs(times - T)))
    norms = np.array([s.records["norm_avg"][i] for s in summaries])
    means.append(norms.mean())
    print(f"{T:>6.0f} {norms.mean():>18.5f} {norms.mean() * np.sqrt((d - 1) * T):>15.2f}")

slope = np.polyfit(np.log(horizons), np.log(means), 1)[0]
print(f"\nlog-log slope across T: {slope:.3f} (ergodic averaging predicts -0.5)")
