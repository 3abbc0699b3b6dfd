"""
How many wingbeats to roll 90 degrees
=====================================

Build a handful of synthetic roll maneuvers, normalize time by the
wingbeat, align them on the asymmetric downstroke, and read off the
agility metric for each trial and for the ensemble mean.
"""
import numpy as np

from morphwing import flightlog as fl

rng = np.random.default_rng(3)
trials = []
for k in range(5):
    freq = rng.uniform(3.2, 3.8)
    t = np.arange(0, 2.5, 1 / 200)
    tau = t * freq - 1.0
    roll = 90 * (np.clip(tau, 0, None) / rng.uniform(2.3, 2.7)) ** 1.4 + rng.normal(0, 1, len(t))
    trials.append(fl.AttitudeLog(
        t=t, roll=roll, pitch=rng.normal(0, 2, len(t)), yaw=10 * k + 3 * np.clip(tau, 0, None),
        wingbeat_markers=fl.markers_from_frequency(freq, 0.0, t[-1]), maneuver_marker=1,
    ))

for k, log in enumerate(trials):
    print(f"trial {k}: {fl.agility_metric(log):.2f} wingbeats")

ens = fl.ensemble_stats(trials, bins=20)
print(f"ensemble mean: {fl.agility_metric(ens):.2f} wingbeats")
print("\n tau   roll   se")
for row in list(ens.rows())[::10]:
    print(f"{row[0]:5.2f} {row[1]:6.1f} {row[2]:5.2f}")
