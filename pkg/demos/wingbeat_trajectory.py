"""
Morphing-coupled wingbeat
=========================

The conical rocker drives both the flap and the motor input slider. The
decoupler passes the more aft of the motor and servo sliders to the wing,
so with the servo parked at the extended lock the wing stays open through
the downstroke and folds on the upstroke.
"""
import math

import numpy as np

from morphwing import crm, linkage
from morphwing.reference import DESIGN_GIVEN

given = DESIGN_GIVEN
lengths = linkage.synthesize_linkage(given)
cfg = crm.CrmConfig(R=12.0, H=20.0, gear_rate=3.0, mis_travel=(0.0, 20.0))
print(f"flap amplitude: {math.degrees(crm.flap_amplitude(cfg)):.2f} deg")

traj = crm.wingbeat_trajectory(cfg, lengths, given, math.radians(15), lambda t: 0.0, cfg.period, 16)
print("\n gear   flap   stroke   x_OS  tip_y  tip_z")
for smp in traj["right"]:
    stroke = "down" if crm.is_downstroke(cfg, smp.gear_angle) else "up"
    tip = smp.pose.wingtip
    print(f"{math.degrees(smp.gear_angle):5.0f} {math.degrees(smp.flap_angle):6.1f} {stroke:>6} "
          f"{smp.x_OS:6.2f} {tip[1]:6.1f} {tip[2]:6.1f}")

# Raise the left servo slider for one downstroke: only that downstroke loses span
T = cfg.period


def left(t):
    g = crm.gear_angle_at(cfg, t)
    return 10.0 if T <= t < 2 * T and crm.is_downstroke(cfg, g) else 0.0


traj = crm.wingbeat_trajectory(cfg, lengths, given, 0.0, {"left": left, "right": lambda t: 0.0}, 3 * T, 16)
diff = np.array([r.pose.wingtip[1] + l.pose.wingtip[1] for l, r in zip(traj["left"], traj["right"])])
print("\nright minus left half-span per sample (mm):")
print(np.round(diff, 1).reshape(3, 16))

# Full trajectory as CSV, ready for any plotting tool
csv_text = crm.trajectory_csv(traj)
print("\n" + "\n".join(csv_text.splitlines()[:3]))
