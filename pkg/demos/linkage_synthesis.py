"""
Sizing the wing skeleton
========================

Given the spar lengths and the joint angles wanted at the extended and
tucked slider positions, solve for the remaining link lengths, then sweep
the slider to watch the wing fold.
"""
import math

import numpy as np

from morphwing import linkage
from morphwing.reference import DESIGN_GIVEN

given = DESIGN_GIVEN
lengths = linkage.synthesize_linkage(given)
for name, value in lengths.to_dict().items():
    print(f"{name} = {value:9.4f} mm")

# The slider range reachable without reassembling the linkage
lo, hi = linkage.reachable_range(lengths, given)
print(f"\nreachable slider range: {lo:.2f} .. {hi:.2f} mm")

# Joint angles and half-span while the slider moves aft
print("\n x_A   shoulder  elbow   wrist   half-span")
for x in np.linspace(45, 65, 9):
    s = linkage.forward_kinematics(lengths, given, x)
    span = linkage.wingspan(lengths, given, x)
    print(f"{x:5.1f} {math.degrees(s.theta_s):8.2f} {math.degrees(s.theta_e):7.2f} "
          f"{math.degrees(s.theta_w):7.2f} {span:9.1f}")

# Tilting the wrist hinge makes the folding hand wing pitch out of plane
s = linkage.forward_kinematics(lengths, given, 60.0)
for mount in (0, 10, 20, 25):
    pose = linkage.skeleton_pose(s, 0.0, math.radians(mount), lengths, given)
    print(f"wrist mount {mount:2d} deg -> hand-wing pitch {math.degrees(pose.hand_wing_pitch):6.2f} deg")
