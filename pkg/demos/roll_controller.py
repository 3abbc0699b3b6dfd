"""
Timing the asymmetric downstroke
================================

The flight controller waits half a wingbeat after a Hall trigger and then
holds the roll servo for three quarters of a wingbeat, which covers exactly
one downstroke. Throttle below the glide threshold stops the motor at the
next trigger, leaving the wings level.
"""
from morphwing import controller as ctl
from morphwing.controller import HallTrigger, RollCommand, ThrottleSet

T = 0.4
events = [HallTrigger(k * T) for k in range(3)]
events += [RollCommand(0.9, "left"), HallTrigger(1.2), ThrottleSet(1.3, 0.0), HallTrigger(1.6)]
events.sort(key=lambda e: e.t)

state, outputs = ctl.simulate(events)
for out in outputs:
    print(out)

pulse = outputs[0]
cover = ctl.asymmetric_downstroke_window(pulse, T)
print(f"\npulse {pulse.start:.2f}..{pulse.end:.2f} s covers downstroke {cover.cycle_index} "
      f"(phase {cover.covered_phase_interval}), one shot: {cover.one_shot}")
print("motor running:", state.motor_running)
