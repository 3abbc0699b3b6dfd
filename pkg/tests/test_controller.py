import io
import math
import random

import pytest

from morphwing import controller as ctl
from morphwing.controller import (
    ControllerConfig, HallTrigger, MotorStop, RollCommand, RollWithoutPeriod, ServoPulse, ThrottleSet,
)


def hall_train(t0, period, n):
    return [HallTrigger(t0 + k * period) for k in range(n)]


def test_pulse_timing():
    events = hall_train(1.0, 0.4, 2) + [RollCommand(1.45, "left"), HallTrigger(1.8)]
    _, out = ctl.simulate(events)
    pulses = [o for o in out if isinstance(o, ServoPulse)]
    assert len(pulses) == 1
    p = pulses[0]
    assert p.t == 1.8
    assert p.start == pytest.approx(1.8 + 0.2, abs=1e-12)
    assert p.end == pytest.approx(1.8 + 0.5, abs=1e-12)
    assert p.side == "left"


def test_pulse_covers_exactly_one_downstroke():
    p = ServoPulse(t=0.0, side="right", start=0.2, duration=0.3)
    cov = ctl.asymmetric_downstroke_window(p, 0.4)
    assert cov.one_shot
    assert cov.cycle_index == 1
    assert cov.covered_phase_interval == pytest.approx((0.75, 1.25))


def test_roll_without_period():
    state, out = ctl.simulate([RollCommand(0.0, "right")])
    assert out == [RollWithoutPeriod(0.0, "right")]
    assert state.pending_roll == "right"
    # first trigger still gives no period, the second does
    state, out = ctl.simulate([HallTrigger(0.1), HallTrigger(0.5)], state=state)
    assert [type(o) for o in out] == [ServoPulse]
    assert out[0].duration == pytest.approx(0.3)


def test_queue_policy_keeps_latest_command():
    events = hall_train(0.0, 0.4, 2) + [
        RollCommand(0.45, "left"), HallTrigger(0.8),
        RollCommand(0.85, "right"), HallTrigger(1.2), HallTrigger(1.6),
    ]
    _, out = ctl.simulate(events)
    pulses = [o for o in out if isinstance(o, ServoPulse)]
    # the right command arrives while the left pulse is active; it fires once
    # the pulse window has cleared
    assert [p.side for p in pulses] == ["left", "right"]
    assert pulses[1].start >= pulses[0].end


def test_drop_policy_ignores_command_during_pulse():
    cfg = ControllerConfig(roll_policy="drop")
    events = hall_train(0.0, 0.4, 2) + [
        RollCommand(0.45, "left"), HallTrigger(0.8),
        RollCommand(1.05, "right"), HallTrigger(1.2), HallTrigger(1.6),
    ]
    _, out = ctl.simulate(events, cfg)
    assert [p.side for p in out if isinstance(p, ServoPulse)] == ["left"]


def test_out_of_order_events_rejected():
    with pytest.raises(ValueError):
        ctl.simulate([HallTrigger(1.0), HallTrigger(0.5)])


def test_bad_side_and_policy():
    with pytest.raises(ValueError):
        RollCommand(0.0, "up")
    with pytest.raises(ValueError):
        ControllerConfig(roll_policy="maybe")


def _random_sequence(rng):
    t, period = 0.0, rng.uniform(0.25, 0.5)
    events = []
    for _ in range(rng.randint(5, 40)):
        t += period * rng.uniform(0.9, 1.1)
        events.append(HallTrigger(t))
        if rng.random() < 0.3:
            events.append(ThrottleSet(t + rng.uniform(0.01, 0.2), rng.choice([0.0, 0.02, 0.3, 1.0])))
        if rng.random() < 0.2:
            events.append(RollCommand(t + rng.uniform(0.01, 0.2), rng.choice(["left", "right"])))
    events.sort(key=lambda e: e.t)
    return events


@pytest.mark.parametrize("seed", range(100))
def test_motor_stop_only_at_triggers(seed):
    rng = random.Random(seed)
    events = _random_sequence(rng)
    cfg = ControllerConfig()
    _, out = ctl.simulate(events, cfg)
    trigger_times = {e.t for e in events if isinstance(e, HallTrigger)}
    stops = [o for o in out if isinstance(o, MotorStop)]
    for stop in stops:
        assert stop.t in trigger_times
    # reference: first trigger after each drop below threshold while running
    expected, armed, running = [], False, True
    for e in events:
        if isinstance(e, ThrottleSet):
            armed = e.value < cfg.glide_threshold
            running = running or not armed
        elif isinstance(e, HallTrigger) and armed and running:
            expected.append(e.t)
            armed, running = False, False
    assert [s.t for s in stops] == expected


def test_deterministic_replay():
    events = _random_sequence(random.Random(5))
    assert ctl.simulate(events) == ctl.simulate(events)


def test_events_csv_round_trip():
    text = "t,kind,arg\n0.0,hall,\n0.4,hall,\n0.5,roll,left\n0.6,throttle,0.0\n0.8,hall,\n"
    events = ctl.read_events_csv(io.StringIO(text))
    assert events == [
        HallTrigger(0.0), HallTrigger(0.4), RollCommand(0.5, "left"), ThrottleSet(0.6, 0.0), HallTrigger(0.8),
    ]
    _, out = ctl.simulate(events)
    rows = list(ctl.output_rows(out))
    assert rows[0][1] == "ServoPulse"
    assert rows[1][1] == "MotorStop"
    with pytest.raises(ValueError):
        ctl.read_events_csv(io.StringIO("t,kind,arg\n0,bogus,\n"))
