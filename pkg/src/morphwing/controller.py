"""
Rolling & gliding controller, simulated on a virtual clock.

The controller sees three kinds of events: Hall triggers (the wing passing
the level position on its way down), roll commands from the autopilot, and
throttle settings. It keeps the wingbeat period from the last two triggers,
turns a roll command into one servo pulse that limits one wing during the
next downstroke only, and stops the motor on a trigger once the throttle has
dropped below the glide threshold.

Everything is a value: :func:`step` takes a state and an event and returns
the next state plus the outputs, so a replay of the same events always
yields the same outputs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Tuple, Union

SIDES = ("left", "right")


@dataclass(frozen=True)
class HallTrigger:
    t: float


@dataclass(frozen=True)
class RollCommand:
    t: float
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")


@dataclass(frozen=True)
class ThrottleSet:
    t: float
    value: float


ControllerEvent = Union[HallTrigger, RollCommand, ThrottleSet]


@dataclass(frozen=True)
class ServoPulse:
    t: float
    side: str
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class MotorStop:
    t: float


@dataclass(frozen=True)
class RollWithoutPeriod:
    """Warning: a roll command arrived before any period estimate; it stays queued."""

    t: float
    side: str


ControllerOutput = Union[ServoPulse, MotorStop, RollWithoutPeriod]


@dataclass(frozen=True)
class ControllerConfig:
    glide_threshold: float = 0.05
    # what to do with a roll command that arrives while a pulse is still active
    roll_policy: str = "queue"
    pulse_delay: float = 0.5
    pulse_length: float = 0.75

    def __post_init__(self):
        if self.roll_policy not in ("queue", "drop"):
            raise ValueError("roll_policy must be 'queue' or 'drop'")


@dataclass(frozen=True)
class ControllerState:
    last_trigger: Optional[float] = None
    period_estimate: Optional[float] = None
    pending_roll: Optional[str] = None
    throttle: float = 1.0
    glide_armed: bool = False
    motor_running: bool = True
    last_event_t: float = -math.inf
    pulse_end: float = -math.inf


def step(
    state: ControllerState,
    event: ControllerEvent,
    config: ControllerConfig = ControllerConfig(),
) -> Tuple[ControllerState, List[ControllerOutput]]:
    if event.t < state.last_event_t:
        raise ValueError(f"event at t={event.t} precedes last event at t={state.last_event_t}")
    state = replace(state, last_event_t=event.t)
    outputs: List[ControllerOutput] = []

    if isinstance(event, RollCommand):
        if config.roll_policy == "drop" and event.t < state.pulse_end:
            return state, outputs
        state = replace(state, pending_roll=event.side)
        if state.period_estimate is None:
            outputs.append(RollWithoutPeriod(t=event.t, side=event.side))
        return state, outputs

    if isinstance(event, ThrottleSet):
        armed = event.value < config.glide_threshold
        state = replace(
            state,
            throttle=event.value,
            glide_armed=armed,
            motor_running=state.motor_running or not armed,
        )
        return state, outputs

    if not isinstance(event, HallTrigger):
        raise TypeError(f"unknown event {event!r}")

    t0 = event.t
    period = state.period_estimate
    if state.last_trigger is not None and t0 > state.last_trigger:
        period = t0 - state.last_trigger
    state = replace(state, last_trigger=t0, period_estimate=period)

    if state.pending_roll is not None and period is not None:
        start = t0 + config.pulse_delay * period
        if start >= state.pulse_end:
            pulse = ServoPulse(
                t=t0, side=state.pending_roll, start=start, duration=config.pulse_length * period
            )
            outputs.append(pulse)
            state = replace(state, pending_roll=None, pulse_end=pulse.end)

    if state.glide_armed and state.motor_running:
        outputs.append(MotorStop(t=t0))
        state = replace(state, glide_armed=False, motor_running=False)
    return state, outputs


def simulate(
    events: Iterable[ControllerEvent],
    config: ControllerConfig = ControllerConfig(),
    state: Optional[ControllerState] = None,
) -> Tuple[ControllerState, List[ControllerOutput]]:
    """Feed events in order; returns the final state and every output."""
    state = state or ControllerState()
    outputs: List[ControllerOutput] = []
    for event in events:
        state, out = step(state, event, config)
        outputs.extend(out)
    return state, outputs


@dataclass(frozen=True)
class DownstrokeCoverage:
    # index of the covered downstroke, counted in cycles after the trigger
    cycle_index: Optional[int]
    # overlap with that downstroke, in cycles relative to the trigger
    covered_phase_interval: Optional[Tuple[float, float]]
    n_downstrokes: int

    @property
    def one_shot(self) -> bool:
        return self.n_downstrokes == 1


def asymmetric_downstroke_window(
    pulse: ServoPulse, period: float, trigger_time: Optional[float] = None
) -> DownstrokeCoverage:
    """Which downstrokes a servo pulse overlaps.

    The trigger marks mid-downstroke, so downstroke k occupies
    ``[k - 1/4, k + 1/4]`` cycles after it. ``trigger_time`` defaults to the
    pulse's own trigger (``pulse.t``). Overlaps of zero length do not count.
    """
    t0 = pulse.t if trigger_time is None else trigger_time
    lo = (pulse.start - t0) / period
    hi = (pulse.end - t0) / period
    covered = []
    for k in range(math.floor(lo - 0.25), math.ceil(hi + 0.25) + 1):
        a, b = max(lo, k - 0.25), min(hi, k + 0.25)
        if b - a > 1e-12:
            covered.append((k, (a, b)))
    if not covered:
        return DownstrokeCoverage(None, None, 0)
    k, interval = covered[0]
    return DownstrokeCoverage(k, interval, len(covered))


# ------------------------------------------------------------------ CSV I/O

EVENT_HEADER = ("t", "kind", "arg")
OUTPUT_HEADER = ("t", "kind", "side", "start", "duration")


def read_events_csv(fh) -> List[ControllerEvent]:
    """Parse ``t,kind,arg`` rows; kind is hall, roll (arg = side) or throttle
    (arg = fraction of full scale)."""
    events: List[ControllerEvent] = []
    for row in csv.DictReader(fh):
        t = float(row["t"])
        kind = row["kind"].strip().lower()
        arg = (row.get("arg") or "").strip()
        if kind in ("hall", "halltrigger"):
            events.append(HallTrigger(t))
        elif kind in ("roll", "rollcommand"):
            events.append(RollCommand(t, arg.lower()))
        elif kind in ("throttle", "throttleset"):
            events.append(ThrottleSet(t, float(arg)))
        else:
            raise ValueError(f"unknown event kind {kind!r}")
    return events


def output_rows(outputs: Iterable[ControllerOutput]):
    for out in outputs:
        if isinstance(out, ServoPulse):
            yield (out.t, "ServoPulse", out.side, out.start, out.duration)
        elif isinstance(out, MotorStop):
            yield (out.t, "MotorStop", "", out.t, "")
        else:
            yield (out.t, "RollWithoutPeriod", out.side, "", "")
