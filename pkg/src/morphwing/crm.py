"""
Conical rocker mechanism (CRM) and morphing decoupler.

The gear turns at ``gear_rate`` rev/s. An eccentric crank of radius R drives
the rocker around a cone whose apex is the cross-shaft centre, a height H
above the crank plane. The lateral component of the crank offset rocks the
humeral spar about the body-longitudinal shaft, giving a flap angle

    flap(g) = arctan(R sin g / H),   peak-to-peak 2 arctan(R / H)

while its fore-aft component drives the motor input slider (MIS).

Phase convention: flap is positive wing-up, so the downstroke is the half
cycle with cos g < 0 and the wing passes the level position moving down at
g = pi, where the Hall trigger fires. The MIS is at its anterior extreme at
mid-downstroke; flapping leads the extension motion by a quarter cycle.

The decoupler output slider (OS) follows whichever input slider is more
posterior (``max``). With ``mis_overtravel`` equal to the OS travel, the MIS
spends the whole downstroke anterior of an SIS locked at ``x_min``, so the
wing stays fully extended for the entire downstroke and tucks with the MIS
during the upstroke. ``mis_overtravel = 0`` models the bare CRM, which only
reaches full extension at the level position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from ._io import csv_text
from .linkage import LinkageDerived, LinkageGiven, SkeletonPose, forward_kinematics, skeleton_pose

SIDES = ("left", "right")

TRAJECTORY_HEADER = (
    "t", "side", "gear_angle_rad", "flap_angle_rad", "x_mis_mm", "x_sis_mm", "x_os_mm",
    "wrist_x", "wrist_y", "wrist_z", "tip_x", "tip_y", "tip_z",
)


@dataclass(frozen=True)
class CrmConfig:
    R: float
    H: float
    gear_rate: float
    mis_travel: tuple = (0.0, 20.0)
    # MIS excursion anterior of x_min; None means equal to the OS travel
    mis_overtravel: Optional[float] = None
    gear_phase: float = 0.0
    dihedral: float = 0.0

    def __post_init__(self):
        x_min, x_max = self.mis_travel
        object.__setattr__(self, "mis_travel", (float(x_min), float(x_max)))
        if self.R < 0 or self.H <= 0 or self.R >= self.H:
            raise ValueError(f"need 0 <= R < H, got R={self.R}, H={self.H}")
        if not x_min < x_max:
            raise ValueError(f"mis_travel must be increasing, got {self.mis_travel}")
        if self.gear_rate <= 0:
            raise ValueError("gear_rate must be positive")
        if self.mis_overtravel is not None and self.mis_overtravel < 0:
            raise ValueError("mis_overtravel must be >= 0")

    @property
    def overtravel(self) -> float:
        x_min, x_max = self.mis_travel
        return x_max - x_min if self.mis_overtravel is None else self.mis_overtravel

    @property
    def period(self) -> float:
        return 1.0 / self.gear_rate

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "H": self.H,
            "gear_rate": self.gear_rate,
            "mis_travel": list(self.mis_travel),
            "mis_overtravel": self.mis_overtravel,
            "gear_phase": self.gear_phase,
            "dihedral": self.dihedral,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CrmConfig":
        return cls(
            R=float(doc["R"]),
            H=float(doc["H"]),
            gear_rate=float(doc["gear_rate"]),
            mis_travel=tuple(doc.get("mis_travel", (0.0, 20.0))),
            mis_overtravel=doc.get("mis_overtravel"),
            gear_phase=float(doc.get("gear_phase", 0.0)),
            dihedral=float(doc.get("dihedral", 0.0)),
        )


@dataclass(frozen=True)
class DecouplerState:
    x_MIS: float
    x_SIS: float
    x_OS: float


@dataclass(frozen=True)
class WingbeatSample:
    t: float
    side: str
    gear_angle: float
    flap_angle: float
    x_MIS: float
    x_SIS: float
    x_OS: float
    pose: SkeletonPose


def flap_amplitude(cfg: CrmConfig) -> float:
    """Peak-to-peak flap angle, 2 arctan(R/H)."""
    return 2.0 * math.atan(cfg.R / cfg.H)


def flap_angle(cfg: CrmConfig, gear_angle):
    return np.arctan(cfg.R * np.sin(gear_angle) / cfg.H)


def mis_position(cfg: CrmConfig, gear_angle):
    """MIS displacement (mm): ``x_max`` at mid-upstroke (g = 0), the anterior
    end ``x_min - overtravel`` at mid-downstroke (g = pi)."""
    x_min, x_max = cfg.mis_travel
    lo = x_min - cfg.overtravel
    return lo + (x_max - lo) * (1.0 + np.cos(gear_angle)) / 2.0


def decoupler_gate(x_MIS, x_SIS):
    """OS position: held by the SIS while the MIS is anterior of it, carried
    by the MIS otherwise. Larger values are more posterior (more tucked)."""
    return np.maximum(x_MIS, x_SIS)


def gear_angle_at(cfg: CrmConfig, t):
    return 2.0 * math.pi * cfg.gear_rate * np.asarray(t) + cfg.gear_phase


def is_downstroke(cfg: CrmConfig, gear_angle):
    """True where the flap angle is decreasing."""
    # tolerance keeps the level positions (cos g = 0) out despite round-off
    return np.cos(gear_angle) < -1e-12


def hall_trigger_times(cfg: CrmConfig, t_end: float, t_start: float = 0.0) -> np.ndarray:
    """Times in ``[t_start, t_end)`` at which the wing passes the level
    position moving down (gear angle = pi mod 2 pi)."""
    omega = 2.0 * math.pi * cfg.gear_rate
    k0 = math.ceil((omega * t_start + cfg.gear_phase - math.pi) / (2 * math.pi))
    times = []
    k = k0
    while True:
        t = ((2 * k + 1) * math.pi - cfg.gear_phase) / omega
        if t >= t_end:
            break
        if t >= t_start:
            times.append(t)
        k += 1
    return np.array(times)


def os_to_slider(cfg: CrmConfig, given: LinkageGiven, x_OS):
    """Map decoupler OS travel onto the linkage slider: x_min -> x_Ae, x_max -> x_At."""
    x_min, x_max = cfg.mis_travel
    xe, xt = given.extended.x_A, given.tucked.x_A
    return xe + (np.asarray(x_OS) - x_min) * (xt - xe) / (x_max - x_min)


SisSchedule = Union[Callable[[float], float], Mapping[str, Callable[[float], float]]]


def _schedule_for(sis_schedule: SisSchedule, side: str) -> Callable[[float], float]:
    if callable(sis_schedule):
        return sis_schedule
    return sis_schedule[side]


def wingbeat_trajectory(
    cfg: CrmConfig,
    lengths: LinkageDerived,
    given: LinkageGiven,
    wrist_mount: float,
    sis_schedule: SisSchedule,
    duration: float,
    samples_per_cycle: int = 64,
    sides: Sequence[str] = SIDES,
) -> dict:
    """Sample the wingbeat of each side.

    ``sis_schedule`` is either one callable ``t -> x_SIS`` shared by both
    wings or a mapping side -> callable. Samples are spaced
    ``period / samples_per_cycle`` apart starting at t = 0, the last one
    strictly before ``duration``. Returns ``{side: [WingbeatSample, ...]}``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if samples_per_cycle < 16:
        raise ValueError("samples_per_cycle must be >= 16")
    dt = cfg.period / samples_per_cycle
    n = int(math.ceil(duration / dt - 1e-9))
    times = np.arange(n) * dt
    gear = gear_angle_at(cfg, times)
    flap = flap_angle(cfg, gear) + cfg.dihedral
    x_mis = mis_position(cfg, gear)
    x_min, x_max = cfg.mis_travel

    out = {}
    for side in sides:
        schedule = _schedule_for(sis_schedule, side)
        samples = []
        for k, t in enumerate(times):
            x_sis = float(np.clip(schedule(float(t)), x_min, x_max))
            x_os = float(decoupler_gate(x_mis[k], x_sis))
            x_a = float(os_to_slider(cfg, given, x_os))
            state = forward_kinematics(lengths, given, x_a)
            pose = skeleton_pose(state, float(flap[k]), wrist_mount, lengths, given, side=side)
            samples.append(
                WingbeatSample(
                    t=float(t), side=side, gear_angle=float(gear[k]), flap_angle=float(flap[k]),
                    x_MIS=float(x_mis[k]), x_SIS=x_sis, x_OS=x_os, pose=pose,
                )
            )
        out[side] = samples
    return out


def trajectory_rows(trajectory: dict):
    """Rows matching :data:`TRAJECTORY_HEADER`, time-major then by side."""
    sides = [s for s in SIDES if s in trajectory]
    n = len(trajectory[sides[0]])
    for k in range(n):
        for side in sides:
            smp = trajectory[side][k]
            yield (
                smp.t, side, smp.gear_angle, smp.flap_angle, smp.x_MIS, smp.x_SIS, smp.x_OS,
                *smp.pose.wrist, *smp.pose.wingtip,
            )


def trajectory_csv(trajectory: dict) -> str:
    return csv_text(TRAJECTORY_HEADER, trajectory_rows(trajectory))
