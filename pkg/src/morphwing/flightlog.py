"""
Attitude logs of roll maneuvers: wingbeat-normalized time, trial alignment,
ensemble statistics and the wingbeats-to-90-degrees agility metric.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import TooFewMarkers, TooFewTrials

NO_CROSSING = math.inf

LOG_COLUMNS = ("t", "roll_deg", "pitch_deg", "yaw_deg", "p_dps", "q_dps", "r_dps")
ENSEMBLE_HEADER = ("tau", "mean_roll", "se_roll", "mean_pitch", "se_pitch", "mean_yaw", "se_yaw")


@dataclass(frozen=True)
class AttitudeLog:
    t: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    yaw: np.ndarray
    wingbeat_markers: np.ndarray
    rates: Optional[np.ndarray] = None  # (n, 3) body rates, deg/s
    # index into wingbeat_markers of the wingbeat carrying the asymmetric downstroke
    maneuver_marker: int = 0

    def __post_init__(self):
        for name in ("t", "roll", "pitch", "yaw", "wingbeat_markers"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if len(self.wingbeat_markers) < 2:
            raise TooFewMarkers("need at least 2 wingbeat markers")
        if not np.all(np.diff(self.wingbeat_markers) > 0):
            raise ValueError("wingbeat markers must be strictly increasing")
        if not 0 <= self.maneuver_marker < len(self.wingbeat_markers):
            raise ValueError("maneuver_marker out of range")


def markers_from_frequency(freq: float, t0: float, t_end: float) -> np.ndarray:
    """Marker times t0 + k / freq spanning ``[t0, t_end]``."""
    n = int(math.floor((t_end - t0) * freq + 1e-9)) + 1
    return t0 + np.arange(n) / freq


def read_log_csv(path, freq: Optional[float] = None, t0: Optional[float] = None,
                 maneuver_marker: int = 0) -> AttitudeLog:
    """Read ``t,roll_deg,pitch_deg,yaw_deg,p_dps,q_dps,r_dps[,marker]``.

    Rows with a nonzero ``marker`` are wingbeat markers; without that
    column the markers come from ``freq`` and ``t0``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {name: np.array([float(r[name]) for r in rows]) for name in LOG_COLUMNS}
    if rows and "marker" in rows[0] and rows[0]["marker"] is not None:
        flags = np.array([float(r["marker"] or 0) != 0 for r in rows])
        markers = cols["t"][flags]
    elif freq is not None:
        start = cols["t"][0] if t0 is None else t0
        markers = markers_from_frequency(freq, start, cols["t"][-1])
    else:
        raise TooFewMarkers("log has no marker column; supply freq and t0")
    return AttitudeLog(
        t=cols["t"],
        roll=cols["roll_deg"],
        pitch=cols["pitch_deg"],
        yaw=cols["yaw_deg"],
        rates=np.column_stack([cols["p_dps"], cols["q_dps"], cols["r_dps"]]),
        wingbeat_markers=markers,
        maneuver_marker=maneuver_marker,
    )


def to_wingbeats(t, markers) -> np.ndarray:
    """Piecewise-linear map of time onto wingbeat units: marker k -> k.
    Outside the markers the first or last interval is extended."""
    t = np.asarray(t, dtype=float)
    markers = np.asarray(markers, dtype=float)
    if len(markers) < 2:
        raise TooFewMarkers("need at least 2 wingbeat markers")
    idx = np.arange(len(markers), dtype=float)
    tau = np.interp(t, markers, idx)
    before = t < markers[0]
    after = t > markers[-1]
    tau[before] = (t[before] - markers[0]) / (markers[1] - markers[0])
    tau[after] = idx[-1] + (t[after] - markers[-1]) / (markers[-1] - markers[-2])
    return tau


def normalize_time(log: AttitudeLog) -> np.ndarray:
    return to_wingbeats(log.t, log.wingbeat_markers)


def align(log: AttitudeLog) -> AttitudeLog:
    """Shift time so the maneuver wingbeat starts at t = 0 and zero the yaw there."""
    t_start = log.wingbeat_markers[log.maneuver_marker]
    t = log.t - t_start
    yaw0 = float(np.interp(0.0, t, log.yaw))
    return replace(
        log,
        t=t,
        yaw=log.yaw - yaw0,
        wingbeat_markers=log.wingbeat_markers - t_start,
    )


@dataclass(frozen=True)
class ManeuverEnsemble:
    trials: tuple
    tau: np.ndarray
    mean_roll: np.ndarray
    se_roll: np.ndarray
    mean_pitch: np.ndarray
    se_pitch: np.ndarray
    mean_yaw: np.ndarray
    se_yaw: np.ndarray

    def rows(self):
        cols = [getattr(self, name) for name in ENSEMBLE_HEADER]
        return zip(*cols)


def ensemble_stats(trials: Sequence[AttitudeLog], bins: int = 20) -> ManeuverEnsemble:
    """Mean and standard error over trials on a common wingbeat grid.

    Trials are aligned on their maneuver wingbeat (yaw zeroed there), put on
    normalized time, and sampled by linear interpolation at the left edge of
    each of ``bins`` bins per wingbeat, over the range every trial covers.
    The maneuver start tau = 0 is therefore always a grid point.
    """
    if len(trials) < 2:
        raise TooFewTrials(f"need at least 2 trials, got {len(trials)}")
    aligned = [align(tr) for tr in trials]
    taus = []
    for tr in aligned:
        tau = normalize_time(tr)
        taus.append(tau - tr.maneuver_marker)
    lo = max(tau[0] for tau in taus)
    hi = min(tau[-1] for tau in taus)
    first = math.ceil(lo * bins - 1e-9)
    last = math.floor(hi * bins + 1e-9)
    if last <= first:
        raise ValueError("trials share no common normalized-time span")
    grid = np.arange(first, last + 1) / bins

    stats = {}
    for channel in ("roll", "pitch", "yaw"):
        values = np.array([np.interp(grid, tau, getattr(tr, channel)) for tau, tr in zip(taus, aligned)])
        stats[f"mean_{channel}"] = values.mean(axis=0)
        stats[f"se_{channel}"] = values.std(axis=0, ddof=1) / math.sqrt(len(trials))
    return ManeuverEnsemble(trials=tuple(aligned), tau=grid, **stats)


def _first_crossing(tau, roll, tau_start: float, target: float) -> float:
    roll0 = float(np.interp(tau_start, tau, roll))
    mask = tau >= tau_start
    tau_seg = np.concatenate(([tau_start], tau[mask]))
    dev = np.concatenate(([0.0], roll[mask] - roll0))
    hits = np.flatnonzero(np.abs(dev) >= target)
    if len(hits) == 0:
        return NO_CROSSING
    k = int(hits[0])
    if k == 0:
        return 0.0
    d0, d1 = dev[k - 1], dev[k]
    level = math.copysign(target, d1)
    frac = (level - d0) / (d1 - d0)
    return float(tau_seg[k - 1] + frac * (tau_seg[k] - tau_seg[k - 1]) - tau_start)


def agility_metric(obj: Union[AttitudeLog, ManeuverEnsemble], target: float = 90.0) -> float:
    """Wingbeats from maneuver start until the roll first deviates by
    ``target`` degrees, linearly interpolated between samples.

    Returns :data:`NO_CROSSING` (infinity) if the target is never reached.
    For an ensemble the mean roll is used and time starts at tau = 0.
    """
    if isinstance(obj, ManeuverEnsemble):
        return _first_crossing(obj.tau, obj.mean_roll, 0.0, target)
    tau = normalize_time(obj)
    return _first_crossing(tau, obj.roll, float(obj.maneuver_marker), target)
