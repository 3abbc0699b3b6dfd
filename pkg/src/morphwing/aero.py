"""
Wind-tunnel data reduction.

Raw load-cell records are rotated into wind axes, split into wingbeat cycles
at the Hall triggers and cycle-averaged. The averages over a grid of angle
of attack and flapping frequency are fitted with the quadratic surface

    z(alpha, F) = z0 + a alpha + b F + c alpha^2 + d F^2 + f alpha F

(alpha in degrees, F in Hz, z in gram-force), from which the level-flight
trim point (zero net thrust, lift equal to weight) is found by tracing the
zero-thrust contour and intersecting the lift along it with the weight.
Roll-moment traces are low-pass filtered before cycle averaging and
regressed linearly against flapping frequency.

Load-cell axis convention: the wind-axes transform is applied exactly as
``L = sin(alpha) Fx + cos(alpha) Fz + G sin(alpha)``,
``T = cos(alpha) Fx - sin(alpha) Fz + G cos(alpha)``, so at zero incidence
the gravity offset G adds straight onto the net thrust.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .errors import InvalidCutoff, NoThrustZero, NoTrim, RankDeficient, TooFewTriggers

logger = logging.getLogger(__name__)

G0 = 9.80665  # m/s^2, newton -> gram-force

FORCE_COLUMNS = ("t", "fx", "fy", "fz", "mx", "my", "mz", "hall")
SURFACE_TERMS = ("z0", "a", "b", "c", "d", "f")
ROLL_RMSE_BOUND = 0.007  # N m


def newton_to_gram(value):
    return np.asarray(value) / G0 * 1000.0


@dataclass(frozen=True)
class ForceRecord:
    """Six-axis load-cell samples (N, N m) with the Hall trigger channel."""

    t: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    mz: np.ndarray
    hall: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in FORCE_COLUMNS:
            arr = np.asarray(getattr(self, name), dtype=bool if name == "hall" else float)
            if arr.shape != (n,):
                raise ValueError(f"column {name} has shape {arr.shape}, expected ({n},)")
            object.__setattr__(self, name, arr)
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def sample_rate(self) -> float:
        return float((len(self.t) - 1) / (self.t[-1] - self.t[0]))

    @classmethod
    def from_arrays(cls, t, hall, **channels) -> "ForceRecord":
        n = len(t)
        cols = {name: channels.get(name, np.zeros(n)) for name in ("fx", "fy", "fz", "mx", "my", "mz")}
        return cls(t=np.asarray(t, float), hall=np.asarray(hall, bool), **cols)


def read_force_csv(path) -> ForceRecord:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no samples")
    cols = {}
    for name in FORCE_COLUMNS:
        values = [row[name] for row in rows]
        if name == "hall":
            cols[name] = np.array([float(v) != 0 for v in values])
        else:
            cols[name] = np.array(values, dtype=float)
    return ForceRecord(**cols)


@dataclass(frozen=True)
class FlightCondition:
    alpha: float
    freq: float
    airspeed: float = 8.0
    weight: float = 600.0
    gravity_offset: float = 0.0
    wrist_mount: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 12.0:
            raise ValueError(f"alpha must be within [0, 12] deg, got {self.alpha}")
        if self.freq <= 0:
            raise ValueError("freq must be positive")


@dataclass(frozen=True)
class CycleStats:
    mean: float
    rmse_across_cycles: float
    n_cycles: int


@dataclass(frozen=True)
class AeroSurface:
    z0: float
    a: float
    b: float
    c: float
    d: float
    f: float
    r_value: float = math.nan
    rmse: float = math.nan
    n_points: int = 0

    def __call__(self, alpha, freq):
        alpha = np.asarray(alpha, dtype=float)
        freq = np.asarray(freq, dtype=float)
        return (
            self.z0 + self.a * alpha + self.b * freq
            + self.c * alpha**2 + self.d * freq**2 + self.f * alpha * freq
        )

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in SURFACE_TERMS])

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in SURFACE_TERMS}
        out.update(r_value=self.r_value, rmse_g=self.rmse, n_points=self.n_points)
        return out

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AeroSurface":
        rmse = doc.get("rmse_g", doc.get("rmse", math.nan))
        return cls(
            *(float(doc[k]) for k in SURFACE_TERMS),
            r_value=float(doc.get("r_value", math.nan)),
            rmse=float(rmse),
            n_points=int(doc.get("n_points", 0)),
        )


@dataclass(frozen=True)
class TrimPoint:
    alpha_star: float
    freq_star: float
    lift_at_trim: float
    thrust_at_trim: float
    # (alpha, F) samples of the zero-thrust contour
    contour: np.ndarray = field(default_factory=lambda: np.empty((0, 2)), compare=False)


# ------------------------------------------------------------ force reduction


def to_wind_axes(F_x, F_z, alpha, G):
    """Load-cell forces to (lift, net thrust); ``alpha`` in radians."""
    sin, cos = np.sin(alpha), np.cos(alpha)
    lift = sin * F_x + cos * F_z + G * sin
    thrust = cos * F_x - sin * F_z + G * cos
    return lift, thrust


def trigger_indices(hall) -> np.ndarray:
    """Sample indices of rising edges of the Hall channel."""
    hall = np.asarray(hall, dtype=bool)
    prev = np.concatenate(([False], hall[:-1]))
    return np.flatnonzero(hall & ~prev)


def reject_irregular_cycles(cycles: Sequence[range], low=0.5, high=2.0):
    """Split cycles into those within [low, high] x the median length and the rest."""
    if not cycles:
        return [], []
    median = float(np.median([len(c) for c in cycles]))
    kept, rejected = [], []
    for cyc in cycles:
        (kept if low * median <= len(cyc) <= high * median else rejected).append(cyc)
    return kept, rejected


def segment_cycles(hall, reject: bool = True) -> List[range]:
    """One sample range per interval between consecutive Hall triggers.

    Samples before the first and after the last trigger are dropped. Cycles
    shorter than half or longer than twice the median are discarded (and
    logged) unless ``reject`` is false.
    """
    idx = trigger_indices(hall)
    if len(idx) < 2:
        raise TooFewTriggers(f"need at least 2 Hall triggers, found {len(idx)}")
    cycles = [range(int(a), int(b)) for a, b in zip(idx[:-1], idx[1:])]
    if not reject:
        return cycles
    kept, rejected = reject_irregular_cycles(cycles)
    for cyc in rejected:
        logger.warning("rejected cycle [%d, %d): %d samples", cyc.start, cyc.stop, len(cyc))
    return kept


def cycle_average(per_cycle: Iterable) -> CycleStats:
    """Grand mean over all in-cycle samples and the RMS spread of the
    per-cycle means around it."""
    cycles = [np.asarray(c, dtype=float) for c in per_cycle]
    if not cycles:
        raise ValueError("need at least one cycle")
    grand = float(np.concatenate(cycles).mean())
    means = np.array([c.mean() for c in cycles])
    rmse = float(np.sqrt(np.mean((means - grand) ** 2)))
    return CycleStats(mean=grand, rmse_across_cycles=rmse, n_cycles=len(cycles))


def cycle_frequency(record: ForceRecord, cycles: Sequence[range]) -> float:
    """Mean flapping frequency (Hz) over the given cycles."""
    durations = [record.t[c.stop] - record.t[c.start] for c in cycles]
    return float(1.0 / np.mean(durations))


def reduce_condition(
    record: ForceRecord,
    alpha_deg: float,
    g_offset_n: float = 0.0,
    tare: Optional[ForceRecord] = None,
) -> Tuple[float, CycleStats, CycleStats]:
    """Cycle-averaged lift and net thrust (g) of one tunnel state.

    A tare record, if given, has its mean Fx and Fz subtracted first.
    Returns ``(measured frequency, lift stats, thrust stats)``.
    """
    fx, fz = record.fx, record.fz
    if tare is not None:
        fx = fx - tare.fx.mean()
        fz = fz - tare.fz.mean()
    lift, thrust = to_wind_axes(fx, fz, math.radians(alpha_deg), g_offset_n)
    lift_g, thrust_g = newton_to_gram(lift), newton_to_gram(thrust)
    cycles = segment_cycles(record.hall)
    freq = cycle_frequency(record, cycles)
    return (
        freq,
        cycle_average(lift_g[c.start:c.stop] for c in cycles),
        cycle_average(thrust_g[c.start:c.stop] for c in cycles),
    )


# -------------------------------------------------------------- surface fits


def design_matrix(alpha, freq) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    freq = np.asarray(freq, dtype=float)
    return np.column_stack(
        [np.ones_like(alpha), alpha, freq, alpha**2, freq**2, alpha * freq]
    )


def fit_surface(points) -> AeroSurface:
    """Least-squares quadratic surface through ``(alpha, freq, value)`` rows.

    ``r_value`` is the correlation between fitted and measured values and
    ``rmse`` the root-mean-square residual, in the units of ``value``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be an (n, 3) array of alpha, freq, value")
    X = design_matrix(pts[:, 0], pts[:, 1])
    z = pts[:, 2]
    if len(z) < 6 or np.linalg.matrix_rank(X) < 6:
        raise RankDeficient("design matrix is rank deficient; need 6 points in general position")
    coef = np.linalg.lstsq(X, z, rcond=None)[0]
    fitted = X @ coef
    resid = z - fitted
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    ss_res = float(resid @ resid)
    r_value = math.sqrt(max(0.0, 1.0 - ss_res / ss_tot)) if ss_tot > 0 else math.nan
    return AeroSurface(
        *(float(v) for v in coef),
        r_value=r_value,
        rmse=math.sqrt(ss_res / len(z)),
        n_points=len(z),
    )


# ----------------------------------------------------------------- trimming


def bisect(fun, lo: float, hi: float, xtol: float = 1e-13, max_iter: int = 200) -> float:
    """Root of ``fun`` in a sign-change bracket ``[lo, hi]``."""
    f_lo, f_hi = fun(lo), fun(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError("root is not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        if f_mid == 0 or hi - lo < xtol:
            return mid
        if f_lo * f_mid < 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def thrust_zero_frequency(
    thrust: AeroSurface, alpha: float, freq_range=(2.0, 4.0), n_scan: int = 64
) -> Optional[float]:
    """Lowest flapping frequency in ``freq_range`` with zero net thrust at
    ``alpha``, or None if the thrust does not change sign there."""
    grid = np.linspace(freq_range[0], freq_range[1], n_scan + 1)
    values = thrust(alpha, grid)
    for k in range(n_scan):
        if values[k] == 0:
            return float(grid[k])
        if values[k] * values[k + 1] < 0:
            return bisect(lambda F: float(thrust(alpha, F)), float(grid[k]), float(grid[k + 1]))
    if values[-1] == 0:
        return float(grid[-1])
    return None


def thrust_zero_contour(
    thrust: AeroSurface, alpha_range=(0.0, 12.0), freq_range=(2.0, 4.0), n_alpha: int = 121
) -> np.ndarray:
    """``(alpha, F)`` points of the zero-thrust line on an alpha grid."""
    rows = []
    for alpha in np.linspace(alpha_range[0], alpha_range[1], n_alpha):
        freq = thrust_zero_frequency(thrust, float(alpha), freq_range)
        if freq is not None:
            rows.append((float(alpha), freq))
    return np.array(rows).reshape(-1, 2)


def solve_trim(
    lift: AeroSurface,
    thrust: AeroSurface,
    weight: float = 600.0,
    alpha_range=(0.0, 12.0),
    freq_range=(2.0, 4.0),
    n_alpha: int = 121,
) -> TrimPoint:
    """Level-flight equilibrium: zero net thrust and lift equal to ``weight`` (g).

    For each alpha on a grid the zero-thrust frequency is found by
    bisection; the lowest alpha where the lift along that line crosses the
    weight is then refined by bisection in alpha.
    """
    contour = thrust_zero_contour(thrust, alpha_range, freq_range, n_alpha)
    if len(contour) == 0:
        raise NoThrustZero("net thrust has no zero inside the search domain")

    def excess(alpha: float) -> float:
        freq = thrust_zero_frequency(thrust, alpha, freq_range)
        return float(lift(alpha, freq)) - weight

    surplus = lift(contour[:, 0], contour[:, 1]) - weight
    alpha_star = None
    for k in range(len(contour) - 1):
        if surplus[k] == 0:
            alpha_star = float(contour[k, 0])
            break
        if surplus[k] * surplus[k + 1] < 0:
            # contour must be unbroken between the two grid points
            lo, hi = float(contour[k, 0]), float(contour[k + 1, 0])
            if hi - lo > 1.5 * (alpha_range[1] - alpha_range[0]) / (n_alpha - 1):
                continue
            alpha_star = bisect(excess, lo, hi)
            break
    if alpha_star is None and len(surplus) and surplus[-1] == 0:
        alpha_star = float(contour[-1, 0])
    if alpha_star is None:
        raise NoTrim(f"lift along the zero-thrust line never crosses {weight:g} g")

    freq_star = thrust_zero_frequency(thrust, alpha_star, freq_range)
    return TrimPoint(
        alpha_star=alpha_star,
        freq_star=freq_star,
        lift_at_trim=float(lift(alpha_star, freq_star)),
        thrust_at_trim=float(thrust(alpha_star, freq_star)),
        contour=contour,
    )


# ---------------------------------------------------------------- filtering


def butterworth_design(sample_rate: float, cutoff: float, order: int = 5) -> np.ndarray:
    """Digital Butterworth low-pass (bilinear transform, prewarped) as SOS."""
    if not 0 < cutoff < sample_rate / 2:
        raise InvalidCutoff(f"cutoff {cutoff} Hz must lie in (0, {sample_rate / 2}) Hz")
    if order < 1:
        raise ValueError("order must be >= 1")
    return signal.butter(order, cutoff, btype="low", output="sos", fs=sample_rate)


def butterworth_lowpass(
    x, sample_rate: float, cutoff: float = 12.0, order: int = 5, initial: str = "steady"
) -> np.ndarray:
    """Causal single-pass Butterworth low-pass.

    ``initial="steady"`` starts the filter in the steady state of the first
    sample, ``"zero"`` from rest. The output lags the input by the filter's
    group delay.
    """
    sos = butterworth_design(sample_rate, cutoff, order)
    x = np.asarray(x, dtype=float)
    if initial == "zero":
        return signal.sosfilt(sos, x)
    if initial != "steady":
        raise ValueError("initial must be 'steady' or 'zero'")
    zi = signal.sosfilt_zi(sos) * x[0]
    return signal.sosfilt(sos, x, zi=zi)[0]


def settling_time(sample_rate: float, cutoff: float, order: int = 5, tol: float = 1e-12) -> float:
    """Time after which the impulse response stays below ``tol`` times its peak."""
    sos = butterworth_design(sample_rate, cutoff, order)
    n = int(20 * sample_rate)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    h = np.abs(signal.sosfilt(sos, impulse))
    above = np.flatnonzero(h >= tol * h.max())
    return float((above[-1] + 1) / sample_rate)


# ------------------------------------------------------------- roll moment


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class RollMomentReport:
    conditions: Dict[Tuple[float, float], CycleStats]
    regressions: Dict[float, LineFit]
    bound: float

    @property
    def flagged(self) -> List[Tuple[float, float]]:
        """Conditions whose across-cycle RMSE exceeds the bound."""
        return sorted(k for k, s in self.conditions.items() if s.rmse_across_cycles > self.bound)

    @property
    def within_bound(self) -> bool:
        return not self.flagged


def fit_line(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    slope, intercept = np.linalg.lstsq(A, y, rcond=None)[0]
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(resid @ resid)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else math.nan
    return LineFit(float(slope), float(intercept), r2)


def roll_moment_analysis(
    records: Mapping[Tuple[float, float], ForceRecord],
    column: str = "mx",
    cutoff: float = 12.0,
    order: int = 5,
    settle: Optional[float] = None,
    bound: float = ROLL_RMSE_BOUND,
) -> RollMomentReport:
    """Cycle-averaged roll moment per ``(alpha, freq)`` and a line in freq per alpha.

    Each trace is low-pass filtered; cycles starting within ``settle``
    seconds of the record start (default: the filter settling time) are
    skipped so the filter start-up transient does not bias the averages.
    """
    conditions: Dict[Tuple[float, float], CycleStats] = {}
    for key in sorted(records):
        rec = records[key]
        fs = rec.sample_rate
        filtered = butterworth_lowpass(getattr(rec, column), fs, cutoff, order)
        cycles = segment_cycles(rec.hall)
        skip = settling_time(fs, cutoff, order) if settle is None else settle
        settled = [c for c in cycles if rec.t[c.start] - rec.t[0] >= skip]
        if not settled:
            logger.warning("record %s shorter than filter settling time; using all cycles", key)
            settled = cycles
        conditions[key] = cycle_average(filtered[c.start:c.stop] for c in settled)

    by_alpha: Dict[float, List[Tuple[float, float]]] = {}
    for (alpha, freq), stats in conditions.items():
        by_alpha.setdefault(alpha, []).append((freq, stats.mean))
    regressions = {}
    for alpha, pairs in sorted(by_alpha.items()):
        if len({f for f, _ in pairs}) < 2:
            raise ValueError(f"alpha={alpha}: need at least 2 frequencies for a regression")
        freqs, means = zip(*sorted(pairs))
        regressions[alpha] = fit_line(freqs, means)
    return RollMomentReport(conditions=conditions, regressions=regressions, bound=bound)
