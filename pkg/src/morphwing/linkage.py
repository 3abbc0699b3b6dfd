"""
Wing-skeleton multi-link mechanism: length synthesis and forward kinematics.

The skeleton is a one-DOF mechanism driven by the output slider (OS). One
slider-rocker loop sets the shoulder angle from the slider displacement
``x_A``; two four-bar loops carry the motion on to the elbow and the wrist.
After eliminating the internal angles, every loop reduces to one scalar
closure equation per pose::

    slider loop  (x_A - c cos ts)^2 + c^2 sin^2 ts                 = (a + b)^2
    elbow loop   |(d cos ts - b cos t2 + i cos p, d sin ts + b sin t2 - i sin p)|^2 = e^2
    wrist loop   |(f/e) P + (l_r + i) u(p) - h w(q)|^2              = j^2

with ``c = l_h - d``, ``p = te - ts`` and ``q = tw - te + ts``.

Body frame used by :func:`skeleton_pose`: x runs posterior along the slider
axis, y is lateral (span of the right wing), z points up. Angles are radians
inside the package; the JSON documents use degrees.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BranchAmbiguity, NoConvergence, NonPhysical, OutOfRange

LENGTH_NAMES = ("a", "c", "d", "e", "g", "h", "i", "j")

# unknowns carried by the Newton solver, in order
_UNKNOWNS = ("a", "d", "e", "h", "i", "j")

# a branch is accepted when it reproduces the extended pose within this (rad)
_BRANCH_TOL = 1e-2


@dataclass(frozen=True)
class PoseConstraint:
    """Joint angles (deg) and slider displacement (mm) at one design pose."""

    theta_e: float
    theta_w: float
    x_A: float
    theta_s: Optional[float] = None

    def __post_init__(self):
        angles = [self.theta_e, self.theta_w]
        if self.theta_s is not None:
            angles.append(self.theta_s)
        if not all(0.0 < ang < 180.0 for ang in angles):
            raise ValueError(f"pose angles must lie in (0, 180) deg: {self}")
        if not self.x_A > 0:
            raise ValueError(f"x_A must be positive, got {self.x_A}")

    def to_dict(self) -> dict:
        out = {}
        if self.theta_s is not None:
            out["theta_s"] = self.theta_s
        out.update(theta_e=self.theta_e, theta_w=self.theta_w, x_A=self.x_A)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "PoseConstraint":
        return cls(
            theta_e=float(doc["theta_e"]),
            theta_w=float(doc["theta_w"]),
            x_A=float(doc["x_A"]),
            theta_s=None if doc.get("theta_s") is None else float(doc["theta_s"]),
        )


@dataclass(frozen=True)
class LinkageGiven:
    """Design inputs: spar lengths, the two lever lengths and both poses."""

    l_h: float
    l_r: float
    l_m: float
    b: float
    f: float
    extended: PoseConstraint
    tucked: PoseConstraint

    def __post_init__(self):
        for name in ("l_h", "l_r", "l_m", "b", "f"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.extended.x_A == self.tucked.x_A:
            raise ValueError("extended and tucked poses must differ in x_A")
        if self.extended.theta_s is None:
            raise ValueError("the extended pose needs a shoulder angle")

    def to_dict(self) -> dict:
        return {
            "l_h": self.l_h,
            "l_r": self.l_r,
            "l_m": self.l_m,
            "b": self.b,
            "f": self.f,
            "extended": self.extended.to_dict(),
            "tucked": self.tucked.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinkageGiven":
        return cls(
            l_h=float(doc["l_h"]),
            l_r=float(doc["l_r"]),
            l_m=float(doc["l_m"]),
            b=float(doc["b"]),
            f=float(doc["f"]),
            extended=PoseConstraint.from_dict(doc["extended"]),
            tucked=PoseConstraint.from_dict(doc["tucked"]),
        )


@dataclass(frozen=True)
class LinkageDerived:
    """Synthesized link lengths (mm)."""

    a: float
    c: float
    d: float
    e: float
    g: float
    h: float
    i: float
    j: float
    # tucked shoulder angle when it was solved for rather than given (rad)
    theta_st: Optional[float] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in LENGTH_NAMES}

    @classmethod
    def from_dict(cls, doc: dict) -> "LinkageDerived":
        return cls(**{name: float(doc[name]) for name in LENGTH_NAMES})


@dataclass(frozen=True)
class JointState:
    theta_s: float
    theta_e: float
    theta_w: float
    x_A: float


@dataclass(frozen=True)
class LoopAngles:
    theta_1: float
    theta_2: float
    theta_3: float
    theta_4: float
    theta_5: float
    theta_6: float


@dataclass(frozen=True)
class SkeletonPose:
    shoulder: np.ndarray
    elbow: np.ndarray
    wrist: np.ndarray
    wingtip: np.ndarray
    hand_wing_pitch: float


def closure_residuals(given: LinkageGiven, lengths, theta_s, theta_e, theta_w, x_A):
    """Slider, elbow and wrist closure residuals (mm^2) at one configuration.

    ``lengths`` may be a :class:`LinkageDerived` or any object with the
    attributes a, d, e, h, i, j. Angles in radians.
    """
    a, d, e, h, i, j = (getattr(lengths, n) for n in _UNKNOWNS)
    return _residuals(given, a, d, e, h, i, j, theta_s, theta_e, theta_w, x_A)


def _residuals(given, a, d, e, h, i, j, ts, te, tw, x):
    b, f = given.b, given.f
    c = given.l_h - d
    s = a + b
    p = te - ts
    q = tw - te + ts
    dx = x - c * math.cos(ts)
    r_slider = dx**2 + (c * math.sin(ts)) ** 2 - s**2
    P = d * math.cos(ts) + i * math.cos(p) - b * dx / s
    Q = d * math.sin(ts) - i * math.sin(p) + b * c * math.sin(ts) / s
    r_elbow = P**2 + Q**2 - e**2
    U = f / e * P - h * math.cos(q) + (given.l_r + i) * math.cos(p)
    V = f / e * Q - h * math.sin(q) - (given.l_r + i) * math.sin(p)
    r_wrist = U**2 + V**2 - j**2
    return r_slider, r_elbow, r_wrist


def _system(given: LinkageGiven, z: np.ndarray) -> np.ndarray:
    a, d, e, h, i, j = z[:6]
    ext, tuck = given.extended, given.tucked
    ts_t = z[6] if len(z) > 6 else math.radians(tuck.theta_s)
    r_ext = _residuals(
        given, a, d, e, h, i, j,
        math.radians(ext.theta_s), math.radians(ext.theta_e), math.radians(ext.theta_w), ext.x_A,
    )
    r_tuck = _residuals(
        given, a, d, e, h, i, j,
        ts_t, math.radians(tuck.theta_e), math.radians(tuck.theta_w), tuck.x_A,
    )
    return np.array(r_ext + r_tuck)


def _jacobian(fun, z: np.ndarray, r0: np.ndarray) -> np.ndarray:
    jac = np.empty((len(r0), len(z)))
    for k in range(len(z)):
        step = 1e-7 * max(1.0, abs(z[k]))
        zp, zm = z.copy(), z.copy()
        zp[k] += step
        zm[k] -= step
        jac[:, k] = (fun(zp) - fun(zm)) / (2 * step)
    return jac


def _damped_newton(fun, z0: np.ndarray, tol: float, max_iter: int = 50):
    """Newton iteration with backtracking; least-squares steps cover the
    underdetermined case. Returns the root or ``None`` if the residual stalls."""
    z = np.asarray(z0, dtype=float).copy()
    with np.errstate(all="ignore"):
        r = fun(z)
        for _ in range(max_iter):
            if not np.all(np.isfinite(r)):
                return None
            if np.max(np.abs(r)) < tol:
                return z
            jac = _jacobian(fun, z, r)
            if not np.all(np.isfinite(jac)):
                return None
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
            norm0 = float(r @ r)
            lam = 1.0
            while lam > 1e-10:
                z_new = z + lam * step
                r_new = fun(z_new)
                if np.all(np.isfinite(r_new)) and float(r_new @ r_new) < norm0:
                    break
                lam *= 0.5
            else:
                return None
            z, r = z_new, r_new
    return z if np.max(np.abs(r)) < tol else None


def synthesize_linkage(
    given: LinkageGiven,
    *,
    seed: Optional[int] = 0,
    n_starts: int = 16,
    tol: float = 1e-9,
) -> LinkageDerived:
    """Solve the six closure equations (three loops at two poses) for the
    link lengths a, d, e, h, i, j; c and g follow from the spar lengths.

    If the tucked pose carries no shoulder angle it is added as a seventh
    unknown and the system is solved in the least-squares-step sense, so
    the returned member of the solution family depends on the start.

    Multi-start: each start draws every length uniformly from
    ``(0, l_h + l_r)``. The first start that converges below ``tol`` with
    all lengths positive wins.
    """
    solve_shoulder = given.tucked.theta_s is None
    scale = given.l_h + given.l_r
    rng = np.random.default_rng(seed)

    def fun(z):
        return _system(given, z)

    converged_nonphysical = False
    for _ in range(n_starts):
        z0 = rng.uniform(0.0, scale, size=6)
        if solve_shoulder:
            z0 = np.append(z0, rng.uniform(0.0, math.pi))
        z = _damped_newton(fun, z0, tol)
        if z is None:
            continue
        a, d, e, h, i, j = z[:6]
        lengths = dict(a=a, c=given.l_h - d, d=d, e=e, g=given.l_r, h=h, i=i, j=j)
        if min(lengths.values()) <= 0:
            converged_nonphysical = True
            continue
        theta_st = float(z[6]) if solve_shoulder else None
        if theta_st is not None and not 0.0 < theta_st < math.pi:
            converged_nonphysical = True
            continue
        return LinkageDerived(**{k: float(v) for k, v in lengths.items()}, theta_st=theta_st)

    if converged_nonphysical:
        raise NonPhysical("every converged solution has a non-positive length")
    raise NoConvergence(f"no start out of {n_starts} reached residual < {tol:g}")


# ---------------------------------------------------------------- kinematics


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _acos_args(lengths: LinkageDerived, given: LinkageGiven, x: float, signs=None):
    """Cosine arguments of the three loops at slider position ``x``.

    Returns the list of arguments computed so far; evaluation stops at the
    first loop whose argument leaves [-1, 1] since the later loops depend on
    its angle. ``signs`` picks the branch of each earlier loop.
    """
    signs = signs or (1, 1, 1)
    c, s = lengths.c, lengths.a + given.b
    args = []
    arg1 = (x * x + c * c - s * s) / (2 * x * c)
    args.append(arg1)
    if abs(arg1) > 1:
        return args, None
    ts = signs[0] * math.acos(arg1)
    t2 = math.atan2(c * math.sin(ts), x - c * math.cos(ts))
    ax = lengths.d * math.cos(ts) - given.b * math.cos(t2)
    ay = lengths.d * math.sin(ts) + given.b * math.sin(t2)
    rad_a = math.hypot(ax, ay)
    arg2 = (lengths.e**2 - lengths.i**2 - rad_a**2) / (2 * lengths.i * rad_a)
    args.append(arg2)
    if abs(arg2) > 1:
        return args, None
    p = -math.atan2(ay, ax) + signs[1] * math.acos(arg2)
    P = ax + lengths.i * math.cos(p)
    Q = ay - lengths.i * math.sin(p)
    t3 = math.atan2(Q, P)
    U = given.f * math.cos(t3) + (given.l_r + lengths.i) * math.cos(p)
    V = given.f * math.sin(t3) - (given.l_r + lengths.i) * math.sin(p)
    rad_b = math.hypot(U, V)
    arg3 = (rad_b**2 + lengths.h**2 - lengths.j**2) / (2 * lengths.h * rad_b)
    args.append(arg3)
    if abs(arg3) > 1:
        return args, None
    q = math.atan2(V, U) + signs[2] * math.acos(arg3)
    t5 = math.atan2(-(V - lengths.h * math.sin(q)), U - lengths.h * math.cos(q))
    loops = LoopAngles(
        theta_1=ts, theta_2=t2, theta_3=t3, theta_4=_wrap(p), theta_5=t5, theta_6=_wrap(q)
    )
    return args, loops


@functools.lru_cache(maxsize=64)
def branch_signs(lengths: LinkageDerived, given: LinkageGiven) -> tuple:
    """Root choice (+1 / -1) of each loop that reproduces the extended pose.

    Loops are resolved in order; for each one the root closest to the
    extended design angle is kept.
    """
    ext = given.extended
    targets = (
        math.radians(ext.theta_s),
        math.radians(ext.theta_e - ext.theta_s),
        math.radians(ext.theta_w - ext.theta_e + ext.theta_s),
    )
    signs = [1, 1, 1]
    for k in range(3):
        errors = {}
        for sgn in (1, -1):
            trial = list(signs)
            trial[k] = sgn
            args, loops = _acos_args(lengths, given, ext.x_A, trial)
            if len(args) <= k or abs(args[k]) > 1:
                continue
            if k < 2:
                # later loops may be unreachable on this trial; read the angle directly
                angle = _partial_angle(lengths, given, ext.x_A, trial, k)
            else:
                if loops is None:
                    continue
                angle = loops.theta_6
            errors[sgn] = abs(_wrap(angle - targets[k]))
        good = [sgn for sgn, err in errors.items() if err < _BRANCH_TOL]
        if not good:
            raise BranchAmbiguity(
                f"no root of loop {k + 1} is continuous with the extended pose"
            )
        if len(good) == 2 and abs(errors[1] - errors[-1]) < 1e-12:
            raise BranchAmbiguity(f"loop {k + 1} sits on a fold at the extended pose")
        signs[k] = min(good, key=errors.get)
    return tuple(signs)


def _partial_angle(lengths, given, x, signs, k):
    c, s = lengths.c, lengths.a + given.b
    ts = signs[0] * math.acos((x * x + c * c - s * s) / (2 * x * c))
    if k == 0:
        return ts
    t2 = math.atan2(c * math.sin(ts), x - c * math.cos(ts))
    ax = lengths.d * math.cos(ts) - given.b * math.cos(t2)
    ay = lengths.d * math.sin(ts) + given.b * math.sin(t2)
    rad_a = math.hypot(ax, ay)
    arg2 = (lengths.e**2 - lengths.i**2 - rad_a**2) / (2 * lengths.i * rad_a)
    return -math.atan2(ay, ax) + signs[1] * math.acos(arg2)


def _feasibility(lengths, given, x, signs) -> float:
    if x <= 0:
        return -1.0
    args, loops = _acos_args(lengths, given, x, signs)
    if loops is None:
        return -1.0
    return min(1.0 - abs(arg) for arg in args)


@functools.lru_cache(maxsize=64)
def reachable_range(lengths: LinkageDerived, given: LinkageGiven, step: float = 0.05):
    """Slider interval (mm) reachable continuously from the extended pose.

    Walks outward from ``x_Ae`` until some loop stops closing, then bisects
    the boundary. Raises OutOfRange if the tucked pose is not inside.
    """
    signs = branch_signs(lengths, given)
    x0 = given.extended.x_A
    span = 2 * (given.l_h + given.l_r + given.l_m)
    bounds = []
    for direction in (-1.0, 1.0):
        inside = x0
        x = x0
        while True:
            x = x + direction * step
            if abs(x - x0) > span or _feasibility(lengths, given, x, signs) < 0:
                break
            inside = x
        outside = x
        for _ in range(60):
            mid = 0.5 * (inside + outside)
            if _feasibility(lengths, given, mid, signs) >= 0:
                inside = mid
            else:
                outside = mid
        bounds.append(inside)
    lo, hi = bounds
    xt = given.tucked.x_A
    if not lo <= xt <= hi:
        raise OutOfRange(f"tucked pose x_A={xt} is not reachable from the extended pose")
    return lo, hi


def solve_loops(lengths: LinkageDerived, given: LinkageGiven, x_A: float):
    """Joint state and internal loop angles at slider displacement ``x_A``."""
    lo, hi = reachable_range(lengths, given)
    if not lo <= x_A <= hi:
        raise OutOfRange(f"x_A={x_A:.6g} mm outside reachable [{lo:.6g}, {hi:.6g}]")
    signs = branch_signs(lengths, given)
    args, loops = _acos_args(lengths, given, x_A, signs)
    if loops is None:
        # boundary round-off: clamp onto the fold
        raise OutOfRange(f"x_A={x_A:.6g} mm at the edge of the reachable range")
    state = JointState(
        theta_s=loops.theta_1,
        theta_e=_wrap(loops.theta_1 + loops.theta_4),
        theta_w=_wrap(loops.theta_4 + loops.theta_6),
        x_A=float(x_A),
    )
    return state, loops


def forward_kinematics(lengths: LinkageDerived, given: LinkageGiven, x_A: float) -> JointState:
    """Shoulder, elbow and wrist angles (rad) for slider displacement ``x_A`` (mm),
    on the assembly branch of the extended design pose."""
    return solve_loops(lengths, given, x_A)[0]


# ------------------------------------------------------------------ 3D pose


def _rotate(vec: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``vec`` about unit ``axis``."""
    axis = axis / np.linalg.norm(axis)
    cos, sin = math.cos(angle), math.sin(angle)
    return vec * cos + np.cross(axis, vec) * sin + axis * np.dot(axis, vec) * (1 - cos)


_X_AXIS = np.array([1.0, 0.0, 0.0])
_Z_AXIS = np.array([0.0, 0.0, 1.0])


def skeleton_pose(
    state: JointState,
    flap_angle: float,
    wrist_mount: float,
    lengths: LinkageDerived,
    given: LinkageGiven,
    side: str = "right",
) -> SkeletonPose:
    """Place the skeleton in the body frame.

    The planar zig-zag (humerus posterior-lateral, radius anterior-lateral,
    hand wing folded back by the wrist angle) is built in the z = 0 wing
    plane. The hand wing turns about a wrist hinge whose axis is the plane
    normal tilted by ``wrist_mount`` around the radial spar, so folding away
    from the extended wrist angle takes the hand wing out of plane. The whole
    wing is then rotated about the body x axis by ``flap_angle`` (positive
    raises the wingtip). The left wing mirrors y.
    """
    ts, te, tw = state.theta_s, state.theta_e, state.theta_w
    u_h = np.array([math.cos(ts), math.sin(ts), 0.0])
    u_r = np.array([math.cos(math.pi - te + ts), math.sin(math.pi - te + ts), 0.0])

    tw_ext = math.radians(given.extended.theta_w)
    hand_ext = _rotate(-u_r, _Z_AXIS, tw_ext)
    # a positive mounting angle bends the folding hand wing down
    hinge = _rotate(_Z_AXIS, u_r, wrist_mount)
    u_m = _rotate(hand_ext, hinge, -(tw_ext - tw))
    pitch = math.asin(max(-1.0, min(1.0, float(u_m[2]))))

    shoulder = np.zeros(3)
    elbow = given.l_h * u_h
    wrist = elbow + given.l_r * u_r
    tip = wrist + given.l_m * u_m

    points = [_rotate(pt, _X_AXIS, flap_angle) for pt in (shoulder, elbow, wrist, tip)]
    if side == "left":
        mirror = np.array([1.0, -1.0, 1.0])
        points = [pt * mirror for pt in points]
    elif side != "right":
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return SkeletonPose(*points, hand_wing_pitch=pitch)


def wingspan(lengths: LinkageDerived, given: LinkageGiven, x_A: float) -> float:
    """Lateral wingtip coordinate (mm) of the planar skeleton at flap 0."""
    state = forward_kinematics(lengths, given, x_A)
    return float(skeleton_pose(state, 0.0, 0.0, lengths, given).wingtip[1])
