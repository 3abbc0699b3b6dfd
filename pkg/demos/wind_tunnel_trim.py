"""
From force-balance traces to a trim point
=========================================

Synthesize load-cell records for a grid of angle of attack and flapping
frequency, reduce them to cycle-averaged lift and thrust, fit quadratic
surfaces and solve for level flight at 600 g.
"""
import math

import numpy as np

from morphwing import aero
from morphwing.reference import SURFACE_FITS

FS = 1000.0
rng = np.random.default_rng(1)
lift_true = aero.AeroSurface.from_dict(SURFACE_FITS["lift"][20])
thrust_true = aero.AeroSurface.from_dict(SURFACE_FITS["thrust"][20])


def record(alpha, freq, n_cycles=6, g_offset=5.886):
    """Balance-frame forces whose wind-axis cycle means follow the true surfaces."""
    n = int(round(FS / freq))
    ph = np.tile(np.arange(n) / n, n_cycles)
    s, c = math.sin(math.radians(alpha)), math.cos(math.radians(alpha))
    L = lift_true(alpha, freq) * aero.G0 / 1000 - g_offset * s
    T = thrust_true(alpha, freq) * aero.G0 / 1000 - g_offset * c
    fx = s * L + c * T + 0.8 * np.sin(2 * np.pi * ph) + rng.normal(0, 0.05, len(ph))
    fz = c * L - s * T + 2.0 * np.cos(2 * np.pi * ph) + rng.normal(0, 0.05, len(ph))
    hall = ph < 3 / n
    hall = np.append(hall, True)
    t = np.arange(len(hall)) / FS
    return aero.ForceRecord.from_arrays(t, hall, fx=np.append(fx, fx[0]), fz=np.append(fz, fz[0]))


rows = []
for alpha in np.arange(0, 13, 2.0):
    for freq in (2.0, 2.5, 3.125, 4.0):
        f, lift, thrust = aero.reduce_condition(record(alpha, freq), alpha, g_offset_n=5.886)
        rows.append((alpha, f, lift.mean, thrust.mean))
rows = np.array(rows)

lift = aero.fit_surface(rows[:, [0, 1, 2]])
thrust = aero.fit_surface(rows[:, [0, 1, 3]])
print("lift  ", np.round(lift.coefficients, 3), f"r={lift.r_value:.5f}")
print("thrust", np.round(thrust.coefficients, 3), f"r={thrust.r_value:.5f}")

trim = aero.solve_trim(lift, thrust, 600.0)
print(f"\ntrim: alpha* = {trim.alpha_star:.2f} deg at {trim.freq_star:.3f} Hz")

# Trim angle for each wrist mounting angle, straight from the published fits
for theta in (10, 15, 20, 25):
    L = aero.AeroSurface.from_dict(SURFACE_FITS["lift"][theta])
    T = aero.AeroSurface.from_dict(SURFACE_FITS["thrust"][theta])
    t = aero.solve_trim(L, T)
    print(f"wrist mount {theta} deg: alpha* = {t.alpha_star:5.2f} deg, F* = {t.freq_star:.3f} Hz")
