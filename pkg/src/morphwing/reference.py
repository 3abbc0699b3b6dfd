"""Published design values of the prototype vehicle.

``DESIGN_GIVEN`` carries the tucked pose as shoulder 20 deg, elbow 41 deg,
wrist 35 deg. The published table prints only one 20 deg entry for the
tucked pose; back-substituting the published derived lengths shows it is
the shoulder angle and that the wrist sits at 35 deg.
"""
from __future__ import annotations

from .linkage import LinkageDerived, LinkageGiven, PoseConstraint

DESIGN_GIVEN = LinkageGiven(
    l_h=110.0,
    l_r=180.0,
    l_m=370.0,
    b=20.0,
    f=30.0,
    extended=PoseConstraint(theta_s=51.0, theta_e=110.0, theta_w=147.0, x_A=45.0),
    tucked=PoseConstraint(theta_s=20.0, theta_e=41.0, theta_w=35.0, x_A=65.0),
)

DESIGN_DERIVED = LinkageDerived(
    a=15.3646, c=33.5769, d=76.4231, e=73.6915, g=180.0, h=20.1844, i=16.9713, j=202.8699
)

# cycle-averaged lift (g) and net thrust (g) surfaces per wrist mounting angle (deg),
# model z0 + a*alpha + b*F + c*alpha^2 + d*F^2 + f*alpha*F with alpha in deg, F in Hz
SURFACE_FITS = {
    "lift": {
        10: dict(z0=9.940, a=22.879, b=97.421, c=-0.095, d=-0.664, f=0.576, r_value=0.99969, rmse=3.958, n_points=70),
        15: dict(z0=155.857, a=12.322, b=29.811, c=0.092, d=12.722, f=2.769, r_value=0.99948, rmse=3.015, n_points=42),
        20: dict(z0=191.549, a=14.278, b=11.376, c=-0.029, d=17.959, f=2.656, r_value=0.99936, rmse=4.808, n_points=59),
        25: dict(z0=202.331, a=13.544, b=10.631, c=-0.038, d=18.423, f=3.454, r_value=0.99864, rmse=6.631, n_points=50),
    },
    "thrust": {
        10: dict(z0=-127.799, a=1.402, b=18.077, c=-0.222, d=7.276, f=-0.453, r_value=0.99952, rmse=1.270, n_points=70),
        15: dict(z0=-63.082, a=-0.231, b=-17.318, c=-0.213, d=12.767, f=-0.6618, r_value=0.99950, rmse=1.016, n_points=42),
        20: dict(z0=-80.520, a=2.939, b=-4.745, c=-0.417, d=10.466, f=-0.939, r_value=0.99825, rmse=2.127, n_points=59),
        25: dict(z0=-67.745, a=2.594, b=-11.970, c=-0.444, d=10.952, f=-1.184, r_value=0.99851, rmse=1.960, n_points=50),
    },
}

FLIGHT_WEIGHT_G = 600.0
