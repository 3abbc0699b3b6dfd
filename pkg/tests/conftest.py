import math

import numpy as np
import pytest

from morphwing import aero, linkage
from morphwing.crm import CrmConfig
from morphwing.reference import DESIGN_GIVEN


@pytest.fixture(scope="session")
def given():
    return DESIGN_GIVEN


@pytest.fixture(scope="session")
def lengths(given):
    return linkage.synthesize_linkage(given)


@pytest.fixture
def crm_cfg():
    return CrmConfig(R=12.0, H=20.0, gear_rate=3.0, mis_travel=(0.0, 20.0))


def synthetic_record(
    freq=2.5,
    n_cycles=8,
    fs=1000.0,
    fx=lambda ph: 0.0,
    fz=lambda ph: 0.0,
    mx=lambda ph: 0.0,
    jitter=None,
    rng=None,
):
    """Force record with a Hall pulse at the start of every cycle.

    Channel callables take the phase within the cycle (0..1). ``jitter``
    perturbs each cycle length by up to that many samples.
    """
    period_n = int(round(fs / freq))
    lengths = [period_n] * n_cycles
    if jitter:
        rng = rng or np.random.default_rng(0)
        lengths = [period_n + int(rng.integers(-jitter, jitter + 1)) for _ in range(n_cycles)]
    phase, hall = [], []
    for n in lengths:
        phase.extend(np.arange(n) / n)
        pulse = np.zeros(n, bool)
        pulse[:3] = True
        hall.extend(pulse)
    # one extra trigger closes the last cycle
    phase.extend([0.0, 0.0, 0.0, 0.0])
    hall.extend([True, True, True, False])
    phase = np.array(phase)
    t = np.arange(len(phase)) / fs
    vec = np.vectorize
    return aero.ForceRecord.from_arrays(
        t, np.array(hall),
        fx=vec(fx, otypes=[float])(phase),
        fz=vec(fz, otypes=[float])(phase),
        mx=vec(mx, otypes=[float])(phase),
    )


# acceptance criterion number -> (title, [(check, ok, detail), ...])
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record the checks of one acceptance criterion, then assert them all."""

    def record(number, title, checks):
        ACCEPTANCE[number] = (title, checks)
        failed = [f"{name}: {detail}" for name, ok, detail in checks if not ok]
        assert not failed, "; ".join(failed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, checks = ACCEPTANCE[number]
        ok = all(c[1] for c in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")
        for name, passed, detail in checks:
            if not passed:
                terminalreporter.write_line(f"       failed check {name}: {detail}")
