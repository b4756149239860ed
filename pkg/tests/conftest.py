import numpy as np
import pytest

from pdintonation.pitch import F0Contour

FS = 44100
RATE = FS / 32


def planck_taper(n, ramp):
    """C-infinity fade-in/out of ``ramp`` samples at each end."""
    w = np.ones(n)
    u = (np.arange(ramp) + 0.5) / ramp
    with np.errstate(over="ignore"):
        edge = 1.0 / (1.0 + np.exp(1.0 / u - 1.0 / (1.0 - u)))
    w[:ramp] = edge
    w[n - ramp:] = edge[::-1]
    return w


def harmonic(f0, seconds, fs=FS, n_harm=5):
    t = np.arange(int(round(seconds * fs))) / fs
    return sum(np.sin(2 * np.pi * k * f0 * t) / k for k in range(1, n_harm + 1))


def modulated_contour(freqs, seconds=4.0, base=150.0, amp=10.0, rate=RATE):
    t = np.arange(int(round(seconds * rate))) / rate
    f0 = base + sum(amp * np.sin(2 * np.pi * f * t) for f in np.atleast_1d(freqs))
    return F0Contour(f0, rate)


def gappy_contour(rng, n=4000, unvoiced_frac=0.2, rate=RATE):
    """Random contour with about ``unvoiced_frac`` of frames in unvoiced gaps."""
    f0 = 150 + 20 * np.cumsum(rng.normal(0, 0.05, n)) + rng.normal(0, 3, n)
    f0 = np.clip(f0, 60, 700)
    mask = np.ones(n, dtype=bool)
    target = int(unvoiced_frac * n)
    while (~mask).sum() < target:
        length = int(rng.integers(20, 200))
        start = int(rng.integers(0, n - length))
        mask[start: start + length] = False
    f0[~mask] = 0.0
    return F0Contour(f0, rate)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion and assert on it."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
