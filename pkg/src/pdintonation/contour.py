"""Range descriptors, phonation-time metrics and low-pass reconstruction of
F0 contours."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import UnvoicedContourError
from .pitch import F0Contour


@dataclass(frozen=True)
class ContourDescriptors:
    mean_hz: float
    min_hz: float
    max_hz: float
    std_hz: float
    rel_std: float
    voiced_count: int

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PhonationMetrics:
    task_duration_s: float
    phonation_time_s: float
    phonation_ratio: float

    def as_dict(self):
        return asdict(self)


def _voiced_values(c: F0Contour, minimum=1):
    values = c.f0[c.voiced]
    if values.size < minimum:
        if values.size == 0:
            raise UnvoicedContourError("no voiced frames in contour")
        raise UnvoicedContourError(
            f"contour has {values.size} voiced frames, at least {minimum} required"
        )
    return values


def voiced_mean(values):
    """Mean taken relative to the minimum and kept inside [min, max].

    A plain sum can land one ulp outside the range of a constant
    contour, which would give it a tiny nonzero spread.
    """
    lo = values.min()
    return float(min(max(lo + np.mean(values - lo), lo), values.max()))


def descriptors(c: F0Contour) -> ContourDescriptors:
    """Mean, extrema and population standard deviation over voiced frames."""
    values = _voiced_values(c)
    n = values.size
    mean = voiced_mean(values)
    std = float(np.sqrt(np.sum((values - mean) ** 2) / n))
    return ContourDescriptors(
        mean_hz=mean,
        min_hz=float(values.min()),
        max_hz=float(values.max()),
        std_hz=std,
        rel_std=std / mean,
        voiced_count=int(n),
    )


def phonation_metrics(c: F0Contour) -> PhonationMetrics:
    """Voiced time relative to the span between the first and last voiced frame.

    Audio alone cannot locate word boundaries, so the reading task is taken
    to run from the first to the last voiced frame.
    """
    _voiced_values(c)
    idx = np.flatnonzero(c.voiced)
    duration = (idx[-1] - idx[0] + 1) / c.contour_rate
    phonation = idx.size / c.contour_rate
    return PhonationMetrics(float(duration), float(phonation), float(phonation / duration))


def lowpass_reconstruct(c: F0Contour, cutoff_hz=6.0, max_lag=None) -> np.ndarray:
    """Low-pass version of the contour evaluated at its voiced frames.

    The mean-removed voiced samples are transformed with a non-uniform DFT
    evaluated on the grid k * rate / P for |k * rate / P| <= cutoff_hz, and
    the kept components are summed back at the voiced time stamps. P is
    2M + 1 with M the modulation-spectrum lag count, widened to the voiced
    span when the contour is longer so the inverse does not wrap.

    Returns an array aligned with ``c.f0[c.voiced]``.
    """
    values = _voiced_values(c, minimum=2)
    rate = c.contour_rate
    if not 0.0 < cutoff_hz < rate / 2.0:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, {rate / 2.0}) Hz")
    if max_lag is None:
        max_lag = int(round(2.0 * rate))
    idx = np.flatnonzero(c.voiced)
    n = (idx - idx[0]).astype(float)
    period = max(2 * max_lag + 1, int(idx[-1] - idx[0]) + 1)
    step = rate / period
    kmax = int(np.floor(cutoff_hz / step + 1e-9))
    k = np.arange(-kmax, kmax + 1, dtype=float)
    mean = voiced_mean(values)
    basis = np.exp(-2j * np.pi * np.outer(k, n) / period)
    coeffs = basis @ (values - mean)
    recon = (basis.conj().T @ coeffs).real / period
    return recon + mean
