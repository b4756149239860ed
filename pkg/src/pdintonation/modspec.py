"""Modulation spectrum of an F0 contour and its band-energy ratios."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import voiced_mean
from .errors import DegenerateContourError, EmptyBandError, UnvoicedContourError
from .pitch import F0Contour

# (low, high] modulation bands in Hz: supra-syllabic, intra-syllabic, roughness.
LOW_BAND = (0.0, 6.0)
MID_BAND = (6.0, 12.0)
HIGH_BAND = (12.0, 20.0)
FULL_BAND = (0.0, 20.0)


@dataclass(frozen=True)
class MaskedAutocorr:
    """One-sided normalised autocorrelation; rho[-m] == rho[m]."""

    rho: np.ndarray
    max_lag: int
    contour_rate: float


@dataclass(frozen=True)
class ModSpectrum:
    psd: np.ndarray
    freq_step_hz: float

    @property
    def freqs(self):
        return np.arange(self.psd.size) * self.freq_step_hz


@dataclass(frozen=True)
class BandRatios:
    lfer: float
    mfer: float
    hfer: float

    @property
    def total(self):
        return self.lfer + self.mfer + self.hfer

    def as_dict(self):
        return {"lfer": self.lfer, "mfer": self.mfer, "hfer": self.hfer}


def default_max_lag(contour_rate):
    """M = round(2 * rate): two seconds of lags, about 0.25 Hz resolution."""
    return int(round(2.0 * contour_rate))


def _centred_masked(c: F0Contour):
    v = c.voiced
    n_voiced = int(v.sum())
    if n_voiced < 2:
        raise UnvoicedContourError("masked autocorrelation needs at least two voiced frames")
    mean = voiced_mean(c.f0[v])
    g = np.where(v, c.f0 - mean, 0.0)
    energy = float(np.dot(g, g))
    if energy <= 0.0:
        raise DegenerateContourError("voiced contour is constant; autocorrelation undefined")
    return g, energy


def masked_autocorrelation(c: F0Contour, max_lag=None) -> MaskedAutocorr:
    """Autocorrelation of the mean-removed voiced samples, normalised by N sigma^2.

    Products are only formed where both frames are voiced; pairs that fall
    past the end of the contour are dropped (no circular wrap).
    """
    g, energy = _centred_masked(c)
    if max_lag is None:
        max_lag = default_max_lag(c.contour_rate)
    n = g.size
    nfft = 1 << int(n + max_lag).bit_length()
    spec = np.fft.rfft(g, nfft)
    acf = np.fft.irfft(spec * np.conj(spec), nfft)
    rho = np.zeros(max_lag + 1)
    upto = min(max_lag, n - 1)
    rho[: upto + 1] = acf[: upto + 1] / energy
    rho[0] = 1.0  # sum of squares over itself; avoid FFT rounding at lag 0
    return MaskedAutocorr(rho, int(max_lag), float(c.contour_rate))


def masked_autocorrelation_direct(c: F0Contour, max_lag=None) -> MaskedAutocorr:
    """Lag-by-lag evaluation of the same estimator, O(N * M)."""
    g, energy = _centred_masked(c)
    if max_lag is None:
        max_lag = default_max_lag(c.contour_rate)
    n = g.size
    rho = np.zeros(max_lag + 1)
    for m in range(min(max_lag, n - 1) + 1):
        rho[m] = np.dot(g[: n - m], g[m:]) / energy
    return MaskedAutocorr(rho, int(max_lag), float(c.contour_rate))


def psd(a: MaskedAutocorr) -> ModSpectrum:
    """DFT of the symmetric lag sequence rho[-M..M] on 2M+1 points, bins 0..M."""
    m = a.max_lag
    sym = np.concatenate([a.rho, a.rho[:0:-1]])
    spec = np.fft.fft(sym)
    scale = max(np.abs(spec).max(), 1.0)
    assert np.abs(spec.imag).max() <= 1e-9 * scale
    return ModSpectrum(spec.real[: m + 1].copy(), a.contour_rate / (2 * m + 1))


def psd_direct(a: MaskedAutocorr, chunk=256) -> ModSpectrum:
    """Cosine-sum evaluation of the same transform, O(M^2)."""
    m = a.max_lag
    period = 2 * m + 1
    lags = np.arange(1, m + 1)
    out = np.empty(m + 1)
    for lo in range(0, m + 1, chunk):
        k = np.arange(lo, min(lo + chunk, m + 1))
        phase = (np.outer(k, lags) % period) * (2.0 * np.pi / period)
        out[k] = a.rho[0] + 2.0 * np.cos(phase) @ a.rho[1:]
    return ModSpectrum(out, a.contour_rate / period)


def band_mask(s: ModSpectrum, fa, fb):
    f = s.freqs
    return (f > fa) & (f <= fb)


def band_average(s: ModSpectrum, fa, fb) -> float:
    """Mean of |P(f_k)| over bins with fa < f_k <= fb."""
    nyquist = s.freq_step_hz * (s.psd.size - 0.5)
    if not 0.0 <= fa < fb:
        raise ValueError(f"invalid band ({fa}, {fb}]")
    if fb > nyquist:
        raise ValueError(f"band edge {fb} Hz beyond the spectrum")
    sel = band_mask(s, fa, fb)
    if not sel.any():
        raise EmptyBandError(f"no spectral bins in ({fa}, {fb}] Hz")
    return float(np.abs(s.psd[sel]).mean())


def band_ratios(s: ModSpectrum) -> BandRatios:
    """Width-weighted band averages relative to the whole 0-20 Hz range."""
    total = band_average(s, *FULL_BAND) * (FULL_BAND[1] - FULL_BAND[0])
    if total <= 0.0:
        raise DegenerateContourError("spectrum is zero over (0, 20] Hz")
    parts = [band_average(s, lo, hi) * (hi - lo) / total for lo, hi in (LOW_BAND, MID_BAND, HIGH_BAND)]
    return BandRatios(*parts)


def ratio_sum_bound(s: ModSpectrum):
    """Tolerance on |LFER + MFER + HFER - 1|: 2 / (bins in (0, 20])."""
    return 2.0 / int(band_mask(s, *FULL_BAND).sum())


def modulation_spectrum(c: F0Contour, max_lag=None) -> ModSpectrum:
    return psd(masked_autocorrelation(c, max_lag))


def contour_band_ratios(c: F0Contour, max_lag=None) -> BandRatios:
    return band_ratios(modulation_spectrum(c, max_lag))
