"""Intonation analysis of read speech: F0 contours, modulation-spectrum
descriptors and the rank statistics used to relate them to Hoehn & Yahr
stage."""

from .contour import ContourDescriptors, PhonationMetrics, descriptors, lowpass_reconstruct, phonation_metrics
from .modspec import (
    BandRatios,
    MaskedAutocorr,
    ModSpectrum,
    band_average,
    band_ratios,
    contour_band_ratios,
    masked_autocorrelation,
    modulation_spectrum,
    psd,
)
from .pitch import CorrectionSet, F0Contour, apply_corrections, track_contour, yin_frame
from .signal_io import BandSpec, Waveform, bandpass_dft, read_wav, write_wav
from .stats import ecdf_with_band, eer, fit_regression, midranks, roc_auc, spearman, wilcoxon_ranksum

__version__ = "0.1.0"
