"""YIN fundamental-frequency tracking and manual correction overlays."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CohortFormatError

HOP = 32
WINDOW_S = 0.0167
F0_MIN = 50.0
F0_MAX = 800.0
DEFAULT_THRESHOLD = 0.15

_CHUNK = 512


@dataclass(frozen=True)
class F0Contour:
    """F0 estimates in Hz at ``contour_rate``; 0.0 marks an unvoiced frame.

    ``t0`` is the time stamp of the first frame in seconds.
    """

    f0: np.ndarray
    contour_rate: float
    t0: float = 0.0

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=float)
        if f0.ndim != 1:
            raise ValueError("contour must be one-dimensional")
        if not self.contour_rate > 0:
            raise ValueError("contour rate must be positive")
        if not np.all(np.isfinite(f0)):
            raise ValueError("contour contains non-finite values")
        voiced = f0[f0 != 0.0]
        if voiced.size and (voiced.min() < F0_MIN or voiced.max() > F0_MAX):
            raise ValueError(
                f"voiced f0 values must lie in [{F0_MIN:g}, {F0_MAX:g}] Hz"
            )
        object.__setattr__(self, "f0", f0)

    def __len__(self):
        return self.f0.size

    @property
    def voiced(self):
        return self.f0 != 0.0

    def times(self):
        return self.t0 + np.arange(self.f0.size) / self.contour_rate


def window_length(sample_rate):
    """Integration window in samples, round(16.7 ms * fs) (736 at 44.1 kHz)."""
    return int(round(WINDOW_S * sample_rate))


def _lag_bounds(sample_rate, max_available):
    tau_min = max(2, int(np.ceil(sample_rate / F0_MAX)))
    tau_max = min(int(np.floor(sample_rate / F0_MIN)), max_available)
    return tau_min, tau_max


def _cmndf(d):
    """Cumulative-mean-normalised difference along the last axis."""
    d = np.maximum(d, 0.0)
    csum = np.cumsum(d[..., 1:], axis=-1)
    lags = np.arange(1, d.shape[-1])
    out = np.ones_like(d)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = d[..., 1:] * lags / csum
    out[..., 1:] = np.where(csum > 0.0, ratio, 1.0)
    return out


def _pick(dn, sample_rate, threshold, tau_min, tau_max):
    below = np.nonzero(dn[tau_min: tau_max + 1] < threshold)[0]
    if below.size == 0:
        return None
    tau = tau_min + int(below[0])
    while tau + 1 <= tau_max and dn[tau + 1] < dn[tau]:
        tau += 1
    lag = float(tau)
    if 1 <= tau < dn.size - 1:
        a, b, c = dn[tau - 1], dn[tau], dn[tau + 1]
        denom = a - 2.0 * b + c
        if denom > 0.0:
            lag += float(np.clip(0.5 * (a - c) / denom, -1.0, 1.0))
    lag = min(max(lag, sample_rate / F0_MAX), sample_rate / F0_MIN)
    f0 = sample_rate / lag
    if not F0_MIN <= f0 <= F0_MAX:
        return None
    return f0


def _difference(frames, win, nlags):
    """YIN difference d[tau] for tau = 0..nlags-1 of each row of ``frames``.

    Each row must hold at least ``win + nlags - 1`` samples.
    """
    span = win + nlags - 1
    frames = frames[:, :span]
    nfft = 1 << int(span - 1).bit_length()
    head = np.fft.rfft(frames[:, :win], nfft)
    full = np.fft.rfft(frames, nfft)
    cross = np.fft.irfft(np.conj(head) * full, nfft)[:, :nlags]
    sq = np.concatenate([np.zeros((frames.shape[0], 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    e0 = sq[:, win][:, None]
    etau = sq[:, win: win + nlags] - sq[:, :nlags]
    return e0 + etau - 2.0 * cross


def yin_frame(frame, sample_rate, threshold=DEFAULT_THRESHOLD) -> Optional[float]:
    """Estimate f0 of one frame with YIN, or None when unvoiced.

    The integration window is round(16.7 ms * fs) samples and lags run up to
    ``len(frame) - window`` (capped at the 50 Hz period). The first lag whose
    CMNDF drops below ``threshold`` is followed down to its local minimum and
    refined by parabolic interpolation.
    """
    frame = np.asarray(frame, dtype=float)
    win = window_length(sample_rate)
    if frame.size < 2 * win:
        raise ValueError(
            f"frame of {frame.size} samples is shorter than twice the "
            f"{win}-sample integration window"
        )
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    tau_min, tau_max = _lag_bounds(sample_rate, frame.size - win - 1)
    d = _difference(frame[None, :], win, tau_max + 2)[0]
    return _pick(_cmndf(d), sample_rate, threshold, tau_min, tau_max)


def frame_count(n_samples, sample_rate):
    """Number of contour frames: floor((L - window) / 32) + 1."""
    win = window_length(sample_rate)
    if n_samples < win:
        return 0
    return (n_samples - win) // HOP + 1


def track_contour(w, threshold=DEFAULT_THRESHOLD) -> F0Contour:
    """Track f0 over a waveform with a hop of 32 samples.

    Frame ``n`` starts at sample ``32 n``; its time stamp is the centre of its
    integration window. Frames whose lag search would run past the end of the
    signal are reported unvoiced.
    """
    x = np.asarray(w.samples, dtype=float)
    fs = w.sample_rate
    win = window_length(fs)
    n_frames = frame_count(x.size, fs)
    if n_frames == 0:
        raise ValueError(
            f"waveform of {x.size} samples is shorter than one {win}-sample window"
        )
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    tau_min, tau_max = _lag_bounds(fs, int(np.floor(fs / F0_MIN)))
    tau_max = max(tau_max, win)
    nlags = tau_max + 2
    span = win + nlags - 1
    f0 = np.zeros(n_frames)
    if x.size >= span:
        starts = sliding_window_view(x, span)[::HOP]
        n_full = min(starts.shape[0], n_frames)
        for lo in range(0, n_full, _CHUNK):
            block = np.ascontiguousarray(starts[lo: min(lo + _CHUNK, n_full)])
            dn = _cmndf(_difference(block, win, nlags))
            for i, row in enumerate(dn):
                est = _pick(row, fs, threshold, tau_min, tau_max)
                if est is not None:
                    f0[lo + i] = est
    return F0Contour(f0, fs / HOP, t0=0.5 * win / fs)


@dataclass(frozen=True)
class Correction:
    start: int
    end: int
    action: str
    value_hz: Optional[float] = None


@dataclass
class CorrectionSet:
    entries: list = field(default_factory=list)

    def unvoice(self, start, end):
        self.entries.append(Correction(start, end, "unvoice"))
        return self

    def set_hz(self, start, end, value_hz):
        self.entries.append(Correction(start, end, "set", float(value_hz)))
        return self


def apply_corrections(c: F0Contour, cs: CorrectionSet) -> F0Contour:
    """Apply overlay entries in order; later entries win on overlap."""
    f0 = c.f0.copy()
    n = f0.size
    for e in cs.entries:
        if not 0 <= e.start <= e.end < n:
            raise IndexError(f"correction range [{e.start}, {e.end}] outside contour of length {n}")
        if e.action == "unvoice":
            f0[e.start: e.end + 1] = 0.0
        elif e.action == "set":
            if e.value_hz is None or not F0_MIN <= e.value_hz <= F0_MAX:
                raise ValueError(f"set value {e.value_hz} Hz outside [{F0_MIN:g}, {F0_MAX:g}]")
            f0[e.start: e.end + 1] = e.value_hz
        else:
            raise ValueError(f"unknown correction action {e.action!r}")
    return F0Contour(f0, c.contour_rate, c.t0)


OVERLAY_HEADER = ("start_index", "end_index", "action", "value_hz")


def read_corrections(path_or_buf) -> CorrectionSet:
    """Parse a correction overlay CSV (``start_index,end_index,action,value_hz``)."""
    if hasattr(path_or_buf, "read"):
        text, name = path_or_buf.read(), "<buffer>"
    else:
        name = os.fspath(path_or_buf)
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != OVERLAY_HEADER:
        raise CohortFormatError(f"{name}: expected header {','.join(OVERLAY_HEADER)}")
    cs = CorrectionSet()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise CohortFormatError(f"{name}:{lineno}: expected 4 fields")
        try:
            start, end = int(row[0]), int(row[1])
        except ValueError as exc:
            raise CohortFormatError(f"{name}:{lineno}: {exc}") from exc
        action, value = row[2].strip(), row[3].strip()
        if action == "unvoice":
            if value:
                raise CohortFormatError(f"{name}:{lineno}: value_hz must be blank for unvoice")
            cs.unvoice(start, end)
        elif action == "set":
            try:
                cs.set_hz(start, end, float(value))
            except ValueError as exc:
                raise CohortFormatError(f"{name}:{lineno}: bad value_hz {value!r}") from exc
        else:
            raise CohortFormatError(f"{name}:{lineno}: unknown action {action!r}")
    return cs


def write_corrections(path, cs: CorrectionSet):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(OVERLAY_HEADER) + "\n")
        for e in cs.entries:
            value = "" if e.action == "unvoice" else f"{e.value_hz:.6f}"
            fh.write(f"{e.start},{e.end},{e.action},{value}\n")
