"""Waveform I/O, DFT band-pass filtering and contour CSV exchange."""
from __future__ import annotations

import csv
import io
import os
import wave
from dataclasses import dataclass

import numpy as np

from .errors import CohortFormatError, EmptyAudioError, WavFormatError
from .pitch import F0Contour, HOP

# Bandwidth of the lavalier microphone used for the recordings.
MIC_BAND = (30.0, 18000.0)

CONTOUR_HEADER = ("time_s", "f0_hz", "voiced")


@dataclass(frozen=True)
class Waveform:
    """Mono signal with amplitudes in full-scale units (+/-1.0)."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if not self.sample_rate > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class BandSpec:
    low_hz: float
    high_hz: float

    def validate(self, sample_rate):
        if not (0.0 <= self.low_hz < self.high_hz <= sample_rate / 2.0):
            raise ValueError(
                f"band [{self.low_hz}, {self.high_hz}] Hz is invalid for a "
                f"sample rate of {sample_rate} Hz"
            )


def read_wav(path) -> Waveform:
    """Read a 16-bit PCM WAV file.

    Only the first channel of multi-channel files is kept. Samples are
    scaled by 1/32768, so the result lies in [-1, 1).
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            nchannels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except (wave.Error, EOFError, RuntimeError) as exc:
        raise WavFormatError(f"{path}: unsupported or corrupt WAV ({exc})") from exc
    if width != 2:
        raise WavFormatError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    if nframes == 0 or len(raw) == 0:
        raise EmptyAudioError(f"{path}: file contains no audio frames")
    ints = np.frombuffer(raw, dtype="<i2")
    ints = ints[: (ints.size // nchannels) * nchannels].reshape(-1, nchannels)[:, 0]
    return Waveform(ints.astype(float) / 32768.0, float(rate))


def to_pcm16(samples) -> np.ndarray:
    """Quantize full-scale samples to int16 (round to nearest, saturate)."""
    scaled = np.round(np.asarray(samples, dtype=float) * 32768.0)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def write_wav(path, w: Waveform, channels=1):
    """Write ``w`` as 16-bit PCM; extra channels, if requested, duplicate it."""
    if int(w.sample_rate) != w.sample_rate:
        raise ValueError("WAV headers store integer sample rates only")
    data = to_pcm16(w.samples)
    if channels > 1:
        data = np.repeat(data[:, None], channels, axis=1).ravel()
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(int(w.sample_rate))
        wf.writeframes(data.tobytes())


def _next_pow2(n):
    return 1 << max(0, int(n - 1).bit_length())


def bandpass_dft(w: Waveform, band: BandSpec = BandSpec(*MIC_BAND)) -> Waveform:
    """Brick-wall band-pass filter in the DFT domain.

    The signal is zero-padded to the next power of two, every bin outside
    the closed band [low_hz, high_hz] is zeroed together with its conjugate
    partner, and the inverse transform is truncated to the input length.
    """
    band.validate(w.sample_rate)
    n = w.samples.size
    nfft = _next_pow2(n)
    spec = np.fft.fft(w.samples, nfft)
    freqs = np.abs(np.fft.fftfreq(nfft, d=1.0 / w.sample_rate))
    spec[(freqs < band.low_hz) | (freqs > band.high_hz)] = 0.0
    out = np.fft.ifft(spec)[:n]
    norm = np.linalg.norm(w.samples)
    # Conjugate-symmetric zeroing keeps the result real up to rounding.
    assert np.linalg.norm(out.imag) <= 1e-9 * max(norm, 1.0)
    return Waveform(out.real, w.sample_rate)


def band_energy_split(w: Waveform, band: BandSpec):
    """Energies of the kept and zeroed DFT bins of the zero-padded signal.

    Returns ``(kept, removed, total)`` normalised so that ``total`` is the
    time-domain energy of the padded signal.
    """
    band.validate(w.sample_rate)
    nfft = _next_pow2(w.samples.size)
    spec = np.fft.fft(w.samples, nfft)
    freqs = np.abs(np.fft.fftfreq(nfft, d=1.0 / w.sample_rate))
    keep = (freqs >= band.low_hz) & (freqs <= band.high_hz)
    power = np.abs(spec) ** 2 / nfft
    return float(power[keep].sum()), float(power[~keep].sum()), float(np.sum(w.samples ** 2))


def write_contour_csv(path_or_buf, c: F0Contour):
    """Write ``c`` as ``time_s,f0_hz,voiced`` rows (LF endings, %.6f fields)."""
    lines = [",".join(CONTOUR_HEADER)]
    times = c.times()
    for t, f in zip(times, c.f0):
        lines.append(f"{t:.6f},{f:.6f},{int(f != 0.0)}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


_COMMON_RATES = (8000, 11025, 16000, 22050, 24000, 32000, 44100, 48000, 88200, 96000)


def _snap_rate(rate):
    # The CSV keeps only microseconds, so short contours give a coarse rate
    # estimate; contour rates are audio rates divided by the hop.
    best = min(_COMMON_RATES, key=lambda fs: abs(fs / HOP - rate))
    if abs(best / HOP - rate) <= 2e-3 * rate:
        return best / HOP
    return rate


def read_contour_csv(path_or_buf) -> F0Contour:
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
        name = "<buffer>"
    else:
        name = os.fspath(path_or_buf)
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CONTOUR_HEADER:
        raise CohortFormatError(f"{name}: expected header {','.join(CONTOUR_HEADER)}")
    times, f0 = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise CohortFormatError(f"{name}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            t, f, v = float(row[0]), float(row[1]), int(row[2])
        except ValueError as exc:
            raise CohortFormatError(f"{name}:{lineno}: {exc}") from exc
        if v not in (0, 1) or (v == 0) != (f == 0.0):
            raise CohortFormatError(f"{name}:{lineno}: voiced flag disagrees with f0_hz")
        times.append(t)
        f0.append(f)
    if len(f0) < 2:
        raise CohortFormatError(f"{name}: contour needs at least two rows")
    rate = _snap_rate((len(times) - 1) / (times[-1] - times[0]))
    return F0Contour(np.array(f0), rate, t0=times[0])
