import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import chirp

from pdintonation.errors import CohortFormatError
from pdintonation.pitch import (
    F0Contour,
    CorrectionSet,
    _cmndf,
    _difference,
    apply_corrections,
    frame_count,
    read_corrections,
    track_contour,
    window_length,
    write_corrections,
    yin_frame,
)
from pdintonation.signal_io import Waveform

from conftest import FS, RATE

WIN = window_length(FS)


def _sine(f, n, fs=FS, phase=0.0):
    return np.sin(2 * np.pi * f * np.arange(n) / fs + phase)


def test_window_is_736_samples_at_44k1():
    assert WIN == 736


def test_difference_matches_direct_sum(rng):
    x = rng.normal(size=WIN + 300)
    d = _difference(x[None, :], WIN, 300)[0]
    direct = [np.sum((x[:WIN] - x[tau: tau + WIN]) ** 2) for tau in range(300)]
    assert np.allclose(d, direct, rtol=1e-9, atol=1e-9)


def test_yin_frame_sinusoid():
    assert yin_frame(_sine(220.0, 2 * WIN), FS) == pytest.approx(220.0, abs=0.5)


def test_yin_frame_silence_and_noise():
    assert yin_frame(np.zeros(2 * WIN), FS) is None
    noise = np.random.default_rng(7).normal(size=2 * WIN)
    d = _cmndf(_difference(noise[None, :], WIN, WIN)[0][None, :])[0]
    assert d[56:].min() > 0.15  # oracle: the CMNDF floor never reaches the threshold
    assert yin_frame(noise, FS, 0.15) is None


def test_yin_frame_errors():
    with pytest.raises(ValueError):
        yin_frame(np.zeros(2 * WIN - 1), FS)
    with pytest.raises(ValueError):
        yin_frame(np.zeros(2 * WIN), FS, threshold=1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(180.0, 400.0), st.floats(0.0, 2 * np.pi))
def test_periodic_accuracy_within_one_percent(f, phase):
    # at least three periods inside the 16.7 ms window
    x = _sine(f, 3 * WIN, phase=phase) + 0.5 * _sine(2 * f, 3 * WIN, phase=2 * phase)
    est = yin_frame(x, FS)
    assert est is not None
    assert abs(est - f) / f < 0.01


@settings(max_examples=40, deadline=None)
@given(st.floats(100.0, 400.0), st.floats(0.0, 2 * np.pi))
def test_no_octave_up_errors(f, phase):
    est = yin_frame(_sine(f, 3 * WIN, phase=phase), FS, 0.15)
    assert est is not None
    assert abs(est - 2 * f) > 0.1 * f


def test_track_chirp():
    seconds = 3.0
    t = np.arange(int(seconds * FS)) / FS
    x = chirp(t, f0=150, f1=250, t1=seconds, method="linear")
    c = track_contour(Waveform(x, FS))
    times = c.times()
    truth = 150 + (250 - 150) * times / seconds
    central = (times > 0.1) & (times < 2.9)
    assert np.all(c.f0[central] > 0)
    assert np.max(np.abs(c.f0[central] - truth[central])) < 2.0


def test_track_segmentation():
    tone = _sine(200.0, FS)
    x = np.concatenate([tone, np.zeros(FS), tone])
    c = track_contour(Waveform(x, FS))
    voiced = c.f0 > 0
    times = c.times()
    edges = np.flatnonzero(np.diff(voiced.astype(int)))
    # the trailing frames lack a full lag span and are unvoiced by design
    edges = edges[times[edges] < 2.9]
    # exactly one voiced->unvoiced and one unvoiced->voiced transition
    assert edges.size == 2
    off = 0.5 * (times[edges[0]] + times[edges[0] + 1])
    on = 0.5 * (times[edges[1]] + times[edges[1] + 1])
    assert abs(off - 1.0) <= 0.025
    assert abs(on - 2.0) <= 0.025
    assert not voiced[0] or c.f0[0] == pytest.approx(200.0, abs=1.0)


def test_track_silence_all_unvoiced():
    c = track_contour(Waveform(np.zeros(FS // 2), FS))
    assert not c.f0.any()
    assert c.contour_rate == RATE


@settings(max_examples=30, deadline=None)
@given(st.integers(WIN, 6000))
def test_contour_length_formula(n):
    c = track_contour(Waveform(np.zeros(n), FS))
    assert len(c) == (n - WIN) // 32 + 1 == frame_count(n, FS)


def test_track_too_short():
    with pytest.raises(ValueError):
        track_contour(Waveform(np.zeros(WIN - 1), FS))


def test_voicing_monotone_in_threshold(rng):
    n = FS
    x = _sine(180.0, n) * np.linspace(0.05, 1, n) + rng.normal(0, 0.3, n)
    counts = [int((track_contour(Waveform(x, FS), th).f0 > 0).sum()) for th in (0.05, 0.1, 0.15, 0.25, 0.4)]
    assert counts == sorted(counts)
    assert counts[0] < counts[-1]


def test_f0contour_validation():
    with pytest.raises(ValueError):
        F0Contour(np.array([0.0, 30.0]), RATE)
    with pytest.raises(ValueError):
        F0Contour(np.array([np.nan]), RATE)


def _contour():
    f0 = np.full(100, 180.0)
    f0[:5] = 0.0
    f0[40:50] = 360.0  # octave error
    return F0Contour(f0, RATE)


def test_corrections_identity_and_full_mask():
    c = _contour()
    assert np.array_equal(apply_corrections(c, CorrectionSet()).f0, c.f0)
    out = apply_corrections(c, CorrectionSet().unvoice(0, len(c) - 1))
    assert not out.f0.any()


def test_corrections_fix_octave_error():
    c = _contour()
    out = apply_corrections(c, CorrectionSet().set_hz(40, 49, 180.0))
    assert np.all(out.f0[40:50] == 180.0)
    untouched = np.ones(100, dtype=bool)
    untouched[40:50] = False
    assert np.array_equal(out.f0[untouched], c.f0[untouched])
    assert len(out) == len(c)


def test_later_corrections_win():
    c = _contour()
    out = apply_corrections(c, CorrectionSet().set_hz(10, 20, 200.0).unvoice(15, 25))
    assert np.all(out.f0[10:15] == 200.0)
    assert not out.f0[15:26].any()


def test_correction_errors():
    c = _contour()
    with pytest.raises(IndexError):
        apply_corrections(c, CorrectionSet().unvoice(90, 100))
    with pytest.raises(ValueError):
        apply_corrections(c, CorrectionSet().set_hz(0, 3, 900.0))


def test_overlay_csv(tmp_path):
    cs = CorrectionSet().unvoice(0, 4).set_hz(40, 49, 180.0)
    p = tmp_path / "overlay.csv"
    write_corrections(p, cs)
    assert p.read_text().splitlines() == [
        "start_index,end_index,action,value_hz",
        "0,4,unvoice,",
        "40,49,set,180.000000",
    ]
    assert read_corrections(p).entries == cs.entries
    with pytest.raises(CohortFormatError):
        read_corrections(io.StringIO("start_index,end_index,action,value_hz\n0,1,shift,3\n"))
    with pytest.raises(CohortFormatError):
        read_corrections(io.StringIO("start_index,end_index,action,value_hz\n0,1,unvoice,3\n"))
