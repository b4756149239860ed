"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py``; the lines are collected in the
"acceptance criteria" section of the terminal summary.
"""
import itertools
import json
import math
import time

import numpy as np
import pytest

from pdintonation.cli import main
from pdintonation.modspec import (
    band_mask,
    band_ratios,
    contour_band_ratios,
    masked_autocorrelation,
    psd,
    ratio_sum_bound,
)
from pdintonation.pitch import F0Contour, frame_count, track_contour, window_length
from pdintonation.signal_io import Waveform
from pdintonation.stats import (
    eer,
    fit_regression,
    pairwise_auc,
    r_squared,
    roc_auc,
    spearman,
    wilcoxon_ranksum,
)
from pdintonation.study import replicate_study
from pdintonation.synth import SynthParams, simulate_cohort

from conftest import FS, RATE, gappy_contour, harmonic, modulated_contour


def _corpus():
    rng = np.random.default_rng(2718)
    out = [gappy_contour(rng) for _ in range(10)]
    out += [modulated_contour(f) for f in (3.0, 9.0, 15.0)]
    out += list(simulate_cohort(SynthParams(seed=0)).contours.values())
    return out


# criterion 1

def test_pitch_tracking_accuracy(acceptance):
    worst, octave_errors, unvoiced = 0.0, 0, 0
    start = time.perf_counter()
    for f0 in (90.0, 120.0, 180.0, 220.0, 300.0):
        x = harmonic(f0, 3.0)
        c = track_contour(Waveform(x, FS), 0.15)
        # interior frames: analysis span fully inside the signal
        span = window_length(FS) + FS // 50 + 1
        n_full = (x.size - span) // 32 + 1
        est = c.f0[:n_full]
        unvoiced += int(np.sum(est == 0))
        voiced = est[est > 0]
        worst = max(worst, float(np.max(np.abs(voiced - f0) / f0)))
        ratio = voiced / f0
        octave_errors += int(np.sum((np.abs(ratio - 2) < 0.1) | (np.abs(ratio - 0.5) < 0.05)))
        assert len(c) == frame_count(x.size, FS)
    elapsed = time.perf_counter() - start
    ok = worst < 0.01 and octave_errors == 0 and unvoiced == 0 and elapsed < 5.0
    acceptance(1, ok, f"max rel err {worst:.2e}, octave errors {octave_errors}, "
                      f"unvoiced interior {unvoiced}, runtime {elapsed:.2f} s")


# criterion 2

def _brute_rho(c, max_lag):
    v = c.f0 > 0
    n_voiced = v.sum()
    mu = sum(c.f0[v]) / n_voiced
    var = sum((c.f0[v] - mu) ** 2) / n_voiced
    dev = np.where(v, c.f0 - mu, 0.0)
    n = c.f0.size
    rho = np.zeros(max_lag + 1)
    for m in range(min(max_lag, n - 1) + 1):
        rho[m] = np.sum(dev[: n - m] * dev[m:]) / (n_voiced * var)
    return rho


def _brute_psd(rho):
    m_max = rho.size - 1
    period = 2 * m_max + 1
    lags = np.arange(-m_max, m_max + 1)
    sym = rho[np.abs(lags)]
    out = np.empty(m_max + 1)
    for lo in range(0, m_max + 1, 128):
        k = np.arange(lo, min(lo + 128, m_max + 1))
        out[k] = (np.exp(-2j * np.pi * np.outer(k, lags) / period) @ sym).real
    return out


def test_modspec_oracle_equivalence(acceptance):
    rng = np.random.default_rng(31415)
    worst_rho = worst_psd = 0.0
    for _ in range(10):
        c = gappy_contour(rng, n=4000, unvoiced_frac=0.2)
        a = masked_autocorrelation(c)
        ref = _brute_rho(c, a.max_lag)
        worst_rho = max(worst_rho, np.max(np.abs(a.rho - ref)) / np.max(np.abs(ref)))
        spec = psd(a).psd
        ref_psd = _brute_psd(ref)
        worst_psd = max(worst_psd, np.max(np.abs(spec - ref_psd)) / np.max(np.abs(ref_psd)))
    ok = worst_rho < 1e-9 and worst_psd < 1e-9
    acceptance(2, ok, f"rho rel err {worst_rho:.1e}, psd rel err {worst_psd:.1e} (10 contours)")


# criterion 3

def test_rho_zero_and_ratio_sum(acceptance):
    corpus = _corpus()
    worst_rho0, worst_sum, bound_ok = 0.0, 0.0, True
    for c in corpus:
        a = masked_autocorrelation(c)
        s = psd(a)
        r = band_ratios(s)
        worst_rho0 = max(worst_rho0, abs(a.rho[0] - 1.0))
        worst_sum = max(worst_sum, abs(r.total - 1.0))
        bound_ok &= abs(r.total - 1.0) < ratio_sum_bound(s)
    bins = int(band_mask(s, 0, 20).sum())
    ok = worst_rho0 <= 1e-12 and bound_ok
    acceptance(3, ok, f"{len(corpus)} contours, max |rho0-1| {worst_rho0:.1e}, "
                      f"max |sum-1| {worst_sum:.1e} (bound 2/{bins})")


# criterion 4

def test_band_selectivity(acceptance):
    low = contour_band_ratios(modulated_contour(3.0, seconds=4.0)).lfer
    mid = contour_band_ratios(modulated_contour(9.0, seconds=4.0)).mfer
    high = contour_band_ratios(modulated_contour(15.0, seconds=4.0)).hfer
    ok = low > 0.95 and mid > 0.9 and high > 0.9
    acceptance(4, ok, f"LFER(3 Hz) {low:.4f}, MFER(9 Hz) {mid:.4f}, HFER(15 Hz) {high:.4f}")


# criterion 5

def _midranks_by_enumeration(x):
    s = sorted(x)
    return [sum(j + 1 for j, v in enumerate(s) if v == xi) / s.count(xi) for xi in x]


def _pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    num = sum((p - ma) * (q - mb) for p, q in zip(a, b))
    den = math.sqrt(sum((p - ma) ** 2 for p in a) * sum((q - mb) ** 2 for q in b))
    return num / den


def test_spearman_oracle(acceptance):
    rng = np.random.default_rng(1618)
    worst_rho = worst_p = 0.0
    for _ in range(200):
        x = rng.integers(0, 6, 10).tolist()  # small alphabet injects ties
        y = rng.normal(size=10).round(1).tolist()
        y[3] = y[7]
        if len(set(x)) == 1:
            x[0] += 1
        rho = _pearson(_midranks_by_enumeration(x), _midranks_by_enumeration(y))
        z = rho * math.sqrt(9)
        p = 0.5 * math.erfc(abs(z) / math.sqrt(2))
        r = spearman(x, y)
        worst_rho = max(worst_rho, abs(r.rho_s - rho))
        worst_p = max(worst_p, abs(r.p_value - p))
    ok = worst_rho <= 1e-12 and worst_p <= 1e-12
    acceptance(5, ok, f"200 pairs, max |drho| {worst_rho:.1e}, max |dp| {worst_p:.1e}")


# criterion 6

def _enumerated_p(a, b):
    pooled = list(a) + list(b)
    ranks = _midranks_by_enumeration(pooled)
    w = sum(ranks[: len(a)])
    sums = [sum(ranks[i] for i in c) for c in itertools.combinations(range(len(pooled)), len(a))]
    lo = sum(s <= w + 1e-9 for s in sums) / len(sums)
    hi = sum(s >= w - 1e-9 for s in sums) / len(sums)
    return min(1.0, 2 * min(lo, hi))


def test_wilcoxon_exact(acceptance):
    rng = np.random.default_rng(1414)
    worst, cases = 0.0, 0
    for na in range(1, 10):
        for nb in range(1, 11 - na):
            if na + nb < 3:
                continue
            for data in (rng.normal(size=na + nb), rng.integers(0, 4, na + nb)):
                a, b = data[:na], data[na:]
                worst = max(worst, abs(wilcoxon_ranksum(a, b, method="exact") - _enumerated_p(a, b)))
                cases += 1
    ok = worst <= 1e-12
    acceptance(6, ok, f"{cases} cases with a+b <= 10, max |dp| {worst:.1e}")


# criterion 7

def test_regression_optimality(acceptance):
    rng = np.random.default_rng(1732)
    x = rng.uniform(0.05, 2.0, size=(30, 3))
    design = np.column_stack([np.ones(30), np.log(x)])
    y = design @ [0.5, -1.0, 2.0, 0.3] + rng.normal(0, 0.4, 30)
    m = fit_regression(x, y)
    resid = design @ m.coefficients - y
    ortho = float(np.max(np.abs(design.T @ resid)))

    exact = design @ [1.0, 0.5, -0.25, 2.0]
    perfect = fit_regression(x, exact)
    coef_err = float(np.max(np.abs(perfect.coefficients - [1.0, 0.5, -0.25, 2.0])))

    pred = design @ m.coefficients
    mean = lambda v: sum(v) / len(v)
    res = [p - q for p, q in zip(pred, y)]
    var = lambda v: mean([(e - mean(v)) ** 2 for e in v])
    r2_ref = 1 - var(res) / var(list(y))
    r2_err = abs(m.r_squared - r2_ref) + abs(r_squared(pred, y) - r2_ref)
    ok = ortho < 1e-8 and abs(perfect.r_squared - 1) <= 1e-9 and coef_err < 1e-9 and r2_err < 1e-12
    acceptance(7, ok, f"orthogonality {ortho:.1e}, perfect-fit R2 {perfect.r_squared:.12f}, "
                      f"R2 formula err {r2_err:.1e}")


# criterion 8

def test_detection_identities(acceptance):
    rng = np.random.default_rng(1123)
    worst = 0.0
    for _ in range(50):
        pos, neg = rng.normal(0.7, 1, 40), rng.normal(0, 1, 35)
        worst = max(worst, abs(roc_auc(pos, neg).auc - pairwise_auc(pos, neg)))
    sep_pos, sep_neg = rng.uniform(2, 3, 20), rng.uniform(0, 1, 20)
    sep = (eer(sep_pos, sep_neg), roc_auc(sep_pos, sep_neg).auc)
    same = rng.normal(size=200)
    ident = (eer(same, same), roc_auc(same, same).auc)
    ok = worst < 1e-9 and sep == (0.0, 1.0) and all(abs(v - 0.5) <= 0.05 for v in ident)
    acceptance(8, ok, f"max |AUC - MW| {worst:.1e}, separated EER/AUC {sep[0]:g}/{sep[1]:g}, "
                      f"identical EER/AUC {ident[0]:.3f}/{ident[1]:.3f}")


# criterion 9

def _signs_hold(report):
    corr = report.data["correlations"]
    cells = (corr["rel_std"]["hy"]["all"], corr["lfer"]["hy"]["all"], corr["mfer"]["hy"]["all"])
    signs = (cells[0]["rho"] < 0, cells[1]["rho"] < 0, cells[2]["rho"] > 0)
    return all(signs) and all(c["p"] < 0.05 for c in cells)


@pytest.mark.slow
def test_closed_loop_replication(acceptance, tmp_path):
    passed = sum(_signs_hold(replicate_study(simulate_cohort(SynthParams(seed=s)))) for s in range(100))
    start = time.perf_counter()
    assert main(["simulate", "--seed", "100", "--out", str(tmp_path / "cohort")]) == 0
    assert main(["analyze", str(tmp_path / "cohort" / "metadata.csv"), "--out", str(tmp_path / "out"), "-q"]) == 0
    elapsed = time.perf_counter() - start
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    ok = passed >= 95 and elapsed < 60.0 and data["n_speakers"] == 62
    acceptance(9, ok, f"sign pattern in {passed}/100 seeds, end-to-end run {elapsed:.1f} s")


# criterion 10

def test_determinism(acceptance, tmp_path):
    assert main(["simulate", "--seed", "7", "--out", str(tmp_path / "cohort")]) == 0
    meta = str(tmp_path / "cohort" / "metadata.csv")
    for run in ("a", "b"):
        assert main(["analyze", meta, "--out", str(tmp_path / run), "-q", "--jobs", "4"]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files]
    ok = all(same) and "report.json" in files and len(files) >= 5
    acceptance(10, ok, f"{sum(same)}/{len(files)} output files byte-identical")
