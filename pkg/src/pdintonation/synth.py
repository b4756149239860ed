"""Synthetic F0 contours and cohorts for end-to-end testing.

Generator settings live in a flat ``key = value`` text file. Global keys::

    seed, contour_rate, noise_rel, pause_len_s, range_jitter,
    pitch_jitter, mix_concentration, duration_jitter, age_slope_male,
    age_slope_female

Per-cell keys are ``<sex>.<stage>.<field>`` where sex is ``male`` or
``female``, stage is an H&Y label (``0`` for controls, ``2.5`` ...) and
field is one of ``base_pitch_hz, rel_range, mix_low, mix_mid, mix_high,
pause_rate, duration_s``. ``#`` starts a comment.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .cohort import HY_LABELS, Cohort, SpeakerRecord, write_metadata
from .errors import CohortFormatError
from .pitch import F0_MAX, F0_MIN, F0Contour
from .signal_io import write_contour_csv

CONTOUR_RATE = 44100.0 / 32.0

# Modulation frequency ranges (Hz) the synthetic components are drawn from;
# kept clear of the 6/12/20 Hz analysis band edges.
SYNTH_BANDS = ((1.0, 5.0), (7.0, 11.0), (13.0, 19.0))
COMPONENTS_PER_BAND = 3

# Speakers per (sex, H&Y label, age bracket) following the recorded study.
# The lone 2.5 patient is a woman in her seventies.
TABLE1_CELLS = (
    ("male", 0.0, (50, 59), 4), ("male", 0.0, (60, 69), 6), ("male", 0.0, (70, 79), 6),
    ("male", 0.0, (80, 89), 3), ("male", 0.0, (90, 95), 1),
    ("female", 0.0, (60, 69), 5), ("female", 0.0, (70, 79), 5), ("female", 0.0, (80, 89), 2),
    ("male", 1.0, (70, 79), 2), ("male", 1.0, (80, 89), 2),
    ("female", 1.0, (70, 79), 2),
    ("male", 2.0, (50, 59), 2), ("male", 2.0, (60, 69), 3), ("male", 2.0, (70, 79), 3),
    ("male", 2.0, (80, 89), 3),
    ("female", 2.0, (60, 69), 3), ("female", 2.0, (70, 79), 2),
    ("male", 3.0, (80, 89), 3),
    ("female", 3.0, (60, 69), 1), ("female", 2.5, (70, 79), 1), ("female", 3.0, (80, 89), 1),
    ("male", 4.0, (70, 79), 1),
    ("female", 4.0, (80, 89), 1),
)


@dataclass(frozen=True)
class CellParams:
    base_pitch_hz: float
    rel_range: float
    mix_low: float
    mix_mid: float
    mix_high: float
    pause_rate: float
    duration_s: float

    def validate(self, where=""):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise CohortFormatError(f"{where}{f.name} must be a non-negative number, got {v}")
        if not F0_MIN <= self.base_pitch_hz <= F0_MAX:
            raise CohortFormatError(f"{where}base_pitch_hz outside [{F0_MIN:g}, {F0_MAX:g}]")
        if self.duration_s <= 0:
            raise CohortFormatError(f"{where}duration_s must be positive")
        if abs(self.mix_low + self.mix_mid + self.mix_high - 1.0) > 1e-6:
            raise CohortFormatError(f"{where}energy mix must sum to 1")

    @property
    def mix(self):
        return np.array([self.mix_low, self.mix_mid, self.mix_high])


def _default_cell(sex, stage):
    base = 125.0 if sex == "male" else 205.0
    rel = 0.17 * (1.0 - 0.12 * stage)
    low = 0.84 - 0.09 * stage
    mid = 0.11 + 0.07 * stage
    return CellParams(
        base_pitch_hz=base,
        rel_range=rel,
        mix_low=low,
        mix_mid=mid,
        mix_high=1.0 - low - mid,
        pause_rate=1.0 + 0.15 * stage,
        duration_s=3.3 + 0.3 * stage,
    )


@dataclass
class SynthParams:
    seed: int = 0
    contour_rate: float = CONTOUR_RATE
    noise_rel: float = 0.05
    pause_len_s: float = 0.25
    range_jitter: float = 0.25
    pitch_jitter: float = 0.10
    mix_concentration: float = 15.0
    duration_jitter: float = 0.15
    age_slope_male: float = 0.6
    age_slope_female: float = -0.3
    cells: dict = field(default_factory=dict)

    def __post_init__(self):
        for sex in ("male", "female"):
            for stage in HY_LABELS:
                self.cells.setdefault((sex, stage), _default_cell(sex, stage))

    def cell(self, sex, stage):
        return self.cells[(sex, float(stage))]

    def validate(self):
        for key in ("contour_rate", "mix_concentration"):
            if not getattr(self, key) > 0:
                raise CohortFormatError(f"{key} must be positive")
        for key in ("noise_rel", "pause_len_s", "range_jitter", "pitch_jitter", "duration_jitter"):
            if getattr(self, key) < 0:
                raise CohortFormatError(f"{key} must be non-negative")
        for (sex, stage), cell in self.cells.items():
            cell.validate(f"{sex}.{stage:g}.")
        return self


_GLOBAL_KEYS = {
    "seed": int, "contour_rate": float, "noise_rel": float, "pause_len_s": float,
    "range_jitter": float, "pitch_jitter": float, "mix_concentration": float,
    "duration_jitter": float, "age_slope_male": float, "age_slope_female": float,
}
_CELL_KEYS = tuple(f.name for f in fields(CellParams))


def parse_params(text, name="<params>") -> SynthParams:
    params = SynthParams()
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CohortFormatError(f"{name}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _GLOBAL_KEYS:
                setattr(params, key, _GLOBAL_KEYS[key](value))
                continue
            parts = key.split(".")
            if len(parts) != 3 and len(parts) != 4:
                raise CohortFormatError(f"{name}:{lineno}: unknown key {key!r}")
            sex, fieldname = parts[0], parts[-1]
            stage = float(".".join(parts[1:-1]))
            if sex not in ("male", "female") or stage not in HY_LABELS or fieldname not in _CELL_KEYS:
                raise CohortFormatError(f"{name}:{lineno}: unknown key {key!r}")
            overrides.setdefault((sex, stage), {})[fieldname] = float(value)
        except ValueError as exc:
            if isinstance(exc, CohortFormatError):
                raise
            raise CohortFormatError(f"{name}:{lineno}: bad value for {key}: {value!r}") from exc
    for cell_key, upd in overrides.items():
        params.cells[cell_key] = replace(params.cells[cell_key], **upd)
    return params.validate()


def load_params(path) -> SynthParams:
    with open(path, encoding="utf-8") as fh:
        return parse_params(fh.read(), os.fspath(path))


def format_params(params: SynthParams) -> str:
    lines = ["# synthetic cohort generator settings", ""]
    for key in _GLOBAL_KEYS:
        lines.append(f"{key} = {getattr(params, key)!r}")
    for sex in ("male", "female"):
        lines.append("")
        for stage in HY_LABELS:
            cell = params.cell(sex, stage)
            for fname in _CELL_KEYS:
                lines.append(f"{sex}.{stage:g}.{fname} = {getattr(cell, fname)!r}")
    return "\n".join(lines) + "\n"


def _modulation(rng, t, mix):
    """Unit-variance sum of sinusoids with the given per-band power shares."""
    out = np.zeros_like(t)
    for share, (lo, hi) in zip(mix, SYNTH_BANDS):
        if share <= 0:
            continue
        freqs = rng.uniform(lo, hi, COMPONENTS_PER_BAND)
        phases = rng.uniform(0.0, 2.0 * np.pi, COMPONENTS_PER_BAND)
        amp = np.sqrt(2.0 * share / COMPONENTS_PER_BAND)
        out += amp * np.sin(2.0 * np.pi * np.outer(freqs, t) + phases[:, None]).sum(axis=0)
    return out


def _pause_mask(rng, n, rate, pause_rate, pause_len_s):
    voiced = np.ones(n, dtype=bool)
    duration = n / rate
    count = rng.poisson(pause_rate * duration)
    # Pauses fall inside the utterance, never at its ends.
    margin = int(0.1 * n)
    for _ in range(count):
        length = max(1, int(round(rng.uniform(0.5, 1.5) * pause_len_s * rate)))
        if n - 2 * margin - length <= 0:
            break
        start = int(rng.integers(margin, n - margin - length))
        voiced[start: start + length] = False
    return voiced


def synth_contour(params: SynthParams, speaker_seed, sex="male", stage=0.0, age=70.0, jitter=True) -> F0Contour:
    """Deterministic synthetic contour for one speaker of a given cell.

    With ``jitter`` off the cell settings are used verbatim; otherwise
    speaker-level variability (pitch, range, energy mix, duration) is drawn
    from the speaker seed.
    """
    cell = params.cell(sex, stage)
    rng = np.random.default_rng([int(params.seed), int(speaker_seed)])
    rate = params.contour_rate
    base = cell.base_pitch_hz
    rel = cell.rel_range
    mix = cell.mix
    duration = cell.duration_s
    if jitter:
        slope = params.age_slope_male if sex == "male" else params.age_slope_female
        base = base * np.exp(rng.normal(0.0, params.pitch_jitter)) + slope * (age - 70.0)
        rel = rel * np.exp(rng.normal(0.0, params.range_jitter))
        mix = rng.dirichlet(params.mix_concentration * np.maximum(mix, 1e-3))
        duration = duration * np.exp(rng.normal(0.0, params.duration_jitter))
    n = max(2, int(round(duration * rate)))
    t = np.arange(n) / rate
    mod = _modulation(rng, t, mix)
    noise = rng.normal(0.0, params.noise_rel, n)
    f0 = base + rel * base * (mod + noise)
    f0 = np.clip(f0, F0_MIN, F0_MAX)
    if cell.pause_rate > 0:
        f0[~_pause_mask(rng, n, rate, cell.pause_rate, params.pause_len_s)] = 0.0
    return F0Contour(f0, rate)


def table1_speakers(seed):
    """Speaker records (ids, sexes, ages, labels) matching the study layout."""
    rng = np.random.default_rng([int(seed), 7919])
    speakers = []
    for sex, stage, (lo, hi), count in TABLE1_CELLS:
        for _ in range(count):
            idx = len(speakers) + 1
            prefix = "C" if stage == 0 else "P"
            sid = f"{prefix}{idx:03d}"
            age = round(float(rng.uniform(lo, hi + 1)), 1)
            speakers.append(SpeakerRecord(sid, sex, age, stage, f"contours/{sid}.csv"))
    return speakers


def simulate_cohort(params: SynthParams) -> Cohort:
    speakers = table1_speakers(params.seed)
    cohort = Cohort(speakers)
    for i, s in enumerate(speakers):
        cohort.contours[s.id] = synth_contour(params, i, s.sex, s.hy, s.age)
    return cohort


def write_cohort(cohort: Cohort, out_dir):
    """Write ``metadata.csv`` and one contour CSV per speaker under ``out_dir``."""
    os.makedirs(os.path.join(out_dir, "contours"), exist_ok=True)
    for s in cohort.speakers:
        write_contour_csv(os.path.join(out_dir, s.contour_path), cohort.contours[s.id])
    meta = os.path.join(out_dir, "metadata.csv")
    write_metadata(meta, cohort.speakers)
    return meta
