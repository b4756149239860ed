"""Speaker metadata, cohort loading and per-speaker feature extraction."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .contour import ContourDescriptors, PhonationMetrics, descriptors, phonation_metrics
from .errors import CohortFormatError
from .modspec import BandRatios, contour_band_ratios
from .pitch import F0Contour
from .signal_io import read_contour_csv

HY_LABELS = (0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)
SEX_TOKENS = {"M": "male", "F": "female"}
METADATA_HEADER = ("id", "sex", "age", "hy", "contour_path")

# Descriptor rows of the correlation table, in presentation order.
DESCRIPTOR_NAMES = ("mean_hz", "min_hz", "max_hz", "std_hz", "rel_std", "lfer", "mfer", "hfer")


@dataclass(frozen=True)
class SpeakerRecord:
    id: str
    sex: str
    age: float
    hy: float
    contour_path: str = ""

    def __post_init__(self):
        if self.sex not in ("male", "female"):
            raise ValueError(f"sex must be 'male' or 'female', got {self.sex!r}")
        if float(self.hy) not in HY_LABELS:
            raise ValueError(f"H&Y label {self.hy} not in {HY_LABELS}")
        if not self.age > 0:
            raise ValueError(f"age must be positive, got {self.age}")

    @property
    def is_patient(self):
        return self.hy > 0


@dataclass(frozen=True)
class SpeakerFeatures:
    descriptors: ContourDescriptors
    ratios: BandRatios
    phonation: PhonationMetrics

    def value(self, name):
        if name in ("lfer", "mfer", "hfer"):
            return getattr(self.ratios, name)
        return getattr(self.descriptors, name)

    def row(self):
        out = self.descriptors.as_dict()
        out.update(self.phonation.as_dict())
        out.update(self.ratios.as_dict())
        return out


def speaker_features(c: F0Contour) -> SpeakerFeatures:
    return SpeakerFeatures(descriptors(c), contour_band_ratios(c), phonation_metrics(c))


@dataclass
class Cohort:
    speakers: list = field(default_factory=list)
    contours: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.id for s in self.speakers]
        if len(set(ids)) != len(ids):
            raise CohortFormatError("speaker ids must be unique")

    def __len__(self):
        return len(self.speakers)

    def compute_features(self, jobs: Optional[int] = None):
        """Describe every speaker's contour; results keep speaker order."""
        todo = [s for s in self.speakers if s.id not in self.features]
        for s in todo:
            if s.id not in self.contours:
                raise CohortFormatError(f"speaker {s.id}: no contour loaded")

        def work(s):
            try:
                return speaker_features(self.contours[s.id])
            except ValueError as exc:
                raise ValueError(f"speaker {s.id}: {exc}") from exc

        if jobs and jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(work, todo))
        else:
            results = [work(s) for s in todo]
        for s, feats in zip(todo, results):
            self.features[s.id] = feats
        return self


def _parse_row(row, lineno, name):
    if len(row) != len(METADATA_HEADER):
        raise CohortFormatError(f"{name}:{lineno}: expected {len(METADATA_HEADER)} fields, got {len(row)}")
    sid, sex, age, hy, path = (f.strip() for f in row)
    if not sid:
        raise CohortFormatError(f"{name}:{lineno}: empty speaker id")
    if sex not in SEX_TOKENS:
        raise CohortFormatError(f"{name}:{lineno}: unknown sex token {sex!r} (expected M or F)")
    try:
        age_v, hy_v = float(age), float(hy)
    except ValueError as exc:
        raise CohortFormatError(f"{name}:{lineno}: {exc}") from exc
    if hy_v not in HY_LABELS:
        raise CohortFormatError(f"{name}:{lineno}: H&Y label {hy} outside {HY_LABELS}")
    if not age_v > 0:
        raise CohortFormatError(f"{name}:{lineno}: age must be positive")
    return SpeakerRecord(sid, SEX_TOKENS[sex], age_v, hy_v, path)


def load_cohort(metadata_path, contour_dir=None, eager=True, jobs=None) -> Cohort:
    """Read ``id,sex,age,hy,contour_path`` metadata and the referenced contours.

    Relative contour paths resolve against ``contour_dir`` (default: the
    metadata file's directory).
    """
    name = os.fspath(metadata_path)
    if contour_dir is None:
        contour_dir = os.path.dirname(os.path.abspath(name))
    with open(metadata_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != METADATA_HEADER:
            raise CohortFormatError(f"{name}:1: expected header {','.join(METADATA_HEADER)}")
        records = [_parse_row(row, lineno, name) for lineno, row in enumerate(reader, start=2) if row]
    cohort = Cohort(records)
    for rec in records:
        path = rec.contour_path
        if not os.path.isabs(path):
            path = os.path.join(contour_dir, path)
        if not os.path.isfile(path):
            raise FileNotFoundError(f"speaker {rec.id}: contour file {path} not found")
        cohort.contours[rec.id] = read_contour_csv(path)
    if eager:
        cohort.compute_features(jobs)
    return cohort


def write_metadata(path, speakers):
    inv = {v: k for k, v in SEX_TOKENS.items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(METADATA_HEADER) + "\n")
        for s in speakers:
            fh.write(f"{s.id},{inv[s.sex]},{s.age:g},{s.hy:g},{s.contour_path}\n")
