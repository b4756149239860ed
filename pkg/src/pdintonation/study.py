"""Study replication: correlation table, regression, group tests and
detection curves over a described cohort."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .cohort import DESCRIPTOR_NAMES, Cohort
from .errors import DegenerateDataError
from .stats import fit_regression, roc_auc, spearman, wilcoxon_ranksum

COVARIATES = ("age", "hy")
STRATA = ("male", "female", "all")
MODEL_FEATURES = ("lfer", "mfer", "rel_std")
MIN_STRATUM = 3


@dataclass
class StatReport:
    """JSON-serialisable summary plus the curve arrays behind the plot files."""

    data: dict
    curves: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=False) + "\n"


def _stratum(speakers, name):
    if name == "all":
        return list(speakers)
    return [s for s in speakers if s.sex == name]


def _correlation_cell(xs, ys):
    n = len(xs)
    if n < MIN_STRATUM:
        return {"rho": None, "p": None, "n": n, "unavailable": f"fewer than {MIN_STRATUM} speakers"}
    try:
        r = spearman(xs, ys)
    except DegenerateDataError as exc:
        return {"rho": None, "p": None, "n": n, "unavailable": str(exc)}
    return {"rho": r.rho_s, "p": r.p_value, "n": r.n}


def correlation_table(cohort: Cohort, speakers):
    table = {}
    for name in DESCRIPTOR_NAMES:
        row = {}
        for cov in COVARIATES:
            row[cov] = {}
            for stratum in STRATA:
                group = _stratum(speakers, stratum)
                xs = [cohort.features[s.id].value(name) for s in group]
                ys = [getattr(s, cov) for s in group]
                row[cov][stratum] = _correlation_cell(xs, ys)
        table[name] = row
    return table


def _design(cohort, speakers):
    return np.array([[cohort.features[s.id].value(f) for f in MODEL_FEATURES] for s in speakers])


def _fit(cohort, speakers):
    x = _design(cohort, speakers)
    y = np.array([s.hy for s in speakers])
    return fit_regression(x, y, tuple(f"log_{f}" for f in MODEL_FEATURES))


def _model_entry(model, n):
    names = ("intercept",) + model.feature_names
    return {
        "n": n,
        "coefficients": {k: float(v) for k, v in zip(names, model.coefficients)},
        "r_squared": model.r_squared,
    }


def _loo_scores(cohort, speakers):
    scores = np.empty(len(speakers))
    x = _design(cohort, speakers)
    for i in range(len(speakers)):
        rest = speakers[:i] + speakers[i + 1:]
        model = _fit(cohort, rest)
        scores[i] = model.predict(x[i: i + 1])[0]
    return scores


def _scores(cohort, speakers, models, per_sex, loo):
    """Model output for each speaker from the pooled or the per-sex fits."""
    scores = {}
    groups = [("male", _stratum(speakers, "male")), ("female", _stratum(speakers, "female"))] if per_sex else [("all", speakers)]
    for stratum, group in groups:
        if not group:
            continue
        if models.get(stratum) is None:
            return None
        if loo:
            vals = _loo_scores(cohort, group)
        else:
            vals = models[stratum].predict(_design(cohort, group))
        for s, v in zip(group, vals):
            scores[s.id] = float(v)
    return scores


def _label_key(hy):
    return f"{hy:g}"


def wilcoxon_grid(speakers, scores, notices):
    groups = {}
    for s in speakers:
        groups.setdefault(s.hy, []).append(scores[s.id])
    labels = []
    for hy in sorted(groups):
        if len(groups[hy]) < 2:
            notices.append(f"H&Y group {_label_key(hy)} skipped in group tests: only one speaker")
            continue
        labels.append(hy)
    grid = {}
    for i, a in enumerate(labels):
        row = {}
        for b in labels[i + 1:]:
            row[_label_key(b)] = wilcoxon_ranksum(groups[a], groups[b])
        if row:
            grid[_label_key(a)] = row
    return {"labels": [_label_key(h) for h in labels], "p_values": grid}


def phonation_summary(cohort, speakers):
    out = {}
    for group_name, is_patient in (("patients", True), ("controls", False)):
        out[group_name] = {}
        for stratum in STRATA:
            members = [s for s in _stratum(speakers, stratum) if s.is_patient == is_patient]
            entry = {"n": len(members)}
            for key in ("task_duration_s", "phonation_time_s", "phonation_ratio"):
                vals = np.array([getattr(cohort.features[s.id].phonation, key) for s in members])
                entry[key] = (
                    {"mean": float(vals.mean()), "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0}
                    if vals.size else None
                )
            out[group_name][stratum] = entry
    return out


def replicate_study(cohort: Cohort, per_sex_scores=False, loo=False, alpha=0.01, smooth_window=5) -> StatReport:
    """Run every analysis of the study on a cohort with computed features.

    Speakers are processed in id order so the report does not depend on
    the order of the metadata rows. Cells that cannot be computed are
    reported as unavailable rather than raising.
    """
    cohort.compute_features()
    speakers = sorted(cohort.speakers, key=lambda s: s.id)
    notices = []
    data = {
        "n_speakers": len(speakers),
        "settings": {
            "model_features": list(MODEL_FEATURES),
            "scores": "per-sex models" if per_sex_scores else "pooled model",
            "evaluation": "leave-one-out (extension)" if loo else "resubstitution",
            "alpha": alpha,
            "smooth_window": smooth_window,
        },
    }
    data["correlations"] = correlation_table(cohort, speakers)

    models, regression = {}, {}
    for stratum in STRATA:
        group = _stratum(speakers, stratum)
        try:
            models[stratum] = _fit(cohort, group)
            regression[stratum] = _model_entry(models[stratum], len(group))
        except (DegenerateDataError, ValueError) as exc:
            models[stratum] = None
            regression[stratum] = {"n": len(group), "unavailable": str(exc)}
    data["regression"] = regression

    curves = {}
    scores = _scores(cohort, speakers, models, per_sex_scores, loo) if speakers else None
    both = any(s.is_patient for s in speakers) and not all(s.is_patient for s in speakers)
    if scores is None:
        reason = "no regression model" if both else "needs both patients and controls"
        data["wilcoxon_grid"] = {"unavailable": reason}
        data["detection"] = {"unavailable": reason}
    else:
        data["wilcoxon_grid"] = wilcoxon_grid(speakers, scores, notices)
        pos = [scores[s.id] for s in speakers if s.is_patient]
        neg = [scores[s.id] for s in speakers if not s.is_patient]
        if not both:
            data["detection"] = {"unavailable": "needs both patients and controls"}
        else:
            det = roc_auc(pos, neg, smooth_window=smooth_window, alpha=alpha)
            data["detection"] = {
                "n_patients": len(pos),
                "n_controls": len(neg),
                "eer": det.eer,
                "eer_pessimistic": det.eer_pessimistic,
                "auc": det.auc,
                "band_epsilon_patients": det.band_epsilon_pos,
                "band_epsilon_controls": det.band_epsilon_neg,
                "curves": dict(CURVE_FILES),
            }
            curves = _curve_series(det)
    data["phonation"] = phonation_summary(cohort, speakers)
    data["speakers"] = [
        {"id": s.id, "sex": s.sex, "age": s.age, "hy": s.hy, **cohort.features[s.id].row(),
         "model_output": None if scores is None else scores.get(s.id)}
        for s in speakers
    ]
    data["notices"] = notices
    return StatReport(data, curves)


CURVE_FILES = {
    "cdf_patients": "cdf_patients.csv",
    "ccdf_controls": "ccdf_controls.csv",
    "roc": "roc.csv",
    "roc_smoothed": "roc_smoothed.csv",
}


def _curve_series(det):
    """x, y, y_lo, y_hi columns for each plot."""
    eps_p, eps_n = det.band_epsilon_pos, det.band_epsilon_neg
    cdf = det.ecdf_pos
    ccdf_y = 1.0 - det.ecdf_neg[:, 1]
    ccdf = np.column_stack([
        det.ecdf_neg[:, 0], ccdf_y, np.maximum(ccdf_y - eps_n, 0.0), np.minimum(ccdf_y + eps_n, 1.0),
    ])
    roc = det.roc_points
    # TPR inherits the patients' ECDF band.
    roc_band = np.column_stack([roc, np.maximum(roc[:, 1] - eps_p, 0.0), np.minimum(roc[:, 1] + eps_p, 1.0)])
    sm = det.roc_smoothed
    sm_band = np.column_stack([sm, sm[:, 1], sm[:, 1]])
    return {"cdf_patients": cdf, "ccdf_controls": ccdf, "roc": roc_band, "roc_smoothed": sm_band}


def write_series_csv(path, arr):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,y_lo,y_hi\n")
        for row in arr:
            fh.write(",".join(f"{v:.6f}" for v in row) + "\n")


def _fmt_cell(cell):
    if cell.get("rho") is None:
        return "n/a"
    return f"{cell['rho']:.4f} ({cell['p']:.4f})"


def write_report_files(report: StatReport, out_dir):
    """Write report.json plus CSV tables and plot series into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    data = report.data
    paths = {}
    p = os.path.join(out_dir, "report.json")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    paths["report"] = p

    p = os.path.join(out_dir, "correlations.csv")
    cols = [(cov, st) for cov in COVARIATES for st in STRATA]
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("descriptor," + ",".join(f"{cov}_{st}" for cov, st in cols) + "\n")
        for name, row in data["correlations"].items():
            fh.write(name + "," + ",".join(_fmt_cell(row[cov][st]) for cov, st in cols) + "\n")
    paths["correlations"] = p

    p = os.path.join(out_dir, "regression.csv")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        names = ["intercept"] + [f"log_{f}" for f in MODEL_FEATURES]
        fh.write("stratum,n," + ",".join(names) + ",r_squared\n")
        for st, entry in data["regression"].items():
            if "coefficients" in entry:
                vals = [f"{entry['coefficients'][k]:.6f}" for k in names] + [f"{entry['r_squared']:.6f}"]
            else:
                vals = [""] * (len(names) + 1)
            fh.write(f"{st},{entry['n']}," + ",".join(vals) + "\n")
    paths["regression"] = p

    grid = data.get("wilcoxon_grid", {})
    if "labels" in grid:
        p = os.path.join(out_dir, "wilcoxon.csv")
        labels = grid["labels"]
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("hy," + ",".join(labels[1:]) + "\n")
            for a in labels[:-1]:
                row = grid["p_values"].get(a, {})
                fh.write(a + "," + ",".join(f"{row[b]:.6f}" if b in row else "" for b in labels[1:]) + "\n")
        paths["wilcoxon"] = p

    p = os.path.join(out_dir, "descriptors.csv")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        write_descriptor_rows(fh, data["speakers"])
    paths["descriptors"] = p

    for key, arr in report.curves.items():
        p = os.path.join(out_dir, CURVE_FILES[key])
        write_series_csv(p, arr)
        paths[key] = p
    return paths


DESCRIPTOR_ROW = (
    "speaker_id", "mean_hz", "min_hz", "max_hz", "std_hz", "rel_std", "voiced_count",
    "task_duration_s", "phonation_time_s", "phonation_ratio",
)


def write_descriptor_rows(fh, rows, with_ratios=True):
    cols = DESCRIPTOR_ROW + (("lfer", "mfer", "hfer") if with_ratios else ())
    fh.write(",".join(cols) + "\n")
    for r in rows:
        vals = []
        for c in cols:
            v = r["id"] if c == "speaker_id" else r[c]
            vals.append(str(v) if isinstance(v, (str, int)) else f"{v:.6f}")
        fh.write(",".join(vals) + "\n")


def format_report(data) -> str:
    """Plain-text tables: phonation times, correlations, regression, group tests."""
    out = []
    out.append("Reading task duration and phonation time")
    out.append(f"{'group':<26}{'duration (s)':>18}{'phonation (s)':>18}{'phonation (%)':>18}")
    for group in ("patients", "controls"):
        for st in STRATA:
            e = data["phonation"][group][st]
            label = f"{group} ({st}, n={e['n']})"
            if e["task_duration_s"] is None:
                out.append(f"{label:<26}{'n/a':>18}{'n/a':>18}{'n/a':>18}")
                continue
            d, p, r = e["task_duration_s"], e["phonation_time_s"], e["phonation_ratio"]
            out.append(
                f"{label:<26}{d['mean']:>9.2f} ± {d['std']:<6.2f}{p['mean']:>9.2f} ± {p['std']:<6.2f}"
                f"{100 * r['mean']:>9.1f} ± {100 * r['std']:<6.1f}"
            )
    out.append("")
    out.append("Spearman correlations, rho (one-sided p)")
    cols = [(cov, st) for cov in COVARIATES for st in STRATA]
    head = f"{'':<10}" + "".join(f"{(cov + ' ' + st):>18}" for cov, st in cols)
    out.append(head)
    for name, row in data["correlations"].items():
        out.append(f"{name:<10}" + "".join(f"{_fmt_cell(row[cov][st]):>18}" for cov, st in cols))
    out.append("")
    out.append("Regression of H&Y on " + ", ".join(f"log {f}" for f in MODEL_FEATURES))
    for st, e in data["regression"].items():
        if "r_squared" in e:
            coefs = ", ".join(f"{k}={v:.4f}" for k, v in e["coefficients"].items())
            out.append(f"  {st:<7} n={e['n']:<3} R^2={e['r_squared']:.3f}  {coefs}")
        else:
            out.append(f"  {st:<7} n={e['n']:<3} unavailable: {e['unavailable']}")
    out.append("")
    grid = data.get("wilcoxon_grid", {})
    out.append("Wilcoxon rank-sum p-values between H&Y groups of model outputs")
    if "labels" in grid:
        labels = grid["labels"]
        out.append(f"{'H&Y':>6}" + "".join(f"{b:>9}" for b in labels[1:]))
        for a in labels[:-1]:
            row = grid["p_values"].get(a, {})
            out.append(f"{a:>6}" + "".join(f"{row[b]:>9.4f}" if b in row else f"{'':>9}" for b in labels[1:]))
    else:
        out.append("  unavailable")
    out.append("")
    det = data.get("detection", {})
    out.append("Detection (patients vs controls)")
    if "auc" in det:
        out.append(f"  EER = {det['eer']:.3f}   EER (band) = {det['eer_pessimistic']:.3f}   AUC = {det['auc']:.3f}")
    else:
        out.append(f"  unavailable: {det.get('unavailable', '')}")
    for note in data.get("notices", []):
        out.append(f"note: {note}")
    return "\n".join(out) + "\n"
