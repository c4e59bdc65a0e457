"""Score synthesis, normalization and report building.

Per-video component residuals combine into the composite index

    PDI = w_scale * RMSE(scale) + w_traj * RMSE(traj) + w_rigidity * rigidity

with weights summing to one (default 0.4, 0.4, 0.2). Per model the report
carries the mean (headline) and median PDI, a bootstrap CI of the mean, a
population standard deviation, a Tukey-fence outlier ratio, and a [0, 100]
score normalized against the robust statistics of the ground-truth subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyResults, InsufficientGt, TooFewValues

DEFAULT_WEIGHTS = (0.4, 0.4, 0.2)
MAD_CONSISTENCY = 1.4826
NORMALIZE_EPS = 1e-9
DEFAULT_TAU = 1.0
DEFAULT_RESAMPLES = 2000
COMPONENTS = ("scale", "traj", "rigidity")


@dataclass(frozen=True)
class PdiWeights:
    scale: float = DEFAULT_WEIGHTS[0]
    traj: float = DEFAULT_WEIGHTS[1]
    rigidity: float = DEFAULT_WEIGHTS[2]

    def __post_init__(self):
        vals = (self.scale, self.traj, self.rigidity)
        if any(w < 0 for w in vals):
            raise ValueError(f"weights must be non-negative, got {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(vals)}")

    def as_dict(self):
        return {"scale": self.scale, "traj": self.traj, "rigidity": self.rigidity}


def synthesize_pdi(components, weights=PdiWeights()):
    """Weighted sum of the three component residuals."""
    eps_scale, eps_traj, eps_rigidity = components
    return (weights.scale * eps_scale + weights.traj * eps_traj
            + weights.rigidity * eps_rigidity)


def renormalized_weights(weights, available):
    """Restrict weights to the available components and rescale to sum 1.

    ``available`` is an iterable of component names. Used for degraded
    videos where a component cannot be computed.
    """
    base = weights.as_dict()
    kept = {k: base[k] for k in COMPONENTS if k in available}
    total = sum(kept.values())
    if total <= 0:
        # all remaining weight mass was on unavailable components
        return {k: 1.0 / len(kept) for k in kept} if kept else {}
    return {k: v / total for k, v in kept.items()}


@dataclass(frozen=True)
class GtAnchor:
    medians: dict
    mads: dict


def gt_anchor(gt_components):
    """Per-component median and unscaled MAD over the ground-truth subset.

    ``gt_components`` is a list of dicts with any of the component keys
    plus "pdi". Raises InsufficientGt with fewer than two videos.
    """
    if len(gt_components) < 2:
        raise InsufficientGt(f"need >= 2 ground-truth videos, got {len(gt_components)}")
    medians, mads = {}, {}
    keys = set()
    for rec in gt_components:
        keys.update(k for k, v in rec.items() if v is not None)
    for key in sorted(keys):
        vals = np.array([rec[key] for rec in gt_components if rec.get(key) is not None])
        med = float(np.median(vals))
        medians[key] = med
        mads[key] = float(np.median(np.abs(vals - med)))
    return GtAnchor(medians=medians, mads=mads)


def normalize_score(raw, anchor, tau=DEFAULT_TAU):
    """Map a raw residual to [0, 100] against a (median, MAD) anchor.

    The robust z-score is clamped at zero (matching or beating the
    ground-truth median scores 100) and passed through a scaled
    half-logistic decay.
    """
    median, mad = anchor
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    z = max(0.0, (raw - median) / (MAD_CONSISTENCY * mad + NORMALIZE_EPS))
    half_logistic = 2.0 / (1.0 + np.exp(-z / tau)) - 1.0
    return float(100.0 * (1.0 - half_logistic))


def bootstrap_ci(values, resamples=DEFAULT_RESAMPLES, level=0.95, seed=0):
    """Percentile bootstrap interval for the mean; deterministic per seed."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise TooFewValues("bootstrap needs at least one value")
    if resamples < 1000:
        raise ValueError(f"resamples must be >= 1000, got {resamples}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, vals.size, size=(resamples, vals.size))
    means = vals[idx].mean(axis=1)
    lo_q = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [lo_q, 100.0 - lo_q])
    return float(lo), float(hi)


def outlier_ratio(values):
    """Fraction of values above the Tukey fence Q3 + 1.5 * IQR."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size < 4:
        raise TooFewValues(f"outlier ratio needs >= 4 values, got {vals.size}")
    q1, q3 = np.percentile(vals, [25.0, 75.0])
    fence = q3 + 1.5 * (q3 - q1)
    return float(np.mean(vals > fence))


# --------------------------------------------------------------------------
# Report building
# --------------------------------------------------------------------------

def _stable_seed(root_seed, label):
    """Derive a per-group seed that is independent of evaluation order."""
    acc = np.uint64(root_seed)
    for ch in label:
        acc = np.uint64((int(acc) * 1000003 + ord(ch)) % (2 ** 63))
    return int(acc)


def _component_means(records):
    out = {}
    for comp in COMPONENTS:
        vals = [r["components"][comp] for r in records
                if r["components"][comp] is not None]
        out[comp] = float(np.mean(vals)) if vals else None
    return out


def build_report(records, weights=PdiWeights(), tau=DEFAULT_TAU,
                 resamples=DEFAULT_RESAMPLES, seed=0):
    """Aggregate per-video records into per-model and per-category tables.

    ``records`` are the per-video dicts produced by the evaluation
    pipeline. Returns a JSON-serialisable report dict; rankings are
    ascending in mean PDI.
    """
    if not records:
        raise EmptyResults("no evaluated videos to report on")

    by_model = {}
    for rec in sorted(records, key=lambda r: r["video_id"]):
        by_model.setdefault(rec["source_model"], []).append(rec)

    gt_records = [r for r in records if r.get("is_ground_truth")]
    anchor = None
    if len(gt_records) >= 2:
        anchor = gt_anchor([
            {**{c: r["components"][c] for c in COMPONENTS}, "pdi": r["pdi"]}
            for r in gt_records])

    models = {}
    for model, recs in by_model.items():
        pdis = np.array([r["pdi"] for r in recs])
        mean_pdi = float(np.mean(pdis))
        entry = {
            "n_videos": len(recs),
            "pdi_mean": mean_pdi,
            "pdi_median": float(np.median(pdis)),
            "pdi_std": float(np.std(pdis)),
            "ci95": list(bootstrap_ci(pdis, resamples=resamples,
                                      seed=_stable_seed(seed, model))),
            "components": _component_means(recs),
            "outlier_ratio": (outlier_ratio(pdis) if len(pdis) >= 4 else None),
            "degraded_videos": sum(1 for r in recs if r.get("degraded")),
            "normalized_score": None,
        }
        if anchor is not None and "pdi" in anchor.medians:
            entry["normalized_score"] = normalize_score(
                mean_pdi, (anchor.medians["pdi"], anchor.mads["pdi"]), tau=tau)
            entry["normalized_components"] = {
                comp: (normalize_score(entry["components"][comp],
                                       (anchor.medians[comp], anchor.mads[comp]),
                                       tau=tau)
                       if entry["components"][comp] is not None
                       and comp in anchor.medians else None)
                for comp in COMPONENTS}
        models[model] = entry

    ranking = sorted(models, key=lambda m: (models[m]["pdi_mean"], m))

    categories = {}
    for rec in records:
        categories.setdefault(rec["category"], {}).setdefault(
            rec["source_model"], []).append(rec)
    category_tables = {}
    for cat, per_model in sorted(categories.items()):
        rows = {}
        for model, recs in per_model.items():
            pdis = [r["pdi"] for r in recs]
            rows[model] = {
                "n_videos": len(recs),
                "pdi_mean": float(np.mean(pdis)),
                "components": _component_means(recs),
            }
        category_tables[cat] = {
            "rows": rows,
            "ranking": sorted(rows, key=lambda m: (rows[m]["pdi_mean"], m)),
        }

    return {
        "weights": weights.as_dict(),
        "tau": tau,
        "models": models,
        "ranking": ranking,
        "categories": category_tables,
        "gt_anchor": (None if anchor is None
                      else {"medians": anchor.medians, "mads": anchor.mads}),
    }


def _fmt(value, width=8, digits=4):
    if value is None:
        return " " * (width - 1) + "-"
    return f"{value:{width}.{digits}f}"


def render_report_markdown(report):
    """Human-readable tables for the report dict."""
    lines = ["# Physical-consistency report", ""]
    w = report["weights"]
    lines.append(f"Weights: scale={w['scale']:g}, traj={w['traj']:g}, "
                 f"rigidity={w['rigidity']:g}; tau={report['tau']:g}")
    lines.append("")
    lines.append("## Ranking")
    lines.append("")
    lines.append("| Rank | Model | PDI | CI95 | Scale | Traj | Rigid | Std | Outlier | Score |")
    lines.append("|---|---|---|---|---|---|---|---|---|---|")
    for rank, model in enumerate(report["ranking"], start=1):
        e = report["models"][model]
        comp = e["components"]
        ci = f"[{e['ci95'][0]:.4f}, {e['ci95'][1]:.4f}]"
        outlier = ("-" if e["outlier_ratio"] is None
                   else f"{100 * e['outlier_ratio']:.1f}%")
        score = ("-" if e["normalized_score"] is None
                 else f"{e['normalized_score']:.1f}")
        lines.append(
            f"| {rank} | {model} | {e['pdi_mean']:.4f} | {ci} "
            f"| {_fmt(comp['scale'], 1)} | {_fmt(comp['traj'], 1)} "
            f"| {_fmt(comp['rigidity'], 1)} | {e['pdi_std']:.4f} "
            f"| {outlier} | {score} |")
    for cat, table in report["categories"].items():
        lines.append("")
        lines.append(f"## Category: {cat}")
        lines.append("")
        lines.append("| Model | PDI | Scale | Traj | Rigid | n |")
        lines.append("|---|---|---|---|---|---|")
        for model in table["ranking"]:
            row = table["rows"][model]
            comp = row["components"]
            lines.append(
                f"| {model} | {row['pdi_mean']:.4f} | {_fmt(comp['scale'], 1)} "
                f"| {_fmt(comp['traj'], 1)} | {_fmt(comp['rigidity'], 1)} "
                f"| {row['n_videos']} |")
    return "\n".join(lines) + "\n"


def render_report_csv(report):
    """Flat CSV of the per-model ranking."""
    rows = ["rank,model,pdi_mean,pdi_median,ci_lo,ci_hi,scale,traj,rigidity,"
            "std,outlier_ratio,normalized_score,n_videos"]
    for rank, model in enumerate(report["ranking"], start=1):
        e = report["models"][model]
        comp = e["components"]

        def cell(v):
            return "" if v is None else repr(float(v))

        rows.append(",".join([
            str(rank), model, repr(e["pdi_mean"]), repr(e["pdi_median"]),
            repr(e["ci95"][0]), repr(e["ci95"][1]),
            cell(comp["scale"]), cell(comp["traj"]), cell(comp["rigidity"]),
            repr(e["pdi_std"]), cell(e["outlier_ratio"]),
            cell(e["normalized_score"]), str(e["n_videos"])]))
    return "\n".join(rows) + "\n"
