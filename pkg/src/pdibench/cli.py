"""Command-line entry point.

Subcommands: evaluate (batch per-video records), report (tables and
normalized scores from a results file), synth (render a scene spec into a
bundle), audit (reprojection check on one bundle), validate (schema check).
Verbosity is controlled by the PDI_LOG environment variable.

Exit codes: 0 success / audit pass; 1 audit fail or hard error; 2 partial
evaluation failures; 3 missing evidence for audit.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import os
import sys
from pathlib import Path

import click

from .aggregate import (PdiWeights, build_report, render_report_csv,
                        render_report_markdown)
from .errors import EmptyResults, MissingEvidence, PdiError
from .fidelity import GuardThresholds, audit_reconstruction
from .interchange import load_bundle, load_manifest, validate_bundle
from .pipeline import RunConfig, evaluate_entry, stable_seed
from .synth import load_scene_spec, render_bundle, write_rendered

log = logging.getLogger("pdi")

RESULTS_SCHEMA = "pdibench-results-v1"


def _setup_logging():
    level = os.environ.get("PDI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_weights(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise click.BadParameter("weights must be three comma-separated numbers")
    return PdiWeights(scale=parts[0], traj=parts[1], rigidity=parts[2])


@click.group()
def main():
    _setup_logging()


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--weights", default="0.4,0.4,0.2", show_default=True)
@click.option("--jobs", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--guard-pairs", default=8, show_default=True, type=int)
def evaluate(manifest_path, out_dir, weights, jobs, seed, guard_pairs):
    """Evaluate every video in a manifest; write results.json."""
    config = RunConfig(weights=_parse_weights(weights), seed=seed,
                       jobs=max(1, jobs), guard_pairs=guard_pairs)
    manifest = load_manifest(manifest_path)
    entries = sorted(manifest, key=lambda e: e.video_id)

    records, failures = [], []
    if config.jobs == 1 or len(entries) <= 1:
        outcomes = [evaluate_entry(e, config) for e in entries]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(evaluate_entry, entries,
                                     [config] * len(entries)))
    for record, failure in outcomes:
        if record is not None:
            records.append(record)
        else:
            failures.append(failure)
            log.warning("video %s failed: %s: %s", failure["video_id"],
                        failure["error"], failure["message"])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": RESULTS_SCHEMA,
        "config": {
            "weights": config.weights.as_dict(),
            "seed": config.seed,
            "guard_pairs": config.guard_pairs,
            "thresholds": {"cov_min": config.thresholds.cov_min,
                           "mae_max": config.thresholds.mae_max,
                           "l2_max": config.thresholds.l2_max},
        },
        "videos": sorted(records, key=lambda r: r["video_id"]),
        "failures": sorted(failures, key=lambda f: f["video_id"]),
    }
    (out / "results.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    click.echo(f"evaluated {len(records)} videos, {len(failures)} failures "
               f"-> {out / 'results.json'}")
    if failures:
        sys.exit(2)


@main.command()
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--tau", default=1.0, show_default=True, type=float)
@click.option("--resamples", default=2000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def report(results_path, out_dir, tau, resamples, seed):
    """Build ranking and per-category tables from results.json."""
    doc = json.loads(Path(results_path).read_text())
    records = doc.get("videos", [])
    weights_doc = doc.get("config", {}).get("weights", {})
    weights = PdiWeights(scale=weights_doc.get("scale", 0.4),
                         traj=weights_doc.get("traj", 0.4),
                         rigidity=weights_doc.get("rigidity", 0.2))
    try:
        rep = build_report(records, weights=weights, tau=tau,
                           resamples=resamples, seed=seed)
    except EmptyResults as exc:
        raise click.ClickException(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    (out / "report.md").write_text(render_report_markdown(rep))
    (out / "report.csv").write_text(render_report_csv(rep))
    click.echo(f"report for {len(records)} videos -> {out / 'report.md'}")


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
def synth(spec_path, out_dir, seed):
    """Render a synthetic scene spec into a loadable bundle."""
    try:
        scene = load_scene_spec(spec_path)
        rendered = render_bundle(scene, seed=seed)
    except PdiError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    write_rendered(rendered, out_dir)
    click.echo(f"bundle written to {out_dir}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--cov-min", default=0.60, show_default=True, type=float)
@click.option("--mae-max", default=12.0 / 255.0, show_default=True, type=float)
@click.option("--l2-max", default=25.0 / 255.0, show_default=True, type=float)
@click.option("--pairs", default=8, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def audit(bundle_path, cov_min, mae_max, l2_max, pairs, seed):
    """Reprojection audit of one bundle; exit 0 pass, 1 fail, 3 no evidence."""
    thresholds = GuardThresholds(cov_min=cov_min, mae_max=mae_max, l2_max=l2_max)
    try:
        bundle = load_bundle(bundle_path)
        audits, passed = audit_reconstruction(
            bundle, pair_count=pairs, thresholds=thresholds,
            seed=stable_seed(seed, Path(bundle_path).name))
    except MissingEvidence as exc:
        click.echo(f"missing evidence: {exc}", err=True)
        sys.exit(3)
    except PdiError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    for a in audits:
        click.echo(f"pair ({a.frame_a:3d} -> {a.frame_b:3d})  "
                   f"coverage={a.coverage:.3f}  mae={a.mae:.5f}  "
                   f"l2={a.l2:.5f}  {'pass' if a.passed else 'FAIL'}")
    click.echo(f"overall: {'pass' if passed else 'FAIL'}")
    sys.exit(0 if passed else 1)


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
def validate(bundle_path):
    """Schema check of a bundle directory."""
    errors, warnings = validate_bundle(bundle_path)
    for w in warnings:
        click.echo(f"warning: {w}")
    for e in errors:
        click.echo(f"error: {e}", err=True)
    if errors:
        sys.exit(1)
    click.echo(f"valid bundle ({len(warnings)} warnings)")


if __name__ == "__main__":
    main()
