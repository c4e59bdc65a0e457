"""pdi-export: run the perception stack on a video and write a bundle."""

from __future__ import annotations

import logging
import os
import shutil
import subprocess
import sys

import click

from .config import AdapterConfig, load_config
from .errors import ExportError
from .export import export_bundle


def _validate_via_cli(bundle_dir):
    """Invoke the auditing engine's own validator (external interface)."""
    exe = shutil.which("pdi")
    cmd = [exe, "validate", "--bundle", str(bundle_dir)] if exe else \
        [sys.executable, "-m", "pdibench.cli", "validate", "--bundle", str(bundle_dir)]
    return subprocess.run(cmd, capture_output=True, text=True)


@click.command()
@click.option("--video", "video_path", required=True, type=click.Path(exists=True),
              help="Video file or directory of frame images.")
@click.option("--query", "text_query", required=True,
              help="Description of the audit subject.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--backend", default="auto", show_default=True,
              type=click.Choice(["auto", "classical", "neural"]))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON config; CLI flags override its fields.")
@click.option("--fps", default=24.0, show_default=True,
              help="Frame rate assumed for frame-directory inputs.")
@click.option("--category", default="uncategorized", show_default=True)
@click.option("--source-model", default="unknown", show_default=True)
@click.option("--validate/--no-validate", default=True, show_default=True,
              help="Run `pdi validate` on the exported bundle.")
def main(video_path, text_query, out_dir, backend, config_path, fps,
         category, source_model, validate):
    logging.basicConfig(
        level=getattr(logging, os.environ.get("PDI_LOG", "WARNING").upper(),
                      logging.WARNING))
    try:
        if config_path:
            config = load_config(config_path, text_query=text_query,
                                 backend=backend, fps=fps, category=category,
                                 source_model=source_model)
        else:
            config = AdapterConfig(text_query=text_query, backend=backend,
                                   fps=fps, category=category,
                                   source_model=source_model)
        bundle = export_bundle(video_path, out_dir, config)
    except (ExportError, ValueError) as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    click.echo(f"bundle written to {bundle}")
    if validate:
        res = _validate_via_cli(bundle)
        click.echo(res.stdout.strip())
        if res.returncode != 0:
            raise click.ClickException("exported bundle failed validation")


if __name__ == "__main__":
    main()
