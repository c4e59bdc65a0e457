"""Conformance: exported bundles must satisfy the auditing engine's own
schema validator and evaluate end to end, touching the engine only
through its CLI and file formats."""

import json
import os
import subprocess
import sys

import pytest


def _run(cmd, **kw):
    return subprocess.run(cmd, capture_output=True, text=True, **kw)


def _export(clip_dir, out_dir, *extra):
    return _run([sys.executable, "-m", "pdi_adapter.cli",
                 "--video", str(clip_dir), "--query", "bright textured box",
                 "--out", str(out_dir), "--backend", "classical",
                 "--source-model", "sample", "--category", "dynamic_tracking",
                 *extra])


def _pdi(*args):
    return _run([sys.executable, "-m", "pdibench.cli", *args])


@pytest.fixture(scope="module")
def exported_bundle(tmp_path_factory, request):
    clip_dir = tmp_path_factory.mktemp("clip") / "frames"
    sys.path.insert(0, os.path.dirname(__file__))
    from conftest import make_clip
    make_clip(clip_dir)
    out = tmp_path_factory.mktemp("export") / "bundle"
    res = _export(clip_dir, out)
    assert res.returncode == 0, res.stderr + res.stdout
    return out


class TestValidateConformance:
    def test_export_passes_validate_with_zero_warnings(self, exported_bundle):
        res = _pdi("validate", "--bundle", str(exported_bundle))
        assert res.returncode == 0, res.stderr
        assert "valid bundle (0 warnings)" in res.stdout
        assert "warning" not in res.stdout.split("valid bundle")[0]

    def test_layout_complete(self, exported_bundle):
        assert (exported_bundle / "meta.json").is_file()
        assert (exported_bundle / "tracks.csv").is_file()
        assert (exported_bundle / "masks" / "000000.png").is_file()
        meta = json.loads((exported_bundle / "meta.json").read_text())
        assert meta["T"] == 72
        assert meta["fps"] == 24.0


class TestEvaluateRoundTrip:
    def test_clip_evaluates_without_error(self, exported_bundle, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"videos": [
            {"video_id": "sample0", "path": str(exported_bundle),
             "category": "dynamic_tracking", "source_model": "sample"}]}))
        out = tmp_path / "run"
        res = _pdi("evaluate", "--manifest", str(manifest), "--out", str(out))
        assert res.returncode == 0, res.stderr + res.stdout
        doc = json.loads((out / "results.json").read_text())
        assert doc["failures"] == []
        record = doc["videos"][0]
        # 2D-only evidence: rigidity carries the whole weight
        assert record["rigidity_strategy"] == "pairwise2d"
        assert record["components"]["scale"] is None
        assert record["components"]["traj"] is None
        assert record["weights_used"] == {"rigidity": 1.0}
        assert record["pdi"] >= 0.0

    def test_report_builds_from_the_record(self, exported_bundle, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"videos": [
            {"video_id": "sample0", "path": str(exported_bundle),
             "category": "dynamic_tracking", "source_model": "sample"}]}))
        out = tmp_path / "run"
        assert _pdi("evaluate", "--manifest", str(manifest),
                    "--out", str(out)).returncode == 0
        res = _pdi("report", "--results", str(out / "results.json"),
                   "--out", str(out), "--resamples", "1000")
        assert res.returncode == 0, res.stderr
        assert (out / "report.md").is_file()


class TestNeuralContract:
    def test_neural_backend_unavailable_fails_loudly(self, tmp_path, monkeypatch):
        sys.path.insert(0, os.path.dirname(__file__))
        from conftest import make_clip
        clip_dir = tmp_path / "frames"
        make_clip(clip_dir, t_total=6)
        env = dict(os.environ, HF_HUB_OFFLINE="1", TRANSFORMERS_OFFLINE="1")
        res = subprocess.run(
            [sys.executable, "-m", "pdi_adapter.cli", "--video", str(clip_dir),
             "--query", "box", "--out", str(tmp_path / "out"),
             "--backend", "neural"],
            capture_output=True, text=True, env=env)
        assert res.returncode != 0
        assert "ModelUnavailable" in res.stderr + res.stdout

    def test_auto_falls_back_to_classical(self, tmp_path):
        clip_dir = tmp_path / "frames"
        sys.path.insert(0, os.path.dirname(__file__))
        from conftest import make_clip
        make_clip(clip_dir, t_total=8)
        env = dict(os.environ, HF_HUB_OFFLINE="1", TRANSFORMERS_OFFLINE="1")
        res = subprocess.run(
            [sys.executable, "-m", "pdi_adapter.cli", "--video", str(clip_dir),
             "--query", "box", "--out", str(tmp_path / "out"),
             "--backend", "auto"],
            capture_output=True, text=True, env=env)
        assert res.returncode == 0, res.stderr + res.stdout
        assert (tmp_path / "out" / "tracks.csv").is_file()
