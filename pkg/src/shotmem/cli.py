"""Command-line interface.

Exit codes: 0 success; 2 configuration/usage; 3 script schema; 4 generation
backend; 5 embedding/scoring provider; 6 run-manifest integrity; 7 index out
of range; 1 any other engine error. Every flag has a config-file equivalent
(YAML); flags override file values, and the effective configuration is
echoed into the run manifest.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import report as report_mod
from .backends import MockBackendConfig, make_backend
from .bank import MemoryBank
from .config import RunConfig, load_config_file
from .errors import (
    BackendFailure,
    ConfigError,
    IndexOutOfRange,
    ManifestError,
    ProviderFailure,
    ScriptError,
    ShotmemError,
)
from .metrics import evaluate_story
from .pipeline import RunPaths, load_story, resume as resume_run, run_story
from .providers import make_providers
from .script import flatten_shots, parse_script

EXIT_CONFIG = 2
EXIT_SCRIPT = 3
EXIT_BACKEND = 4
EXIT_PROVIDER = 5
EXIT_MANIFEST = 6
EXIT_RANGE = 7
EXIT_OTHER = 1


def _exit_code(exc: ShotmemError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ScriptError):
        return EXIT_SCRIPT
    if isinstance(exc, BackendFailure):
        return EXIT_BACKEND
    if isinstance(exc, ProviderFailure):
        return EXIT_PROVIDER
    if isinstance(exc, ManifestError):
        return EXIT_MANIFEST
    if isinstance(exc, IndexOutOfRange):
        return EXIT_RANGE
    return EXIT_OTHER


def _fail(exc: ShotmemError, error_record_dir: Path | None = None) -> None:
    code = _exit_code(exc)
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    shot_index = getattr(exc, "shot_index", None)
    if shot_index is not None:
        record["shot_index"] = shot_index
    if error_record_dir is not None:
        try:
            error_record_dir.mkdir(parents=True, exist_ok=True)
            (error_record_dir / "error.json").write_text(
                json.dumps(record, indent=2, sort_keys=True), encoding="utf-8"
            )
        except OSError:
            pass
    click.echo(f"error: {json.dumps(record, sort_keys=True)}", err=True)
    sys.exit(code)


def _read_script(path: str):
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read script file {path}: {exc}") from exc
    return parse_script(raw)


# Config-file keys consumed by the CLI itself rather than the run config;
# they are flag fallbacks and never enter the fingerprint.
_OPERATIONAL_KEYS = ("script", "out", "resume")


def _load_config_doc(config_path) -> tuple[dict, dict]:
    if not config_path:
        return {}, {}
    try:
        doc = yaml.safe_load(Path(config_path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config file {config_path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {config_path} must hold a mapping")
    operational = {k: doc.pop(k) for k in _OPERATIONAL_KEYS if k in doc}
    return doc, operational


def _build_config(config_doc: dict, **overrides) -> RunConfig:
    config = RunConfig.from_dict(config_doc)
    fields = {}
    for key, value in overrides.items():
        if value is None or (key == "reference_images" and not value):
            continue
        fields[key] = value
    return dataclasses.replace(config, **fields) if fields else config


@click.group(
    epilog=(
        "Exit codes: 0 success, 2 configuration, 3 script schema, 4 generation "
        "backend, 5 embedding provider, 6 run manifest, 7 index out of range, "
        "1 other errors."
    )
)
@click.version_option(package_name="shotmem")
def main() -> None:
    """Memory-conditioned multi-shot story video engine."""


@main.command()
@click.option("--script", "script_path", type=click.Path(), help="Story script JSON.")
@click.option("--config", "config_path", type=click.Path(), help="YAML run config.")
@click.option("--backend", help="Generation backend: 'mock' or a service URL.")
@click.option("--providers", help="Embedding providers: 'mock' or a sidecar URL.")
@click.option("--seed", type=int, help="Base seed; shot i uses seed + i.")
@click.option("--refs", multiple=True, type=click.Path(), help="Reference image(s) seeding the memory bank.")
@click.option("--out", "out_dir", type=click.Path(), help="Run manifest directory.")
@click.option("--resume", "do_resume", is_flag=True, default=None, help="Continue an interrupted run in --out.")
def generate(script_path, config_path, backend, providers, seed, refs, out_dir, do_resume) -> None:
    """Generate every shot of a story script."""
    out = None
    try:
        config_doc, operational = _load_config_doc(config_path)
        script_path = script_path or operational.get("script")
        out_dir = out_dir or operational.get("out")
        if do_resume is None:
            do_resume = bool(operational.get("resume", False))
        if not script_path:
            raise ConfigError("no story script given (--script or config key 'script')")
        if not out_dir:
            raise ConfigError("no output directory given (--out or config key 'out')")
        out = Path(out_dir)
        script = _read_script(script_path)
        config = _build_config(
            config_doc,
            backend=backend,
            providers=providers,
            seed=seed,
            reference_images=tuple(str(r) for r in refs),
        )
        backend_obj = make_backend(
            config.backend,
            MockBackendConfig(
                consistency_strength=config.consistency_strength,
                max_segments=config.max_segments,
            ),
        )
        provider_obj = make_providers(config.providers)
        if do_resume:
            story = resume_run(out, script, backend_obj, provider_obj, config)
        else:
            story = run_story(script, backend_obj, provider_obj, config, out)
    except ShotmemError as exc:
        _fail(exc, error_record_dir=out)
        return
    click.echo(f"generated {len(story.shots)} shots into {out}")
    click.echo(f"config fingerprint: {story.config_fingerprint}")


@main.command()
@click.option("--manifest", "manifest_dir", required=True, type=click.Path(), help="Run directory from 'generate'.")
@click.option("--script", "script_path", required=True, type=click.Path(), help="Story script JSON.")
@click.option("--providers", default=None, help="Embedding providers: 'mock' or a sidecar URL.")
@click.option("--out", "out_dir", type=click.Path(), help="Report directory (default: <manifest>/report).")
def evaluate(manifest_dir, script_path, providers, out_dir) -> None:
    """Score a completed run and emit the metric report with figures."""
    manifest = Path(manifest_dir)
    out = Path(out_dir) if out_dir else manifest / "report"
    try:
        script = _read_script(script_path)
        provider_obj = make_providers(providers or "mock")
        story = load_story(manifest)
        metrics = evaluate_story(story, script, provider_obj)
        paths = report_mod.write_report(metrics, out)
    except ShotmemError as exc:
        _fail(exc, error_record_dir=out)
        return
    click.echo(report_mod.summary_row(metrics))
    for name in ("report", "pair_table", "heatmap", "summary", "scatter"):
        click.echo(f"{name}: {paths[name]}")


@main.command("inspect-memory")
@click.option("--manifest", "manifest_dir", required=True, type=click.Path(), help="Run directory.")
@click.option("--shot", "shot_index", required=True, type=int, help="Show the bank after this shot.")
def inspect_memory(manifest_dir, shot_index) -> None:
    """Print the memory bank snapshot recorded after a shot."""
    paths = RunPaths(manifest_dir)
    try:
        bank_path = paths.bank_after(shot_index)
        if shot_index < 0 or not bank_path.exists():
            raise IndexOutOfRange(f"no bank snapshot recorded after shot {shot_index}")
        bank = MemoryBank.from_manifest(json.loads(bank_path.read_text(encoding="utf-8")))
    except ShotmemError as exc:
        _fail(exc)
        return
    frames = bank.snapshot_for_conditioning()
    click.echo(
        f"bank after shot {shot_index}: {len(frames)} frames "
        f"(sink_size={bank.sink_size}, capacity={bank.capacity}, "
        f"dup_threshold={bank.dup_threshold})"
    )
    header = f"{'seq':>4} {'sink':>4} {'shot':>5} {'frame':>5} {'score':>7}  ref"
    click.echo(header)
    for f in frames:
        click.echo(
            f"{f.insertion_seq:>4} {'*' if f.is_sink else '':>4} "
            f"{f.source_shot:>5} {f.source_frame:>5} {f.aesthetic_score:>7.3f}  {f.frame_ref[:23]}"
        )
    if len(frames) > 1:
        click.echo("pairwise cosine similarity:")
        for a in frames:
            row = " ".join(
                f"{float(np.dot(a.embedding, b.embedding)):+.3f}" for b in frames
            )
            click.echo(f"  seq {a.insertion_seq:>3}: {row}")


@main.command("validate-script")
@click.option("--script", "script_path", required=True, type=click.Path(), help="Story script JSON.")
def validate_script(script_path) -> None:
    """Parse and validate a story script, printing its shot plan."""
    try:
        script = _read_script(script_path)
    except ShotmemError as exc:
        _fail(exc)
        return
    shots = flatten_shots(script)
    click.echo(f"story: {script.story_name}")
    click.echo(f"scenes: {len(script.scenes)}; shots: {len(shots)}")
    for shot in shots:
        mark = "cut" if shot.is_cut else "continue"
        click.echo(f"  [{shot.global_index:02d}] scene {shot.scene_num} ({mark}) {shot.prompt[:60]}")


if __name__ == "__main__":
    main()
