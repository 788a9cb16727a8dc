"""Command-line entry point.

One verb per pipeline stage: generate a scenario for an exhibit, validate
a scenario file against the registry, simulate it to a trace, inspect or
diff traces, and list the registry. Every command is scriptable: all
inputs come from flags, files, and environment variables, and nothing
prompts.

Exit codes are stable: 0 success, 1 validation failures or runtime
anomalies, 2 configuration errors, 3 provider errors.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click

from .cache import ScenarioCache
from .dispatch import load_forest_config
from .errors import (
    ConfigError,
    LengthViolationError,
    NoScenarioError,
    ParseError,
    ProviderError,
    TourbotError,
)
from .generation import generate_scenario, load_exhibit
from .mentor1 import mentor1_profile, tag_examples
from .providers import HttpChatProvider, StubProvider
from .registry import load_registry
from .scenario import GenerationParams, parse_scenario, sanitize
from .simulator import SimClock, run_scenario
from .timeline import SpeechModel
from .trace import Trace, trace_diff

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_PROVIDER = 3


def _profile(registry_path: str | None, forest_path: str | None):
    profile = mentor1_profile()
    try:
        if registry_path:
            profile.registry = load_registry(registry_path)
        if forest_path:
            profile.forest_config = load_forest_config(forest_path)
    except (OSError, ValueError, KeyError, TourbotError) as exc:
        raise click.ClickException(f"bad configuration: {exc}") from exc
    return profile


registry_option = click.option("--registry", "registry_path", default=None,
                               type=click.Path(exists=True, dir_okay=False),
                               help="Action registry file (one JSON record per line).")
forest_option = click.option("--forest", "forest_path", default=None,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Forest configuration file (JSON).")


@click.group()
@click.version_option(version="0.1.0", prog_name="tourbot")
def main() -> None:
    """Scenario pipeline for the MENTOR-1 tour guide robot."""


@main.command()
@click.argument("exhibit", type=click.Path(exists=True, dir_okay=False))
@click.option("--length", "-l", default=1200, show_default=True,
              help="Target narrative length in characters.")
@click.option("--style", type=click.Choice(GenerationParams.STYLES),
              default="formal", show_default=True)
@click.option("--audience", type=click.Choice(GenerationParams.AUDIENCES),
              default="adults_nontechnical", show_default=True)
@click.option("--offline", is_flag=True,
              help="Use the deterministic offline generator instead of the "
                   "configured provider.")
@click.option("--seed", default=0, show_default=True,
              help="Seed for the offline generator.")
@click.option("--cache-dir", default="scenario_cache", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Also write the scenario to this path.")
@click.option("--fallback", is_flag=True,
              help="On provider failure, fall back to the nearest cached "
                   "scenario instead of failing.")
@click.option("--basic", "basic_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Register this file as the exhibit's hand-written basic "
                   "scenario and exit (no generation).")
@registry_option
def generate(exhibit, length, style, audience, offline, seed, cache_dir,
             out_path, fallback, basic_path, registry_path):
    """Generate a tagged scenario for EXHIBIT and cache it."""
    profile = _profile(registry_path, None)
    registry = profile.registry
    cache = ScenarioCache(cache_dir)
    desc = load_exhibit(exhibit)

    if basic_path:
        text = Path(basic_path).read_text(encoding="utf-8")
        speech, tags = parse_scenario(text)
        kept, report = sanitize(tags, registry)
        if report.dropped:
            click.echo(report.summary())
            click.echo("basic scenario has invalid tags", err=True)
            sys.exit(EXIT_VALIDATION)
        from .scenario import ScenarioDocument
        path = cache.put_basic(desc.exhibit_id, ScenarioDocument(text))
        click.echo(f"basic scenario for {desc.exhibit_id} stored at {path}")
        sys.exit(EXIT_OK)

    params = GenerationParams(length, style, audience)
    provider = StubProvider(seed=seed) if offline else HttpChatProvider()
    try:
        try:
            document, report = generate_scenario(
                desc, params, provider, registry, tag_examples=tag_examples())
        except LengthViolationError as exc:
            click.echo(f"warning: {exc}; using the text anyway", err=True)
            from .generation import insert_tags
            document, report = insert_tags(exc.text, registry, provider,
                                           tag_examples=tag_examples())
            document.metadata = params
    except ProviderError as exc:
        if fallback:
            try:
                document = cache.fallback_select(desc.exhibit_id, params)
            except NoScenarioError as missing:
                click.echo(f"provider failed and no fallback: {missing}", err=True)
                sys.exit(EXIT_PROVIDER)
            target = Path(out_path) if out_path else None
            if target:
                target.write_text(document.raw_text, encoding="utf-8")
                click.echo(f"fallback scenario written to {target}")
            else:
                click.echo(document.raw_text)
            sys.exit(EXIT_OK)
        click.echo(f"provider error: {exc}", err=True)
        sys.exit(EXIT_PROVIDER)

    stored = cache.put(desc.exhibit_id, params, document)
    if out_path:
        Path(out_path).write_text(document.raw_text, encoding="utf-8")
    click.echo(f"scenario stored at {stored}")
    click.echo(report.summary())
    sys.exit(EXIT_OK)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@registry_option
def validate(scenario, registry_path):
    """Check SCENARIO against the registry; exit 0 iff no tags are dropped."""
    profile = _profile(registry_path, None)
    text = Path(scenario).read_text(encoding="utf-8")
    try:
        speech, tags = parse_scenario(text)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    kept, report = sanitize(tags, profile.registry)
    click.echo(f"speech: {len(speech)} chars, tags: {len(tags)} "
               f"({len(kept)} kept)")
    click.echo(report.summary())
    sys.exit(EXIT_OK if report.clean else EXIT_VALIDATION)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--speech-cps", default=15.0, show_default=True,
              help="Speech rate in characters per second.")
@click.option("--tick", default=0.05, show_default=True)
@click.option("--strict-alg1", is_flag=True,
              help="Literal ancestor rule: requests to agents whose ancestors "
                   "are all idle are ignored.")
@click.option("--trace", "trace_path", default=None,
              type=click.Path(dir_okay=False), help="Write the trace here.")
@registry_option
@forest_option
def simulate(scenario, seed, speech_cps, tick, strict_alg1, trace_path,
             registry_path, forest_path):
    """Run SCENARIO against the simulated robot and report the trace."""
    profile = _profile(registry_path, forest_path)
    text = Path(scenario).read_text(encoding="utf-8")
    try:
        trace, report, _forest = run_scenario(
            text, profile, seed=seed,
            speech_model=SpeechModel(chars_per_second=speech_cps),
            clock=SimClock(tick=tick),
            strict_alg1=True if strict_alg1 else None)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if trace_path:
        trace.write(trace_path)
    counts = trace.counts()
    click.echo(f"records: {len(trace)}")
    for kind in sorted(counts):
        click.echo(f"  {kind}: {counts[kind]}")
    if report.dropped:
        click.echo(f"dropped tags: {len(report.dropped)}")
    errors = trace.error_warnings()
    if errors:
        click.echo(f"error-class warnings: {len(errors)}", err=True)
        sys.exit(EXIT_VALIDATION)
    sys.exit(EXIT_OK)


@main.group()
def trace() -> None:
    """Inspect simulation traces."""


@trace.command()
@click.argument("trace_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_b", type=click.Path(exists=True, dir_okay=False))
def diff(trace_a, trace_b):
    """Structurally compare two trace files; exit 0 iff identical."""
    result = trace_diff(Trace.read(trace_a), Trace.read(trace_b))
    click.echo(result.summary())
    sys.exit(EXIT_OK if result.empty else EXIT_VALIDATION)


@trace.command()
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
def show(trace_file):
    """Summarize a trace file: record counts per kind."""
    loaded = Trace.read(trace_file)
    counts = loaded.counts()
    click.echo(f"records: {len(loaded)}")
    for kind in sorted(counts):
        click.echo(f"  {kind}: {counts[kind]}")
    sys.exit(EXIT_OK)


@main.command(name="registry")
@registry_option
@click.option("--export", "export_path", default=None,
              type=click.Path(dir_okay=False),
              help="Write the registry to this file.")
def registry_cmd(registry_path, export_path):
    """List the action registry."""
    profile = _profile(registry_path, None)
    for definition in profile.registry.definitions():
        schema = ", ".join(
            f"{s.name}:{s.kind.value}" + ("" if s.required else f"={s.default}")
            for s in definition.param_schema)
        click.echo(f"{definition.action_type}({schema}) "
                   f"prio={definition.base_priority} "
                   f"{definition.duration_class.value} "
                   f"owner={definition.owner_agent}")
    if export_path:
        from .registry import dump_registry
        dump_registry(profile.registry, export_path)
        click.echo(f"registry written to {export_path}")
    sys.exit(EXIT_OK)


def demo_scenario_text() -> str:
    """The bundled demonstration tour scenario."""
    return resources.files("tourbot").joinpath(
        "assets/scenarios/demo_tour.txt").read_text("utf-8")


if __name__ == "__main__":
    main()
