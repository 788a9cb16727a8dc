import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from tourbot.cli import main
from tourbot.dispatch import dump_forest_config
from tourbot.mentor1 import mentor1_forest


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def exhibit_file(tmp_path):
    path = tmp_path / "exhibit.txt"
    path.write_text("A demonstration exhibit\n"
                    "A sturdy test exhibit with a long and storied history. "
                    "Built by patient hands over many seasons. Admired by "
                    "visitors from near and far for its quiet charm.",
                    encoding="utf-8")
    return path


@pytest.fixture
def demo_file(tmp_path, demo_text):
    path = tmp_path / "demo.txt"
    path.write_text(demo_text, encoding="utf-8")
    return path


def test_generate_offline_is_deterministic(runner, exhibit_file, tmp_path):
    out_a = tmp_path / "a.txt"
    out_b = tmp_path / "b.txt"
    for out in (out_a, out_b):
        result = runner.invoke(main, [
            "generate", str(exhibit_file), "--offline", "--seed", "3",
            "--length", "500", "--style", "humorous",
            "--audience", "schoolchildren",
            "--cache-dir", str(tmp_path / "cache"), "--out", str(out)])
        assert result.exit_code == 0, result.output
    assert out_a.read_text() == out_b.read_text()
    index = json.loads((tmp_path / "cache" / "index.json").read_text())
    assert len(index["entries"]) == 2


def test_generate_without_provider_exits_3_and_leaves_cache_alone(
        runner, exhibit_file, tmp_path, monkeypatch):
    for var in ("TOURBOT_PROVIDER_ENDPOINT", "TOURBOT_PROVIDER_MODEL"):
        monkeypatch.delenv(var, raising=False)
    cache_dir = tmp_path / "cache"
    result = runner.invoke(main, [
        "generate", str(exhibit_file), "--cache-dir", str(cache_dir)])
    assert result.exit_code == 3
    assert not (cache_dir / "index.json").exists()


def test_generate_fallback_uses_nearest_cached(runner, exhibit_file, tmp_path,
                                               monkeypatch):
    cache_dir = tmp_path / "cache"
    # Two offline generations with different parameters.
    for length, style in ((600, "formal"), ("900", "humorous")):
        result = runner.invoke(main, [
            "generate", str(exhibit_file), "--offline", "--seed", "1",
            "--length", str(length), "--style", str(style),
            "--audience", "specialists", "--cache-dir", str(cache_dir)])
        assert result.exit_code == 0, result.output
    # Now the provider is unreachable; fallback picks the closest entry.
    for var in ("TOURBOT_PROVIDER_ENDPOINT", "TOURBOT_PROVIDER_MODEL"):
        monkeypatch.delenv(var, raising=False)
    out = tmp_path / "fallback.txt"
    result = runner.invoke(main, [
        "generate", str(exhibit_file), "--length", "1000", "--style",
        "humorous", "--audience", "specialists",
        "--cache-dir", str(cache_dir), "--fallback", "--out", str(out)])
    assert result.exit_code == 0, result.output
    index = json.loads((cache_dir / "index.json").read_text())
    nearest = [e for e in index["entries"]
               if e["params"]["target_length"] == 900][0]
    assert out.read_text() == (cache_dir / nearest["file"]).read_text()


def test_generate_registers_basic_scenario(runner, exhibit_file, demo_file,
                                           tmp_path):
    cache_dir = tmp_path / "cache"
    result = runner.invoke(main, [
        "generate", str(exhibit_file), "--basic", str(demo_file),
        "--cache-dir", str(cache_dir)])
    assert result.exit_code == 0, result.output
    index = json.loads((cache_dir / "index.json").read_text())
    assert "exhibit" in index["basic"]


def test_validate_clean_scenario(runner, demo_file):
    result = runner.invoke(main, ["validate", str(demo_file)])
    assert result.exit_code == 0, result.output
    assert "dropped: 0" in result.output


def test_validate_scenario_with_unknown_tag(runner, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("Hello <teleport:moon> there.", encoding="utf-8")
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == 1
    assert "teleport" in result.output


def test_simulate_demo_scenario(runner, demo_file, tmp_path):
    trace_path = tmp_path / "demo.trace"
    result = runner.invoke(main, [
        "simulate", str(demo_file), "--seed", "1", "--trace", str(trace_path)])
    assert result.exit_code == 0, result.output
    assert "dispatched: 11" in result.output
    assert trace_path.exists()


def test_simulate_all_unknown_tags_still_succeeds(runner, tmp_path):
    path = tmp_path / "halluc.txt"
    path.write_text("One <teleport:moon> two <summon:ghost> three.",
                    encoding="utf-8")
    result = runner.invoke(main, ["simulate", str(path)])
    assert result.exit_code == 0, result.output
    assert "dropped tags: 2" in result.output


def test_simulate_cyclic_forest_exits_2(runner, demo_file, tmp_path):
    config = mentor1_forest()
    config.agents[1].parent = config.agents[2].id
    config.agents[2].parent = config.agents[1].id
    path = tmp_path / "forest.json"
    dump_forest_config(config, path)
    result = runner.invoke(main, [
        "simulate", str(demo_file), "--forest", str(path)])
    assert result.exit_code == 2


def test_trace_diff_and_show(runner, demo_file, tmp_path):
    a = tmp_path / "a.trace"
    b = tmp_path / "b.trace"
    for seed, path in ((1, a), (1, b)):
        result = runner.invoke(main, [
            "simulate", str(demo_file), "--seed", str(seed),
            "--trace", str(path)])
        assert result.exit_code == 0
    result = runner.invoke(main, ["trace", "diff", str(a), str(b)])
    assert result.exit_code == 0
    assert "identical" in result.output

    c = tmp_path / "c.trace"
    result = runner.invoke(main, [
        "simulate", str(demo_file), "--seed", "2", "--trace", str(c)])
    result = runner.invoke(main, ["trace", "diff", str(a), str(c)])
    assert result.exit_code == 1

    result = runner.invoke(main, ["trace", "show", str(a)])
    assert result.exit_code == 0
    assert "dispatched: 11" in result.output


def test_registry_listing_and_export(runner, tmp_path):
    result = runner.invoke(main, ["registry"])
    assert result.exit_code == 0
    assert "facial(expression:identifier)" in result.output
    assert "owner=emotion" in result.output

    export = tmp_path / "actions.jsonl"
    result = runner.invoke(main, ["registry", "--export", str(export)])
    assert result.exit_code == 0
    lines = [l for l in export.read_text().splitlines() if l.strip()]
    assert len(lines) == 12

    # An exported registry round-trips through --registry.
    result = runner.invoke(main, ["registry", "--registry", str(export)])
    assert result.exit_code == 0
