import pytest

from tourbot.agents import Verdict
from tourbot.dispatch import (
    AgentDecl,
    Dispatcher,
    ForestConfig,
    build_forest,
    dump_forest_config,
    load_forest_config,
)
from tourbot.errors import ConfigError, UnroutableActionError
from tourbot.mentor1 import mentor1_forest
from tourbot.scenario import ActionTag, sanitize
from tourbot.timeline import SpeechModel, compile_timeline
from tourbot.trace import trace_diff


def _event(registry, action_type, params, offset=0):
    tags = [ActionTag(action_type, tuple(params), offset)]
    kept, report = sanitize(tags, registry)
    assert not report.dropped
    events = compile_timeline("x" * 100, kept,
                              SpeechModel(chars_per_second=1000.0, pauses={}),
                              registry)
    return events[0]


def test_mentor1_forest_builds_with_ten_agents(registry):
    forest = build_forest(mentor1_forest(), registry)
    assert len(forest.agents) == 10
    for agent in forest.agents.values():
        assert agent.current is None
    # Defaults are armed at build time.
    armed = [a.id for a in forest.agents.values() if a.pending_default_at is not None]
    assert set(armed) == {"head_and_arms", "both_arms", "right_arm", "left_arm",
                          "head", "carriage", "emotion"}


def test_cycle_in_config_is_rejected(registry):
    config = ForestConfig(agents=[AgentDecl("a", parent="b"),
                                  AgentDecl("b", parent="a")])
    with pytest.raises(ConfigError):
        build_forest(config, registry)


def test_unknown_parent_rejected(registry):
    config = ForestConfig(agents=[AgentDecl("a", parent="ghost")])
    with pytest.raises(ConfigError):
        build_forest(config, registry)


def test_duplicate_agent_rejected(registry):
    config = ForestConfig(agents=[AgentDecl("a"), AgentDecl("a")])
    with pytest.raises(ConfigError):
        build_forest(config, registry)


def test_routing_to_unknown_agent_rejected(registry):
    config = mentor1_forest()
    config.routing["facial"] = "nobody"
    with pytest.raises(ConfigError):
        build_forest(config, registry)


def test_registry_owner_must_exist(registry):
    config = ForestConfig(agents=[AgentDecl("only")])
    with pytest.raises(ConfigError) as exc:
        build_forest(config, registry)
    assert "owned by unknown agent" in str(exc.value)


def test_facial_routes_to_emotion(registry):
    forest = build_forest(mentor1_forest(), registry)
    dispatcher = Dispatcher(forest, registry)
    decision = dispatcher.dispatch(_event(registry, "facial", ["joy"]), 0.0)
    assert decision.verdict is Verdict.EXECUTE
    assert forest.agent("emotion").current.action_type == "facial"


def test_limb_parameter_routes_anim_to_that_agent(registry):
    forest = build_forest(mentor1_forest(), registry)
    dispatcher = Dispatcher(forest, registry)
    decision = dispatcher.dispatch(
        _event(registry, "anim", ["right_arm", "show_space", "1"]), 0.0)
    assert decision.verdict is Verdict.EXECUTE
    assert forest.agent("right_arm").current.action_type == "anim"
    assert forest.agent("head_and_arms").current is None


def test_explicit_routing_override_wins(registry):
    config = mentor1_forest()
    config.routing["anim"] = "head"
    forest = build_forest(config, registry)
    dispatcher = Dispatcher(forest, registry, config.routing)
    dispatcher.dispatch(_event(registry, "anim", ["right_arm", "wave", "1"]), 0.0)
    assert forest.agent("head").current is not None
    assert forest.agent("right_arm").current is None


def test_unknown_action_is_unroutable(registry):
    forest = build_forest(mentor1_forest(), registry)
    dispatcher = Dispatcher(forest, registry)
    with pytest.raises(UnroutableActionError):
        dispatcher.resolve_target("teleport", ("moon",))


def test_interrupt_all_counts_and_resets(registry):
    forest = build_forest(mentor1_forest(), registry)
    dispatcher = Dispatcher(forest, registry)
    dispatcher.dispatch(_event(registry, "facial", ["joy"]), 0.0)
    dispatcher.dispatch(_event(registry, "anim", ["right_arm", "wave", "1"]), 0.0)
    dispatcher.dispatch(_event(registry, "gaze", ["1.0,0.0,1.5"]), 0.0)
    assert dispatcher.interrupt_all(1.0) == 3
    assert all(a.current is None for a in forest.agents.values())
    assert dispatcher.interrupt_all(2.0) == 0
    # No latching: the next event arbitrates normally.
    decision = dispatcher.dispatch(_event(registry, "facial", ["angry"]), 3.0)
    assert decision.verdict is Verdict.EXECUTE


def test_routing_is_deterministic(registry):
    forest = build_forest(mentor1_forest(), registry)
    dispatcher = Dispatcher(forest, registry)
    for _ in range(5):
        assert dispatcher.resolve_target(
            "anim", ("both_arms", "open_wide", 1)) == "both_arms"
        assert dispatcher.resolve_target("facial", ("joy",)) == "emotion"
        assert dispatcher.resolve_target("rotate", ((1.0, 0.0, 0.0),)) == "carriage"


def test_dispatcher_is_stateless(registry):
    """Rebuilding the dispatcher mid-run leaves behavior unchanged."""
    events = [
        _event(registry, "facial", ["joy"], 0),
        _event(registry, "anim", ["right_arm", "wave", "1"], 1),
        _event(registry, "facial", ["angry"], 2),
        _event(registry, "pose", ["both_arms", "akimbo"], 3),
    ]

    def run_events(rebuild):
        forest = build_forest(mentor1_forest(), registry)
        dispatcher = Dispatcher(forest, registry)
        for i, event in enumerate(events):
            if rebuild:
                dispatcher = Dispatcher(forest, registry)
            dispatcher.dispatch(event, float(i))
        return forest.trace

    assert trace_diff(run_events(False), run_events(True)).empty


def test_forest_config_file_round_trip(tmp_path, registry):
    config = mentor1_forest()
    path = tmp_path / "forest.json"
    dump_forest_config(config, path)
    loaded = load_forest_config(path)
    assert [a.id for a in loaded.agents] == [a.id for a in config.agents]
    assert loaded.scene.exhibits == config.scene.exhibits
    forest = build_forest(loaded, registry)
    assert len(forest.agents) == 10
