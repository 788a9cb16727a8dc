import pytest

from conftest import make_definition
from tourbot.agents import ActionSpec, Forest, AgentNode
from tourbot.dispatch import AgentDecl, ForestConfig, build_forest
from tourbot.registry import ActionRegistry, DurationClass, ParamSpec, ParamKind
from tourbot.simulator import SimClock, Simulation, run, run_scenario
from tourbot.timeline import SpeechModel, TimelineEvent
from tourbot.trace import (
    BACKGROUND_STARTED,
    COMPLETED,
    DEFAULT_STARTED,
    DELAYED,
    DISPATCHED,
    RESUBMITTED,
    Trace,
    background_derived_indices,
    trace_diff,
)


def solo_setup(*definitions, default=None):
    """One-agent world with explicit action definitions."""
    registry = ActionRegistry()
    for definition in definitions:
        registry.register(definition)
    config = ForestConfig(agents=[AgentDecl("solo", default_behavior=default)])
    forest = build_forest(config, registry)
    return registry, forest


def event(definition, trigger, params=(), origin=0):
    return TimelineEvent(trigger, definition.owner_agent, definition,
                         tuple(params), origin)


def test_demo_scenario_dispatch_accounting(profile, demo_text):
    trace, report, forest = run_scenario(demo_text, profile, seed=5)
    assert not report.dropped
    dispatched = [r for r in trace if r.kind == DISPATCHED]
    assert len(dispatched) == 11
    # Every dispatch resolves to an executed or ignored verdict caused by it.
    by_cause = {}
    for r in trace:
        if r.kind in ("executed", "ignored") and r.cause is not None:
            by_cause.setdefault(r.cause, []).append(r)
    for i, r in enumerate(trace.records):
        if r.kind == DISPATCHED:
            assert len(by_cause.get(i, [])) == 1
    assert not trace.error_warnings()


def test_empty_timeline_settles_into_defaults(profile, registry):
    forest = build_forest(profile.forest_config, registry)
    trace = run([], forest, SimClock(), 0, registry=registry, profile=profile)
    kinds = {r.kind for r in trace}
    assert kinds == {DEFAULT_STARTED, COMPLETED}
    defaulted = {r.agent for r in trace if r.kind == DEFAULT_STARTED}
    assert defaulted == {"head_and_arms", "both_arms", "right_arm", "left_arm",
                         "head", "carriage", "emotion"}
    for agent in forest.agents.values():
        assert agent.current is None
        if agent.default_behavior is not None:
            assert agent.settled_in_default


def test_same_agent_conflict_shows_dispatched_ignored_pair():
    work = make_definition("work", base_priority=3, prolonged=True, nominal=10.0)
    poke = make_definition("poke", base_priority=2, prolonged=True, nominal=1.0)
    registry, forest = solo_setup(work, poke)
    trace = run([event(work, 0.0, origin=0), event(poke, 0.1, origin=1)],
                forest, SimClock(), 0, registry=registry)
    kinds = [(r.kind, r.action_type) for r in trace
             if r.kind in (DISPATCHED, "executed", "ignored")]
    assert kinds == [(DISPATCHED, "work"), ("executed", "work"),
                     (DISPATCHED, "poke"), ("ignored", "poke")]


def test_delay_policy_defers_until_completion():
    work = make_definition("work", base_priority=3, prolonged=True, nominal=10.0)
    poke = make_definition("poke", base_priority=2, prolonged=True, nominal=1.0)
    registry, forest = solo_setup(work, poke)
    # progress 0.8 when the second event fires
    trace = run([event(work, 0.0, origin=0), event(poke, 8.0, origin=1)],
                forest, SimClock(), 0, registry=registry)
    delayed = [r for r in trace if r.kind == DELAYED]
    resubmitted = [r for r in trace if r.kind == RESUBMITTED]
    assert len(delayed) == 1 and len(resubmitted) == 1
    assert resubmitted[0].time == pytest.approx(10.0)
    # Resubmission re-arbitrates exactly once, with unchanged priority.
    poke_dispatch = [r for r in trace if r.kind == DISPATCHED
                     and r.action_type == "poke"]
    assert len(poke_dispatch) == 1
    assert poke_dispatch[0].time == pytest.approx(10.0)
    assert poke_dispatch[0].priority == "2"
    executed = [r for r in trace if r.kind == "executed"
                and r.action_type == "poke"]
    assert len(executed) == 1


def test_event_at_exact_completion_completes_then_dispatches():
    work = make_definition("work", base_priority=3, prolonged=True, nominal=10.0)
    poke = make_definition("poke", base_priority=2, prolonged=True, nominal=1.0)
    registry, forest = solo_setup(work, poke)
    trace = run([event(work, 0.0, origin=0), event(poke, 10.0, origin=1)],
                forest, SimClock(), 0, registry=registry)
    sequence = [(r.kind, r.action_type) for r in trace
                if (r.kind == COMPLETED and r.action_type == "work")
                or (r.kind in (DISPATCHED, "executed") and r.action_type == "poke")]
    assert sequence == [(COMPLETED, "work"), (DISPATCHED, "poke"),
                        ("executed", "poke")]
    assert not [r for r in trace if r.kind == DELAYED]


def test_same_seed_runs_are_byte_identical(profile, demo_text):
    t1, _, _ = run_scenario(demo_text, profile, seed=11)
    t2, _, _ = run_scenario(demo_text, profile, seed=11)
    assert [r.to_line() for r in t1] == [r.to_line() for r in t2]


def test_different_seeds_differ_only_in_background_derived(profile, demo_text):
    t1, _, _ = run_scenario(demo_text, profile, seed=1)
    t2, _, _ = run_scenario(demo_text, profile, seed=2)
    assert not trace_diff(t1, t2).empty  # backgrounds did change
    core1 = [r.structural_key() for i, r in enumerate(t1.records)
             if i not in background_derived_indices(t1.records)]
    core2 = [r.structural_key() for i, r in enumerate(t2.records)
             if i not in background_derived_indices(t2.records)]
    assert core1 == core2


def test_strict_flag_changes_only_that_dispatch(profile):
    # One command to a child agent while its ancestors idle: executed in
    # default mode, ignored in strict mode. The preamble is long enough
    # that the ancestors' startup defaults have already completed, leaving
    # the whole ancestor chain idle when the command arrives.
    text = ("Let me take a moment here and tell you a little more about this "
            "laboratory and the people who built everything you see around. "
            "<anim:right_arm;wave;1> Done.")
    t_default, _, _ = run_scenario(text, profile, seed=0)
    t_strict, _, _ = run_scenario(text, profile, seed=0, strict_alg1=True)
    verdicts_default = [(r.kind, r.action_type) for r in t_default
                        if r.cause is not None and r.kind in ("executed", "ignored")
                        and r.action_type == "anim"]
    verdicts_strict = [(r.kind, r.action_type) for r in t_strict
                       if r.cause is not None and r.kind in ("executed", "ignored")
                       and r.action_type == "anim"]
    assert verdicts_default == [("executed", "anim")]
    assert verdicts_strict == [("ignored", "anim")]


def test_halving_the_tick_changes_nothing_observable(profile, demo_text):
    t1, _, _ = run_scenario(demo_text, profile, seed=3, clock=SimClock(tick=0.05))
    t2, _, _ = run_scenario(demo_text, profile, seed=3, clock=SimClock(tick=0.025))
    assert trace_diff(t1, t2).empty


def test_trace_file_round_trip(tmp_path, profile, demo_text):
    t1, _, _ = run_scenario(demo_text, profile, seed=9)
    path = tmp_path / "run.trace"
    t1.write(path)
    loaded = Trace.read(path)
    assert trace_diff(t1, loaded).empty
    assert [r.to_line() for r in loaded] == [r.to_line() for r in t1]


def test_unroutable_event_becomes_warning_and_run_continues():
    work = make_definition("work", base_priority=3, prolonged=True, nominal=1.0)
    ghost = make_definition("ghost", base_priority=1, owner="solo")
    registry, forest = solo_setup(work)
    # Forge an event whose definition never entered the registry.
    timeline = [event(ghost, 0.0, origin=0), event(work, 1.0, origin=1)]
    trace = run(timeline, forest, SimClock(), 0, registry=registry)
    warnings = [r for r in trace if r.kind == "warning"
                and r.action_type == "unroutable_action"]
    assert len(warnings) == 1
    assert not trace.error_warnings()
    assert [r for r in trace if r.kind == "executed"
            and r.action_type == "work"]


def test_background_fires_during_long_gaps():
    work = make_definition("work", base_priority=3, prolonged=True, nominal=1.0)
    filler = make_definition("filler", base_priority=1, prolonged=True, nominal=0.5)
    registry = ActionRegistry()
    registry.register(work)
    registry.register(filler)
    config = ForestConfig(agents=[AgentDecl(
        "solo", default_behavior=ActionSpec("work"),
        background_actions=[ActionSpec("filler")],
        background_threshold=5.0)])
    forest = build_forest(config, registry)
    # A long quiet stretch before the last event.
    timeline = [event(work, 0.0, origin=0), event(work, 30.0, origin=1)]
    trace = run(timeline, forest, SimClock(), 0, registry=registry)
    backgrounds = [r for r in trace if r.kind == BACKGROUND_STARTED]
    assert backgrounds, "idle gap should trigger background fillers"
    assert all(r.priority == "background" for r in backgrounds)
    # Any command preempts a running background; none survives to the end.
    assert forest.agent("solo").settled_in_default


def test_run_ends_settled_with_no_pending_state(profile, demo_text):
    trace, _, forest = run_scenario(demo_text, profile, seed=4)
    assert not forest.live_instances()
    for agent in forest.agents.values():
        assert agent.pending_default_at is None
        assert agent.current is None


def test_interrupt_during_composite_cancels_parts_then_defaults_return(
        profile, registry):
    from tourbot.scenario import ActionTag, sanitize
    from tourbot.timeline import compile_timeline

    forest = build_forest(profile.forest_config, registry)
    sim = Simulation(forest, registry, profile=profile, seed=0)
    kept, _ = sanitize([ActionTag("interact", ("assembly_bay",), 0)], registry)
    sim._pending = compile_timeline("", kept, SpeechModel(), registry)
    sim._process(sim._next_due(0.0))
    assert forest.agent("android").current is not None

    count = sim.dispatcher.interrupt_all(0.2)
    assert count == 4  # the composite plus its three delegated parts
    assert all(a.current is None for a in forest.agents.values())

    # Let the rest of the run drain: agents drift back to their defaults.
    trace = sim.run([])
    restarted = {r.agent for r in trace if r.kind == DEFAULT_STARTED
                 and r.time >= 0.2}
    assert {"carriage", "head", "left_arm"} <= restarted
    for agent in forest.agents.values():
        if agent.default_behavior is not None:
            assert agent.settled_in_default


def test_trace_invariants_on_a_real_run(profile, demo_text):
    trace, _, _ = run_scenario(demo_text, profile, seed=13)
    times = [r.time for r in trace]
    assert times == sorted(times), "record times must be non-decreasing"
    for r in trace:
        if r.kind == "cancelled":
            assert r.cause is not None, "every cancellation names its trigger"
    for r in trace:
        if r.cause is not None:
            assert 0 <= r.cause < len(trace.records)


def test_trace_diff_reports_differences(profile, demo_text):
    t1, _, _ = run_scenario(demo_text, profile, seed=1)
    t2, _, _ = run_scenario(demo_text, profile, seed=2)
    diff = trace_diff(t1, t2)
    assert not diff.empty
    assert "differing records" in diff.summary()
    assert trace_diff(t1, t1).empty
