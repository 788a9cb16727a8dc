"""Deterministic discrete-time executor.

Drives a compiled timeline against an agent forest: completes actions
whose duration elapsed, fires due events through the delay policy and the
dispatcher, starts pending default returns, and picks background fillers
for long-idle agents. Everything that happens lands in the trace, and the
trace is a pure function of (timeline, forest config, registry, clock
parameters, seed).

The clock advances in ticks, but due work is processed in the order of
its scheduled (logical) time, with completions before dispatches before
idle work at equal times, and records carry logical times. Verdicts and
timestamps therefore do not depend on the tick resolution; the tick only
bounds how much wall-clock bookkeeping happens per step.

The run ends when the timeline is exhausted, nothing is running or queued,
and every agent has drifted back to its default behavior or plain idleness.
Runtime anomalies (unroutable events, losing delegations) never abort the
run; they become warning records.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .agents import (
    ActionInstance,
    ActionRequest,
    ActionSpec,
    AgentNode,
    Forest,
    SOURCE_BACKGROUND,
    SOURCE_DEFAULT,
    Verdict,
)
from .dispatch import Dispatcher, build_forest
from .errors import UnroutableActionError
from .mentor1 import DelayVerdict, delay_policy
from .priorities import Priority
from .registry import ActionRegistry, render_params, validate_params
from .scenario import parse_scenario, sanitize
from .timeline import SpeechModel, TimelineEvent, compile_timeline
from .trace import (
    BACKGROUND_STARTED,
    COMPLETED,
    DEFAULT_STARTED,
    DELAYED,
    DISPATCHED,
    EXECUTED,
    IGNORED,
    RESUBMITTED,
    Trace,
)

_EPS = 1e-9

DEFAULT_TICK = 0.05


@dataclass
class SimClock:
    now: float = 0.0
    tick: float = DEFAULT_TICK

    def __post_init__(self) -> None:
        if self.tick <= 0:
            raise ValueError("tick must be positive")
        self._step = round(self.now / self.tick)

    def advance(self) -> float:
        # Recompute from the step count instead of accumulating, so long
        # runs do not drift.
        self._step += 1
        self.now = self._step * self.tick
        return self.now


@dataclass
class _DelayedRequest:
    seq: int
    agent_id: str
    blocking_instance: int
    event: TimelineEvent
    record: int


class Simulation:
    """One run's mutable execution state."""

    def __init__(self, forest: Forest, registry: ActionRegistry, *,
                 profile=None, clock: SimClock | None = None, seed: int = 0,
                 routing: dict[str, str] | None = None,
                 settle_horizon: float = 900.0):
        self.forest = forest
        self.registry = registry
        self.profile = profile
        self.clock = clock or SimClock()
        self.rng = random.Random(seed)
        self.trace: Trace = forest.trace
        duration_fn = (profile.duration_for if profile is not None
                       else (lambda d, v: d.nominal_duration))
        self.dispatcher = Dispatcher(forest, registry, routing, duration_fn)
        self.settle_horizon = settle_horizon
        self.limb_states = profile.initial_limb_states() if profile is not None else {}
        self._auto_state: dict = {}
        self._pending: list[TimelineEvent] = []
        self._delayed: list[_DelayedRequest] = []
        self._seq = 0

    # -- public ------------------------------------------------------------

    def run(self, timeline: list[TimelineEvent]) -> Trace:
        self._pending = sorted(timeline, key=lambda e: (e.trigger_time, e.origin))
        horizon = (self._pending[-1].trigger_time if self._pending else 0.0) \
            + self.settle_horizon
        while True:
            while True:
                item = self._next_due(self.clock.now)
                if item is None:
                    break
                when = item[0]
                self._process(item)
                self._drain_delayed(when)
            if self._settled():
                break
            if self.clock.now > horizon:
                self.trace.warn(self.clock.now, "", "settle_timeout",
                                "run did not settle within the safety horizon",
                                severity="error")
                break
            self.clock.advance()
        return self.trace

    def submit_delegated(self, agent_id: str, request: ActionRequest,
                         now: float, *, cause: int | None) -> ActionInstance | None:
        """Issue one delegated sub-request on behalf of a composite."""
        rec = self.trace.emit(now, agent_id, DISPATCHED,
                              request.definition.action_type, request.params,
                              request.priority.label, cause=cause)
        decision = self.forest.handle_action(agent_id, request, now, cause=rec)
        if decision.verdict is Verdict.EXECUTE:
            out = self.trace.emit(now, agent_id, EXECUTED,
                                  request.definition.action_type, request.params,
                                  decision.effective_priority.label, cause=rec)
            decision.instance.start_record = out
            self._after_execute(decision.instance, now)
            return decision.instance
        self.trace.emit(now, agent_id, IGNORED, request.definition.action_type,
                        request.params, decision.effective_priority.label, cause=rec)
        self.trace.warn(now, agent_id, "delegation_ignored",
                        f"{request.definition.action_type} lost arbitration",
                        cause=rec)
        return None

    # -- scheduling --------------------------------------------------------

    def _next_due(self, now: float):
        """Earliest due item: (time, rank, tiebreak, payload) or None."""
        best = None

        def consider(candidate):
            nonlocal best
            if best is None or candidate[:3] < best[:3]:
                best = candidate

        for instance in self.forest.live_instances():
            end = instance.end_time
            if end is not None and end <= now + _EPS:
                consider((end, 0, instance.instance_id, ("complete", instance)))
        if self._pending and self._pending[0].trigger_time <= now + _EPS:
            event = self._pending[0]
            consider((event.trigger_time, 2, 0, ("event", event)))
        for index, agent in enumerate(self.forest.agents.values()):
            if agent.pending_default_at is not None \
                    and agent.pending_default_at <= now + _EPS:
                consider((agent.pending_default_at, 3, index, ("default", agent)))
        for index, agent in enumerate(self.forest.agents.values()):
            if (agent.current is None and agent.idle_since is not None
                    and agent.pending_default_at is None
                    and agent.background_actions):
                due = agent.idle_since + agent.background_threshold
                if due <= now + _EPS:
                    consider((due, 4, index, ("background", agent)))
        return best

    def _process(self, item) -> None:
        when = item[0]
        kind, payload = item[3][0], item[3][1]
        if kind == "complete":
            self._complete(payload, when)
        elif kind == "event":
            self._pending.pop(0)
            self._fire_event(payload, when)
        elif kind == "default":
            self._start_default(payload, when)
        elif kind == "background":
            self._start_background(payload, when)

    def _settled(self) -> bool:
        return (not self._pending and not self._delayed
                and not self.forest.live_instances()
                and all(a.pending_default_at is None
                        for a in self.forest.agents.values()))

    # -- item handlers -----------------------------------------------------

    def _complete(self, instance: ActionInstance, when: float) -> None:
        rec = self.trace.emit(when, instance.agent_id, COMPLETED,
                              instance.action_type, instance.params,
                              instance.priority.label,
                              cause=instance.start_record)
        self.forest.on_action_complete(instance.agent_id, when, cause=rec)

    def _fire_event(self, event: TimelineEvent, when: float) -> None:
        try:
            target = self.dispatcher.resolve_target(event.action_type, event.params)
        except UnroutableActionError as exc:
            self.trace.warn(when, event.target_agent, "unroutable_action", str(exc))
            return
        agent = self.forest.agent(target)
        current = agent.current
        if current is not None:
            verdict = delay_policy(current, current.progress(when))
            if verdict is DelayVerdict.DELAY_UNTIL_COMPLETE:
                rec = self.trace.emit(when, target, DELAYED, event.action_type,
                                      tuple(render_params(event.definition,
                                                          list(event.params))),
                                      "", cause=current.start_record)
                self._seq += 1
                self._delayed.append(_DelayedRequest(
                    self._seq, target, current.instance_id, event, rec))
                return
        self._dispatch_event(event, when, cause=None)

    def _dispatch_event(self, event: TimelineEvent, when: float,
                        *, cause: int | None) -> None:
        decision = self.dispatcher.dispatch(event, when, cause=cause)
        if decision.verdict is Verdict.EXECUTE:
            self._after_execute(decision.instance, when)

    def _drain_delayed(self, when: float) -> None:
        """Resubmit delayed requests whose blocking action has finished."""
        made_progress = True
        while made_progress:
            made_progress = False
            for entry in sorted(self._delayed, key=lambda e: e.seq):
                if self.forest.instance(entry.blocking_instance) is not None:
                    continue
                self._delayed.remove(entry)
                rec = self.trace.emit(when, entry.agent_id, RESUBMITTED,
                                      entry.event.action_type,
                                      tuple(render_params(entry.event.definition,
                                                          list(entry.event.params))),
                                      "", cause=entry.record)
                # Resubmission re-arbitrates exactly once: no second delay.
                self._dispatch_event(entry.event, when, cause=rec)
                made_progress = True
                break

    def _start_default(self, agent: AgentNode, when: float) -> None:
        cause = agent.pending_default_cause
        agent.pending_default_at = None
        agent.pending_default_cause = None
        spec = agent.default_behavior
        if spec is None:
            return
        request = self._autonomous_request(agent, spec, Priority.DEFAULT,
                                           SOURCE_DEFAULT)
        decision = self.forest.handle_action(agent.id, request, when, cause=cause)
        if decision.verdict is Verdict.EXECUTE:
            rec = self.trace.emit(when, agent.id, DEFAULT_STARTED,
                                  request.definition.action_type, request.params,
                                  Priority.DEFAULT.label, cause=cause)
            decision.instance.start_record = rec
            self._after_execute(decision.instance, when)

    def _start_background(self, agent: AgentNode, when: float) -> None:
        spec = self.forest.tick_idle(agent.id, when, self.rng)
        if spec is None:
            return
        request = self._autonomous_request(agent, spec, Priority.BACKGROUND,
                                           SOURCE_BACKGROUND)
        decision = self.forest.handle_action(agent.id, request, when)
        if decision.verdict is Verdict.EXECUTE:
            rec = self.trace.emit(when, agent.id, BACKGROUND_STARTED,
                                  request.definition.action_type, request.params,
                                  Priority.BACKGROUND.label)
            decision.instance.start_record = rec
            self._after_execute(decision.instance, when)

    # -- helpers -----------------------------------------------------------

    def _autonomous_request(self, agent: AgentNode, spec: ActionSpec,
                            priority: Priority, source: str) -> ActionRequest:
        definition = self.registry.lookup(spec.action_type)
        values = tuple(validate_params(definition, list(spec.params)))
        if self.profile is not None:
            values = self.profile.resolve_auto_values(agent.id, definition,
                                                      values, self._auto_state)
        duration = (self.profile.duration_for(definition, values)
                    if self.profile is not None else definition.nominal_duration)
        return ActionRequest(definition=definition, values=values,
                             override_priority=priority, from_parent=True,
                             duration=duration, source=source)

    def _after_execute(self, instance: ActionInstance, when: float) -> None:
        if self.profile is None:
            return
        self.profile.apply_limb_state(self.limb_states, instance)
        expander = self.profile.expander_for(instance.action_type)
        if expander is not None:
            expander(self, instance, when)


def run(timeline: list[TimelineEvent], forest: Forest,
        clock: SimClock | None = None, seed: int = 0, *,
        registry: ActionRegistry, profile=None,
        routing: dict[str, str] | None = None) -> Trace:
    """Execute one timeline to settlement and return the trace."""
    sim = Simulation(forest, registry, profile=profile, clock=clock,
                     seed=seed, routing=routing)
    return sim.run(timeline)


def run_scenario(raw_text: str, profile, *, seed: int = 0,
                 speech_model: SpeechModel | None = None,
                 clock: SimClock | None = None,
                 strict_alg1: bool | None = None,
                 advance_cap: float | None = None,
                 forest_config=None):
    """Parse, sanitize, compile, and simulate one scenario end to end.

    Returns (trace, sanitization report, forest). The forest config comes
    from the profile unless overridden; strict_alg1, when given, overrides
    the config's flag.
    """
    registry = profile.registry
    speech, tags = parse_scenario(raw_text)
    kept, report = sanitize(tags, registry)
    model = speech_model or SpeechModel()
    cap = advance_cap if advance_cap is not None else profile.advance_cap
    timeline = compile_timeline(speech, kept, model, registry, advance_cap=cap)
    config = forest_config if forest_config is not None else profile.forest_config
    if strict_alg1 is not None:
        config = replace(config, strict_alg1=strict_alg1)
    forest = build_forest(config, registry)
    trace = run(timeline, forest, clock, seed, registry=registry,
                profile=profile, routing=config.routing)
    return trace, report, forest
