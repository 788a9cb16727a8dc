"""Hierarchical multi-agent arbitration core.

Agents form a forest: each agent owns one robot subsystem, holds at most
one current action with a priority, and may have a default behavior it
returns to after finishing work plus low-priority background fillers for
long idle stretches. Conflicts are resolved inside a tree by a single
arbitration rule over the request's priority and the agent's position:

  1. A stopped agent ignores everything.
  2. A request that did not come down from an ancestor must dominate the
     busiest ancestor: if some ancestor is active and the request's
     priority is higher, all ancestors' actions are cancelled; if an
     active ancestor is at least as high, the request is ignored. When no
     ancestor is active the literal rule would ignore the request too;
     default mode proceeds without cancelling anything, and the
     strict_alg1 flag restores the literal reading.
  3. The request then needs strictly higher priority than the agent's
     current action. If it also dominates every descendant, descendants'
     actions are cancelled; if some descendant is higher, the overlap is
     surfaced as a trace warning but execution still proceeds. The agent's
     own action is cancelled and replaced by the new one.

Arbitration for one forest is serialized: requests apply one at a time in
arrival order, so decisions are a deterministic function of the request
order and the clock.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from .errors import UnknownAgentError
from .priorities import Priority, command_priority
from .registry import ActionDefinition, render_params
from .trace import CLASS_WARN, Trace

DEFAULT_RETURN_DELAY = 1.5
BACKGROUND_THRESHOLD = 10.0

# How an action instance came to exist; shows up in trace analysis.
SOURCE_COMMAND = "command"
SOURCE_DEFAULT = "default"
SOURCE_BACKGROUND = "background"
SOURCE_DELEGATED = "delegated"


class Activity(Enum):
    ACTIVE = "active"
    STOPPED = "stopped"


class Verdict(Enum):
    EXECUTE = "execute"
    IGNORE = "ignore"
    DELAY = "delay"


@dataclass
class ActionSpec:
    """Configured action reference: type plus raw parameter strings."""

    action_type: str
    params: tuple[str, ...] = ()


@dataclass
class ActionInstance:
    """One concrete execution of an action on one agent."""

    instance_id: int
    action_type: str
    params: tuple[str, ...]
    values: tuple
    priority: Priority
    agent_id: str
    started_at: float
    duration: float | None  # None = open-ended (runs until children finish)
    source: str = SOURCE_COMMAND
    mirrored: bool = False
    parent_instance: int | None = None
    child_instances: set[int] = field(default_factory=set)
    children_done_at: float | None = None
    start_record: int | None = None

    @property
    def end_time(self) -> float | None:
        if self.duration is not None:
            return self.started_at + self.duration
        return self.children_done_at

    def progress(self, now: float) -> float:
        if not self.duration:
            return 1.0
        return min(1.0, max(0.0, (now - self.started_at) / self.duration))


@dataclass
class ActionRequest:
    """Input to arbitration: what to run, how urgent, and who asked."""

    definition: ActionDefinition
    values: tuple
    override_priority: Priority | None = None
    from_parent: bool = False
    duration: float | None = None
    source: str = SOURCE_COMMAND
    mirrored: bool = False

    @property
    def priority(self) -> Priority:
        if self.override_priority is not None:
            return self.override_priority
        return command_priority(self.definition.base_priority)

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(render_params(self.definition, list(self.values)))

    def resolved_duration(self) -> float | None:
        if self.duration is not None:
            return self.duration
        return self.definition.nominal_duration


@dataclass
class ArbitrationDecision:
    verdict: Verdict
    cancelled: list[tuple[str, ActionInstance]]
    effective_priority: Priority
    instance: ActionInstance | None = None


@dataclass
class AgentNode:
    id: str
    parent: str | None = None
    children: list[str] = field(default_factory=list)
    activity: Activity = Activity.ACTIVE
    current: ActionInstance | None = None
    default_behavior: ActionSpec | None = None
    background_actions: list[ActionSpec] = field(default_factory=list)
    default_return_delay: float = DEFAULT_RETURN_DELAY
    background_threshold: float = BACKGROUND_THRESHOLD
    idle_since: float | None = None
    pending_default_at: float | None = None
    pending_default_cause: int | None = None
    settled_in_default: bool = False

    @property
    def current_priority(self) -> Priority:
        return self.current.priority if self.current is not None else Priority.NONE


class Forest:
    """Authoritative agent state plus the arbitration rule."""

    def __init__(self, *, strict_alg1: bool = False, trace: Trace | None = None):
        self.agents: dict[str, AgentNode] = {}
        self.strict_alg1 = strict_alg1
        self.trace = trace if trace is not None else Trace()
        self._live: dict[int, ActionInstance] = {}
        self._seq = itertools.count(1)

    # -- structure ---------------------------------------------------------

    def add_agent(self, node: AgentNode) -> None:
        if node.id in self.agents:
            raise UnknownAgentError(f"duplicate agent id {node.id!r}")
        self.agents[node.id] = node

    def agent(self, agent_id: str) -> AgentNode:
        try:
            return self.agents[agent_id]
        except KeyError:
            raise UnknownAgentError(f"no agent {agent_id!r} in forest") from None

    def ancestors(self, agent_id: str) -> list[str]:
        out = []
        parent = self.agent(agent_id).parent
        while parent is not None:
            out.append(parent)
            parent = self.agent(parent).parent
        return out

    def descendants(self, agent_id: str) -> list[str]:
        out: list[str] = []
        frontier = list(self.agent(agent_id).children)
        while frontier:
            node = frontier.pop(0)
            out.append(node)
            frontier.extend(self.agent(node).children)
        return out

    def max_ancestor_priority(self, agent_id: str) -> Priority:
        prios = [self.agent(a).current_priority for a in self.ancestors(agent_id)]
        return max(prios, default=Priority.NONE)

    def max_descendant_priority(self, agent_id: str) -> Priority:
        prios = [self.agent(d).current_priority for d in self.descendants(agent_id)]
        return max(prios, default=Priority.NONE)

    def live_instances(self) -> list[ActionInstance]:
        return [self._live[i] for i in sorted(self._live)]

    def instance(self, instance_id: int) -> ActionInstance | None:
        return self._live.get(instance_id)

    # -- arbitration -------------------------------------------------------

    def handle_action(self, agent_id: str, request: ActionRequest, now: float,
                      *, cause: int | None = None) -> ArbitrationDecision:
        """Apply the arbitration rule for one request against one agent."""
        agent = self.agent(agent_id)
        p_a = request.priority
        if agent.activity is Activity.STOPPED:
            return ArbitrationDecision(Verdict.IGNORE, [], p_a)

        cancelled: list[tuple[str, ActionInstance]] = []
        if agent.parent is not None and not request.from_parent:
            p_anc = self.max_ancestor_priority(agent_id)
            if p_anc != Priority.NONE:
                if p_a > p_anc:
                    for anc in self.ancestors(agent_id):
                        inst = self._cancel_current(anc, now, cause=cause)
                        if inst is not None:
                            cancelled.append((anc, inst))
                else:
                    return ArbitrationDecision(Verdict.IGNORE, cancelled, p_a)
            elif self.strict_alg1:
                return ArbitrationDecision(Verdict.IGNORE, cancelled, p_a)

        if agent.current_priority < p_a:
            p_des = self.max_descendant_priority(agent_id)
            if p_des < p_a:
                for desc in self.descendants(agent_id):
                    inst = self._cancel_current(desc, now, cause=cause)
                    if inst is not None:
                        cancelled.append((desc, inst))
            elif p_des > p_a:
                self.trace.warn(now, agent_id, "resource_overlap",
                                f"descendant action outranks new "
                                f"{request.definition.action_type} "
                                f"({p_des.label} >= {p_a.label})",
                                severity=CLASS_WARN, cause=cause)
            own = self._cancel_current(agent_id, now, cause=cause)
            if own is not None:
                cancelled.append((agent_id, own))
            instance = self._start(agent, request, p_a, now)
            return ArbitrationDecision(Verdict.EXECUTE, cancelled, p_a, instance)
        return ArbitrationDecision(Verdict.IGNORE, cancelled, p_a)

    # -- lifecycle ---------------------------------------------------------

    def _start(self, agent: AgentNode, request: ActionRequest,
               priority: Priority, now: float) -> ActionInstance:
        instance = ActionInstance(
            instance_id=next(self._seq),
            action_type=request.definition.action_type,
            params=request.params,
            values=tuple(request.values),
            priority=priority,
            agent_id=agent.id,
            started_at=now,
            duration=request.resolved_duration(),
            source=request.source,
            mirrored=request.mirrored,
        )
        agent.current = instance
        agent.idle_since = None
        agent.pending_default_at = None
        agent.pending_default_cause = None
        agent.settled_in_default = False
        self._live[instance.instance_id] = instance
        return instance

    def _go_idle(self, agent: AgentNode, now: float, *, schedule_default: bool,
                 cause: int | None) -> None:
        agent.current = None
        agent.idle_since = now
        if schedule_default and agent.default_behavior is not None \
                and agent.activity is Activity.ACTIVE:
            agent.pending_default_at = now + agent.default_return_delay
            agent.pending_default_cause = cause
        else:
            agent.pending_default_at = None
            agent.pending_default_cause = None

    def _unlink_from_parent(self, instance: ActionInstance, now: float) -> None:
        if instance.parent_instance is None:
            return
        parent = self._live.get(instance.parent_instance)
        if parent is not None:
            parent.child_instances.discard(instance.instance_id)
            if not parent.child_instances and parent.duration is None:
                parent.children_done_at = now

    def _cancel_current(self, agent_id: str, now: float,
                        *, cause: int | None) -> ActionInstance | None:
        agent = self.agent(agent_id)
        instance = agent.current
        if instance is None:
            return None
        self._go_idle(agent, now, schedule_default=True, cause=None)
        rec = self.trace.emit(now, agent_id, "cancelled", instance.action_type,
                              instance.params, instance.priority.label, cause=cause)
        if agent.pending_default_at is not None:
            agent.pending_default_cause = rec
        self._live.pop(instance.instance_id, None)
        self._unlink_from_parent(instance, now)
        # A cancelled composite takes its outstanding delegated actions down.
        for child_id in sorted(instance.child_instances):
            child = self._live.get(child_id)
            if child is not None:
                self._cancel_current(child.agent_id, now, cause=rec)
        return instance

    def cancel_action(self, agent_id: str, now: float,
                      *, cause: int | None = None) -> ActionInstance | None:
        """Cancel the agent's current action, if any; idempotent when idle."""
        return self._cancel_current(agent_id, now, cause=cause)

    def on_action_complete(self, agent_id: str, now: float,
                           *, cause: int | None = None) -> ActionInstance | None:
        """Clear a finished action and arm the default-return timer.

        Completing the default behavior itself settles the agent instead of
        rescheduling it; completing anything else starts the timer so the
        agent drifts back to its default after the configured delay.
        """
        agent = self.agent(agent_id)
        instance = agent.current
        if instance is None:
            return None
        was_default = instance.source == SOURCE_DEFAULT
        self._go_idle(agent, now, schedule_default=not was_default, cause=cause)
        if was_default:
            agent.settled_in_default = True
        self._live.pop(instance.instance_id, None)
        self._unlink_from_parent(instance, now)
        return instance

    def tick_idle(self, agent_id: str, now: float, rng) -> ActionSpec | None:
        """Pick a background action once extended inactivity is reached.

        Returns the seeded-random pick, or None when the agent is busy,
        stopped, has no backgrounds, or has not idled long enough. The
        caller starts the returned spec at background priority.
        """
        agent = self.agent(agent_id)
        if (agent.activity is not Activity.ACTIVE or agent.current is not None
                or not agent.background_actions or agent.idle_since is None
                or agent.pending_default_at is not None):
            return None
        # Tolerant form of now - idle_since >= threshold; must agree with the
        # executor's due-time computation despite float rounding.
        if now + 1e-9 < agent.idle_since + agent.background_threshold:
            return None
        return rng.choice(agent.background_actions)

    def set_activity(self, agent_id: str, activity: Activity, now: float,
                     *, cause: int | None = None) -> None:
        """Stop an agent (cancelling its work) or re-enable it."""
        agent = self.agent(agent_id)
        if agent.activity is activity:
            return
        if activity is Activity.STOPPED:
            self._cancel_current(agent_id, now, cause=cause)
            agent.activity = Activity.STOPPED
            agent.idle_since = None
            agent.pending_default_at = None
            agent.pending_default_cause = None
            agent.settled_in_default = False
        else:
            agent.activity = Activity.ACTIVE
            agent.idle_since = now
            agent.settled_in_default = False
            if agent.default_behavior is not None:
                agent.pending_default_at = now + agent.default_return_delay
                agent.pending_default_cause = cause

    def link_delegation(self, parent: ActionInstance, child: ActionInstance) -> None:
        parent.child_instances.add(child.instance_id)
        child.parent_instance = parent.instance_id
        parent.children_done_at = None
