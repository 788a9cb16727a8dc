"""Forest construction and command routing.

The dispatcher owns no behavior state: it builds the agent forest from
declarative configuration, resolves each timeline event to its owning
agent, forwards the request, and can interrupt everything globally. All
arbitration happens inside the forest; rebuilding the dispatcher from the
same configuration leaves behavior unchanged.

Routing order for an event: an explicit per-action-type override from the
configuration wins; otherwise, if the action's first parameter names an
agent (limb-parameterized actions like animations and poses), that agent
is the target; otherwise the registry's owning agent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .agents import (
    ActionRequest,
    ActionSpec,
    AgentNode,
    ArbitrationDecision,
    Forest,
    Verdict,
)
from .errors import ConfigError, UnroutableActionError
from .registry import ActionRegistry, ParamKind
from .timeline import TimelineEvent
from .trace import DISPATCHED, EXECUTED, IGNORED, Trace


@dataclass
class AgentDecl:
    """One agent row in a forest configuration."""

    id: str
    parent: str | None = None
    default_behavior: ActionSpec | None = None
    background_actions: list[ActionSpec] = field(default_factory=list)
    default_return_delay: float = 1.5
    background_threshold: float = 10.0


@dataclass
class SceneConfig:
    """Scripted stand-in for perception: listener and exhibit positions."""

    listeners: list[tuple[float, float, float]] = field(default_factory=list)
    exhibits: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def group_center(self) -> tuple[float, float, float]:
        if not self.listeners:
            return (1.0, 0.0, 1.5)
        n = len(self.listeners)
        return (sum(p[0] for p in self.listeners) / n,
                sum(p[1] for p in self.listeners) / n,
                sum(p[2] for p in self.listeners) / n)


@dataclass
class ForestConfig:
    agents: list[AgentDecl] = field(default_factory=list)
    routing: dict[str, str] = field(default_factory=dict)
    strict_alg1: bool = False
    scene: SceneConfig = field(default_factory=SceneConfig)


def _spec_from_json(rec: dict | None) -> ActionSpec | None:
    if rec is None:
        return None
    return ActionSpec(rec["action_type"], tuple(rec.get("params", [])))


def _spec_to_json(spec: ActionSpec | None) -> dict | None:
    if spec is None:
        return None
    return {"action_type": spec.action_type, "params": list(spec.params)}


def load_forest_config(path: str | Path) -> ForestConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    agents = [AgentDecl(
        id=rec["id"],
        parent=rec.get("parent"),
        default_behavior=_spec_from_json(rec.get("default_behavior")),
        background_actions=[_spec_from_json(b) for b in rec.get("background_actions", [])],
        default_return_delay=float(rec.get("default_return_delay", 1.5)),
        background_threshold=float(rec.get("background_threshold", 10.0)),
    ) for rec in doc.get("agents", [])]
    scene_doc = doc.get("scene", {})
    scene = SceneConfig(
        listeners=[tuple(p) for p in scene_doc.get("listeners", [])],
        exhibits={k: tuple(v) for k, v in scene_doc.get("exhibits", {}).items()},
    )
    return ForestConfig(agents=agents,
                        routing=dict(doc.get("routing", {})),
                        strict_alg1=bool(doc.get("strict_alg1", False)),
                        scene=scene)


def dump_forest_config(config: ForestConfig, path: str | Path) -> None:
    doc = {
        "strict_alg1": config.strict_alg1,
        "agents": [{
            "id": a.id,
            "parent": a.parent,
            "default_behavior": _spec_to_json(a.default_behavior),
            "background_actions": [_spec_to_json(b) for b in a.background_actions],
            "default_return_delay": a.default_return_delay,
            "background_threshold": a.background_threshold,
        } for a in config.agents],
        "routing": config.routing,
        "scene": {
            "listeners": [list(p) for p in config.scene.listeners],
            "exhibits": {k: list(v) for k, v in config.scene.exhibits.items()},
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def build_forest(config: ForestConfig, registry: ActionRegistry,
                 *, trace: Trace | None = None, now: float = 0.0) -> Forest:
    """Materialize a forest: validated structure, all agents active and idle.

    Raises ConfigError naming the first violated invariant: duplicate ids,
    missing parents, cycles, routing to unknown agents, configured
    behaviors that are not in the registry, or registry owners that are
    not in the forest.
    """
    ids = [a.id for a in config.agents]
    seen: set[str] = set()
    for agent_id in ids:
        if agent_id in seen:
            raise ConfigError(f"duplicate agent id {agent_id!r}")
        seen.add(agent_id)
    by_id = {a.id: a for a in config.agents}
    for decl in config.agents:
        if decl.parent is not None and decl.parent not in by_id:
            raise ConfigError(f"agent {decl.id!r} has unknown parent {decl.parent!r}")
    # Walking parent links from every node must terminate at a root.
    for decl in config.agents:
        slow = decl.parent
        steps = 0
        while slow is not None:
            steps += 1
            if steps > len(config.agents):
                raise ConfigError(f"cycle in parent links involving {decl.id!r}")
            slow = by_id[slow].parent
    for action_type, target in config.routing.items():
        if target not in by_id:
            raise ConfigError(
                f"routing for {action_type!r} targets unknown agent {target!r}")
    for decl in config.agents:
        for spec in filter(None, [decl.default_behavior, *decl.background_actions]):
            if spec.action_type not in registry:
                raise ConfigError(
                    f"agent {decl.id!r} configures unregistered action "
                    f"{spec.action_type!r}")
    for definition in registry.definitions():
        if definition.owner_agent not in by_id:
            raise ConfigError(
                f"action {definition.action_type!r} is owned by unknown agent "
                f"{definition.owner_agent!r}")

    forest = Forest(strict_alg1=config.strict_alg1, trace=trace)
    for decl in config.agents:
        forest.add_agent(AgentNode(
            id=decl.id,
            parent=decl.parent,
            default_behavior=decl.default_behavior,
            background_actions=list(decl.background_actions),
            default_return_delay=decl.default_return_delay,
            background_threshold=decl.background_threshold,
            idle_since=now,
        ))
    for decl in config.agents:
        if decl.parent is not None:
            forest.agent(decl.parent).children.append(decl.id)
    # Everyone starts idle with the default-return timer armed.
    for node in forest.agents.values():
        if node.default_behavior is not None:
            node.pending_default_at = now + node.default_return_delay
    return forest


class Dispatcher:
    """Stateless router between the timeline and the forest."""

    def __init__(self, forest: Forest, registry: ActionRegistry,
                 routing: dict[str, str] | None = None,
                 duration_fn=None):
        self.forest = forest
        self.registry = registry
        self.routing = dict(routing or {})
        # Maps (definition, normalized values) to a concrete duration.
        self.duration_fn = duration_fn or (lambda d, v: d.nominal_duration)

    def resolve_target(self, action_type: str, values: tuple) -> str:
        if action_type in self.routing:
            return self.routing[action_type]
        definition = self.registry.get(action_type)
        if definition is None:
            raise UnroutableActionError(f"no agent owns action {action_type!r}")
        if definition.param_schema and \
                definition.param_schema[0].kind is ParamKind.IDENTIFIER and values:
            first = values[0]
            if isinstance(first, str) and first in self.forest.agents:
                return first
        if definition.owner_agent not in self.forest.agents:
            raise UnroutableActionError(
                f"owner {definition.owner_agent!r} of {action_type!r} is not "
                "in the forest")
        return definition.owner_agent

    def dispatch(self, event: TimelineEvent, now: float,
                 *, cause: int | None = None) -> ArbitrationDecision:
        """Forward one event to its agent and trace the outcome."""
        target = self.resolve_target(event.action_type, event.params)
        request = ActionRequest(
            definition=event.definition,
            values=event.params,
            from_parent=False,
            duration=self.duration_fn(event.definition, event.params),
        )
        rec = self.forest.trace.emit(now, target, DISPATCHED, event.action_type,
                                     request.params, request.priority.label,
                                     cause=cause)
        decision = self.forest.handle_action(target, request, now, cause=rec)
        kind = EXECUTED if decision.verdict is Verdict.EXECUTE else IGNORED
        out = self.forest.trace.emit(now, target, kind, event.action_type,
                                     request.params,
                                     decision.effective_priority.label, cause=rec)
        if decision.instance is not None:
            decision.instance.start_record = out
        return decision

    def interrupt_all(self, now: float) -> int:
        """Cancel every agent's current action; agents stay active.

        Returns how many actions were running at the moment of the
        interrupt (composite parts count individually).
        """
        cause = self.forest.trace.warn(now, "", "global_interrupt",
                                       "all agents interrupted", severity="info")
        count = sum(1 for a in self.forest.agents.values()
                    if a.current is not None)
        for agent_id in self.forest.agents:
            self.forest.cancel_action(agent_id, now, cause=cause)
        return count
