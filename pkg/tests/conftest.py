import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tourbot.agents import ActionRequest, Forest, AgentNode
from tourbot.cli import demo_scenario_text
from tourbot.mentor1 import mentor1_profile
from tourbot.priorities import command_priority
from tourbot.registry import (
    ActionDefinition,
    ActionRegistry,
    DurationClass,
    ParamSpec,
)


@pytest.fixture
def profile():
    return mentor1_profile()


@pytest.fixture
def registry(profile):
    return profile.registry


@pytest.fixture
def demo_text():
    return demo_scenario_text()


def make_definition(action_type="work", base_priority=3, owner="solo",
                    prolonged=True, nominal=1.0, schema=()):
    return ActionDefinition(
        action_type=action_type,
        param_schema=tuple(schema),
        duration_class=DurationClass.PROLONGED if prolonged
        else DurationClass.INSTANTANEOUS,
        nominal_duration=nominal if prolonged else 0.0,
        base_priority=base_priority,
        owner_agent=owner,
    )


def command_request(level, *, from_parent=False, action_type="work",
                    duration=None):
    """A bare request at a given command level, for engine unit tests."""
    definition = make_definition(action_type=action_type, base_priority=min(level, 10))
    return ActionRequest(definition=definition, values=(),
                         override_priority=command_priority(level),
                         from_parent=from_parent, duration=duration)


def build_chain(ids, parents):
    """Forest from parallel id/parent lists, all agents active and idle."""
    forest = Forest()
    for agent_id, parent in zip(ids, parents):
        forest.add_agent(AgentNode(id=agent_id, parent=parent))
    for agent_id, parent in zip(ids, parents):
        if parent is not None:
            forest.agent(parent).children.append(agent_id)
    return forest


def random_forest_shape(rng: random.Random, max_agents=5, max_depth=3):
    """Random parent vector with bounded depth; index 0 is always a root."""
    n = rng.randint(1, max_agents)
    ids = [f"a{i}" for i in range(n)]
    parents: list[str | None] = [None]
    depth = {ids[0]: 0}
    for i in range(1, n):
        choices = [None] + [p for p in ids[:i] if depth[p] < max_depth - 1]
        parent = rng.choice(choices)
        parents.append(parent)
        depth[ids[i]] = 0 if parent is None else depth[parent] + 1
    return ids, parents
