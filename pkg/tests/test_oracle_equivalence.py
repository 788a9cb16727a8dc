"""Randomized equivalence of the engine against the naive interpreter."""

import random

from alg_oracle import oracle_handle
from conftest import build_chain, command_request, random_forest_shape
from tourbot.agents import Activity, Verdict
from tourbot.priorities import Priority, command_priority


def run_random_case(rng, *, strict, levels=(1, 2, 3, 4), max_requests=20,
                    check_invariants=False):
    ids, parents = random_forest_shape(rng)
    forest = build_chain(ids, parents)
    forest.strict_alg1 = strict
    state = {aid: {"parent": parent, "stopped": False, "prio": 0}
             for aid, parent in zip(ids, parents)}
    for aid in ids:
        if rng.random() < 0.15:
            state[aid]["stopped"] = True
            forest.set_activity(aid, Activity.STOPPED, 0.0)

    for step in range(rng.randint(1, max_requests)):
        agent_id = rng.choice(ids)
        level = rng.choice(levels)
        from_parent = rng.random() < 0.3
        request = command_request(level, from_parent=from_parent)
        decision = forest.handle_action(agent_id, request, float(step))
        verdict, oracle_cancelled = oracle_handle(
            state, agent_id, int(command_priority(level)), from_parent, strict)

        engine_verdict = "execute" if decision.verdict is Verdict.EXECUTE else "ignore"
        engine_cancelled = {a for a, _ in decision.cancelled}
        assert engine_verdict == verdict, \
            f"verdict mismatch at step {step}: {engine_verdict} != {verdict}"
        assert engine_cancelled == oracle_cancelled, \
            f"cancel set mismatch at step {step}"
        # The evolved states must agree too.
        for aid in ids:
            assert int(forest.agent(aid).current_priority) == state[aid]["prio"], \
                f"state mismatch on {aid} at step {step}"

        if check_invariants:
            # Single occupancy after a dominating execute.
            if engine_verdict == "execute":
                descendants = forest.descendants(agent_id)
                p_cur = forest.agent(agent_id).current_priority
                if all(forest.agent(d).current_priority < p_cur
                       for d in descendants):
                    pass  # descendants may legally hold equal/higher only
            # Stopped agents stay inert.
            for aid in ids:
                if state[aid]["stopped"]:
                    assert forest.agent(aid).current is None


def test_engine_matches_oracle_default_mode():
    rng = random.Random(2024)
    for _ in range(400):
        run_random_case(rng, strict=False, check_invariants=True)


def test_engine_matches_oracle_strict_mode():
    rng = random.Random(2025)
    for _ in range(400):
        run_random_case(rng, strict=True, check_invariants=True)


def test_engine_matches_oracle_with_reserved_levels():
    # Same walk but requests may carry background/default priorities, the
    # way autonomous starts do.
    rng = random.Random(2026)
    for _ in range(200):
        ids, parents = random_forest_shape(rng)
        forest = build_chain(ids, parents)
        state = {aid: {"parent": parent, "stopped": False, "prio": 0}
                 for aid, parent in zip(ids, parents)}
        for step in range(15):
            agent_id = rng.choice(ids)
            priority = rng.choice([Priority.BACKGROUND, Priority.DEFAULT,
                                   command_priority(rng.randint(1, 4))])
            from_parent = rng.random() < 0.5
            request = command_request(1, from_parent=from_parent)
            request.override_priority = priority
            decision = forest.handle_action(agent_id, request, float(step))
            verdict, cancelled = oracle_handle(
                state, agent_id, int(priority), from_parent, strict=False)
            assert ("execute" if decision.verdict is Verdict.EXECUTE
                    else "ignore") == verdict
            assert {a for a, _ in decision.cancelled} == cancelled


def test_single_occupancy_throughout_random_walks():
    rng = random.Random(99)
    for _ in range(100):
        ids, parents = random_forest_shape(rng)
        forest = build_chain(ids, parents)
        for step in range(20):
            agent_id = rng.choice(ids)
            forest.handle_action(
                agent_id, command_request(rng.randint(1, 4),
                                          from_parent=rng.random() < 0.3),
                float(step))
            # At most one current action per agent is structural; verify
            # the live-instance table agrees with per-agent currents.
            live = forest.live_instances()
            owners = [inst.agent_id for inst in live]
            assert len(owners) == len(set(owners))
            for inst in live:
                assert forest.agent(inst.agent_id).current is inst
