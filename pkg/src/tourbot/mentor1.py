"""MENTOR-1 robot profile: agents, actions, and conflict policies.

This is the concrete instantiation of the engine for the MENTOR-1 tour
guide: the agent forest (one tree rooted at the whole-android coordinator,
one at the emotion subsystem), the command vocabulary with priorities and
durations, the exhibit-interaction composite, mirrored pointing with the
freer arm, and the near-completion delay policy for prolonged motions.

Perception is scripted, not sensed: listener and exhibit positions come
from the scene configuration, face tracking cycles through listeners
deterministically, and the group center is their centroid. Coordinates are
in the robot frame with x forward and y to the robot's left; z is up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .agents import ActionRequest, ActionSpec, ActionInstance, Forest, SOURCE_DELEGATED
from .dispatch import AgentDecl, ForestConfig, SceneConfig
from .errors import NoArmAvailableError
from .priorities import Priority, command_priority
from .registry import (
    ActionDefinition,
    ActionRegistry,
    DurationClass,
    ParamKind,
    ParamSpec,
    Point3,
)

ANDROID = "android"
HEAD_AND_ARMS = "head_and_arms"
BOTH_ARMS = "both_arms"
RIGHT_ARM = "right_arm"
LEFT_ARM = "left_arm"
HEAD = "head"
CARRIAGE = "carriage"
EMOTION = "emotion"
BROWS = "brows"
EYES = "eyes"

ARM_JOINT_COUNT = 4

# Base command priorities: the composite must dominate its delegated parts,
# and facial tints must never cancel gestures.
PRIO_FACIAL = 2
PRIO_MOTION = 3
PRIO_ROTATE = 4
PRIO_INTERACT = 5

ANIM_UNIT_DURATION = 2.0
POSE_DURATION = 1.0
GAZE_DURATION = 0.8
POINT_DURATION = 1.5
TRACK_FACES_DURATION = 3.0
ROTATE_RATE_DEG = 45.0
MIN_ROTATE_DURATION = 0.2

# Identifier vocabulary used by prompt building and the offline generator.
# The registry itself only checks kinds, not membership.
EXPRESSIONS = ("neutral", "joy", "angry", "question", "surprise", "sad")
BROW_POSITIONS = ("neutral", "raised", "frown")
EYE_TINTS = ("neutral", "warm", "alert")
ANIMATIONS = {
    RIGHT_ARM: ("show_space", "wave", "sway", "posture_shift"),
    LEFT_ARM: ("show_space", "wave", "sway", "posture_shift"),
    BOTH_ARMS: ("stretch_both_ways", "open_wide"),
    HEAD: ("nodding", "shaking"),
    HEAD_AND_ARMS: ("greeting",),
}
POSES = {
    RIGHT_ARM: ("neutral", "raised"),
    LEFT_ARM: ("neutral", "raised"),
    BOTH_ARMS: ("neutral", "akimbo"),
    HEAD_AND_ARMS: ("neutral", "proud", "open"),
}


class DelayVerdict(Enum):
    ARBITRATE_NOW = "arbitrate_now"
    DELAY_UNTIL_COMPLETE = "delay_until_complete"


@dataclass
class ExhibitTarget:
    exhibit_id: str
    position: Point3


@dataclass
class LimbState:
    """Symbolic joint state, tracked for traces only."""

    limb_id: str
    joints: list[float]

    def set_joints(self, values: list[float]) -> None:
        if len(values) != len(self.joints):
            raise ValueError(
                f"{self.limb_id}: expected {len(self.joints)} joint values, "
                f"got {len(values)}")
        self.joints = list(values)


def mentor1_registry() -> ActionRegistry:
    """The command vocabulary available to scenarios."""
    ident = ParamKind.IDENTIFIER
    registry = ActionRegistry()

    def add(action_type, schema, duration_class, nominal, priority, owner, resources):
        registry.register(ActionDefinition(
            action_type=action_type,
            param_schema=tuple(schema),
            duration_class=duration_class,
            nominal_duration=nominal,
            base_priority=priority,
            owner_agent=owner,
            resources=frozenset(resources),
        ))

    inst = DurationClass.INSTANTANEOUS
    long = DurationClass.PROLONGED
    add("facial", [ParamSpec("expression", ident)], inst, 0.0,
        PRIO_FACIAL, EMOTION, {"face"})
    add("brows", [ParamSpec("position", ident)], inst, 0.0,
        PRIO_FACIAL, BROWS, {"brows"})
    add("eyes", [ParamSpec("tint", ident)], inst, 0.0,
        PRIO_FACIAL, EYES, {"eyes"})
    add("pose", [ParamSpec("limb", ident), ParamSpec("name", ident)],
        long, POSE_DURATION, PRIO_MOTION, HEAD_AND_ARMS, {"limbs"})
    add("anim", [ParamSpec("limb", ident), ParamSpec("name", ident),
                 ParamSpec("repeat", ParamKind.INTEGER, required=False, default=1)],
        long, ANIM_UNIT_DURATION, PRIO_MOTION, HEAD_AND_ARMS, {"limbs"})
    add("joints", [ParamSpec("limb", ident),
                   ParamSpec("j1", ParamKind.REAL),
                   ParamSpec("j2", ParamKind.REAL, required=False, default=0.0),
                   ParamSpec("j3", ParamKind.REAL, required=False, default=0.0),
                   ParamSpec("j4", ParamKind.REAL, required=False, default=0.0)],
        long, POSE_DURATION, PRIO_MOTION, HEAD_AND_ARMS, {"limbs"})
    add("gaze", [ParamSpec("target", ParamKind.POINT3D)],
        long, GAZE_DURATION, PRIO_MOTION, HEAD, {"head"})
    add("point", [ParamSpec("limb", ident), ParamSpec("target", ParamKind.POINT3D)],
        long, POINT_DURATION, PRIO_MOTION, HEAD_AND_ARMS, {"limbs"})
    add("rotate", [ParamSpec("target", ParamKind.POINT3D)],
        long, 2.0, PRIO_ROTATE, CARRIAGE, {"torso"})
    add("track_faces", [ParamSpec("listener", ident, required=False, default="auto")],
        long, TRACK_FACES_DURATION, 1, HEAD, {"head"})
    add("face_group", [], long, 1.0, 1, CARRIAGE, {"torso"})
    add("interact", [ParamSpec("exhibit", ident)],
        long, 4.0, PRIO_INTERACT, ANDROID, {"torso", "head", "limbs"})
    return registry


def default_scene() -> SceneConfig:
    return SceneConfig(
        listeners=[(2.0, -1.0, 1.6), (2.5, 0.8, 1.6), (3.0, 0.2, 1.6)],
        exhibits={
            "assembly_bay": (1.5, 2.0, 1.0),
            "sensor_wall": (2.0, -1.5, 1.2),
            "charging_dock": (3.0, 0.5, 0.8),
        },
    )


def mentor1_forest() -> ForestConfig:
    """Agent hierarchy and per-agent defaults for MENTOR-1.

    Limbs sit under the whole-android coordinator so exhibit interaction
    can preempt them; the emotion subsystem (with brows and eyes beneath
    it) is an independent tree, so facial work never conflicts with motion.
    """
    def anim(limb, name):
        return ActionSpec("anim", (limb, name, "1"))

    def pose(limb, name):
        return ActionSpec("pose", (limb, name))

    agents = [
        AgentDecl(ANDROID, parent=None),
        AgentDecl(HEAD_AND_ARMS, parent=ANDROID,
                  default_behavior=pose(HEAD_AND_ARMS, "neutral")),
        AgentDecl(BOTH_ARMS, parent=HEAD_AND_ARMS,
                  default_behavior=pose(BOTH_ARMS, "neutral")),
        AgentDecl(RIGHT_ARM, parent=BOTH_ARMS,
                  default_behavior=pose(RIGHT_ARM, "neutral"),
                  background_actions=[anim(RIGHT_ARM, "sway"),
                                      anim(RIGHT_ARM, "posture_shift")]),
        AgentDecl(LEFT_ARM, parent=BOTH_ARMS,
                  default_behavior=pose(LEFT_ARM, "neutral"),
                  background_actions=[anim(LEFT_ARM, "sway"),
                                      anim(LEFT_ARM, "posture_shift")]),
        AgentDecl(HEAD, parent=HEAD_AND_ARMS,
                  default_behavior=ActionSpec("track_faces"),
                  background_actions=[ActionSpec("track_faces")]),
        AgentDecl(CARRIAGE, parent=ANDROID,
                  default_behavior=ActionSpec("face_group")),
        AgentDecl(EMOTION, parent=None,
                  default_behavior=ActionSpec("facial", ("neutral",))),
        AgentDecl(BROWS, parent=EMOTION),
        AgentDecl(EYES, parent=EMOTION),
    ]
    return ForestConfig(agents=agents, routing={}, scene=default_scene())


def rotation_angle_deg(target: Point3) -> float:
    """Unsigned yaw from the robot's forward axis to the target."""
    return abs(math.degrees(math.atan2(target[1], target[0])))


def tag_examples() -> list[str]:
    """Concrete tag forms for the annotation prompt and the offline stub."""
    out = [f"<facial:{e}>" for e in EXPRESSIONS]
    out += [f"<brows:{p}>" for p in BROW_POSITIONS]
    out += [f"<eyes:{t}>" for t in EYE_TINTS]
    for limb, names in ANIMATIONS.items():
        out += [f"<anim:{limb};{name};1>" for name in names
                if name not in ("sway", "posture_shift")]
    for limb, names in POSES.items():
        out += [f"<pose:{limb};{name}>" for name in names if name != "neutral"]
    out.append("<anim:head;nodding;2>")
    for exhibit in default_scene().exhibits:
        out.append(f"<interact:{exhibit}>")
    return out


@dataclass
class RobotProfile:
    """Bundle of everything the executor needs beyond the bare forest."""

    registry: ActionRegistry
    forest_config: ForestConfig
    advance_cap: float = 1.0

    def duration_for(self, definition: ActionDefinition, values: tuple) -> float | None:
        """Concrete run time for one action instance; None = open-ended."""
        t = definition.action_type
        if t == "anim":
            return ANIM_UNIT_DURATION * max(1, int(values[2]))
        if t == "rotate":
            return max(MIN_ROTATE_DURATION,
                       rotation_angle_deg(values[0]) / ROTATE_RATE_DEG)
        if t == "interact":
            return None
        return definition.nominal_duration

    def expander_for(self, action_type: str):
        if action_type == "interact":
            return expand_interact
        return None

    def resolve_auto_values(self, agent_id: str, definition: ActionDefinition,
                            values: tuple, state: dict) -> tuple:
        """Fill scripted-perception placeholders in autonomous actions.

        Face tracking with the "auto" listener cycles through the scene's
        scripted listeners with a per-agent counter, so the pick is
        deterministic and independent of the run seed.
        """
        if definition.action_type == "track_faces" and values \
                and values[0] == "auto" and self.scene.listeners:
            key = (agent_id, "track_faces")
            k = state.get(key, 0)
            state[key] = k + 1
            values = (f"listener_{k % len(self.scene.listeners)}",) + tuple(values[1:])
        return values

    def initial_limb_states(self) -> dict[str, LimbState]:
        return {
            RIGHT_ARM: LimbState(RIGHT_ARM, [0.0] * ARM_JOINT_COUNT),
            LEFT_ARM: LimbState(LEFT_ARM, [0.0] * ARM_JOINT_COUNT),
            HEAD: LimbState(HEAD, [0.0, 0.0]),
        }

    def apply_limb_state(self, states: dict[str, LimbState],
                         instance: ActionInstance) -> None:
        """Update symbolic joint vectors for pose and joint commands."""
        if instance.action_type == "joints":
            limb = instance.values[0]
            if limb in states:
                angles = list(instance.values[1:1 + len(states[limb].joints)])
                angles += [0.0] * (len(states[limb].joints) - len(angles))
                states[limb].set_joints(angles)
        elif instance.action_type == "pose":
            limb = instance.values[0]
            if limb in states:
                value = 0.0 if instance.values[1] == "neutral" else 0.5
                states[limb].set_joints([value] * len(states[limb].joints))

    @property
    def scene(self) -> SceneConfig:
        return self.forest_config.scene


def mentor1_profile() -> RobotProfile:
    return RobotProfile(registry=mentor1_registry(), forest_config=mentor1_forest())


def delay_policy(current: ActionInstance | None, progress: float,
                 incoming: ActionRequest | None = None) -> DelayVerdict:
    """Protect nearly finished prolonged commands from preemption.

    A new operation is held back only when the agent's current action is a
    prolonged command more than 75 percent complete (strictly more: 0.75
    exactly still arbitrates). Defaults and background fillers are never
    protected; any command preempts them immediately.
    """
    del incoming  # the policy is unconditional on the newcomer
    if current is None or not current.priority.is_command:
        return DelayVerdict.ARBITRATE_NOW
    if not current.duration:
        return DelayVerdict.ARBITRATE_NOW
    if progress > 0.75:
        return DelayVerdict.DELAY_UNTIL_COMPLETE
    return DelayVerdict.ARBITRATE_NOW


def resolve_pointing(forest: Forest, target: ExhibitTarget,
                     *, registry: ActionRegistry,
                     priority: Priority | None = None) -> tuple[str, ActionRequest]:
    """Choose the freer arm for a pointing gesture, mirroring if needed.

    The freer arm is the idle one, or the one running lower-priority work;
    on a tie the arm on the target's side wins (positive y is the robot's
    left). The gesture is authored for the right arm, so picking the left
    arm flags the request as mirrored. Raises NoArmAvailableError when
    neither arm runs below the request's priority.
    """
    definition = registry.lookup("point")
    p_request = priority if priority is not None \
        else command_priority(definition.base_priority)
    arms = []
    for arm_id in (RIGHT_ARM, LEFT_ARM):
        agent = forest.agent(arm_id)
        if agent.current_priority < p_request:
            arms.append((agent.current_priority, arm_id))
    if not arms:
        raise NoArmAvailableError(
            f"both arms hold actions at or above priority {p_request.label}")
    same_side = LEFT_ARM if target.position[1] > 0 else RIGHT_ARM
    arms.sort(key=lambda it: (it[0], 0 if it[1] == same_side else 1))
    chosen = arms[0][1]
    request = ActionRequest(
        definition=definition,
        values=(chosen, tuple(float(c) for c in target.position)),
        override_priority=priority,
        from_parent=True,
        duration=POINT_DURATION,
        source=SOURCE_DELEGATED,
        mirrored=(chosen == LEFT_ARM),
    )
    return chosen, request


def expand_interact(sim, instance: ActionInstance, now: float) -> None:
    """Delegate the parts of an exhibit interaction, in a fixed order.

    The coordinator turns the torso to the exhibit, establishes gaze, and
    points with the freer arm. Sub-requests inherit the composite's
    priority; a part that loses arbitration becomes a trace warning and
    the rest continues. The composite completes when its last live part
    does, and cancelling it cancels every outstanding part.
    """
    forest = sim.forest
    registry = sim.profile.registry
    scene = sim.profile.scene
    exhibit_id = instance.values[0]
    position = scene.exhibits.get(exhibit_id)
    if position is None:
        sim.trace.warn(now, instance.agent_id, "unknown_exhibit",
                       f"no exhibit {exhibit_id!r} in scene",
                       cause=instance.start_record)
        instance.children_done_at = now
        return
    target = ExhibitTarget(exhibit_id, position)

    subrequests: list[tuple[str, ActionRequest]] = []
    point3 = tuple(float(c) for c in position)
    for action_type, values in (("rotate", (point3,)), ("gaze", (point3,))):
        definition = registry.lookup(action_type)
        subrequests.append((definition.owner_agent, ActionRequest(
            definition=definition,
            values=values,
            override_priority=instance.priority,
            from_parent=True,
            duration=sim.profile.duration_for(definition, values),
            source=SOURCE_DELEGATED,
        )))
    try:
        subrequests.append(resolve_pointing(forest, target, registry=registry,
                                            priority=instance.priority))
    except NoArmAvailableError as exc:
        sim.trace.warn(now, instance.agent_id, "no_arm_available", str(exc),
                       cause=instance.start_record)

    started_any = False
    for agent_id, request in subrequests:
        child = sim.submit_delegated(agent_id, request, now,
                                     cause=instance.start_record)
        if child is not None:
            forest.link_delegation(instance, child)
            started_any = True
    if not started_any:
        instance.children_done_at = now
