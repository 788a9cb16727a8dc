"""Action registry: the universe of actions an agent forest can perform.

Every command a scenario may issue is declared here with a parameter
schema, a duration class, a base priority, and an owning agent. Anything
not in the registry is treated as a hallucinated command and dropped by
sanitization; anything in it can have its raw string parameters checked
and coerced before dispatch.

The registry is read-only once a run starts. Mutations (register calls,
file loads) happen only between runs, which keeps simulation traces
deterministic and makes the registry safe to share across readers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    ArityMismatchError,
    DuplicateActionError,
    InvalidDefinitionError,
    TypeMismatchError,
    UnknownActionError,
)
from .priorities import MAX_COMMAND_LEVEL, MIN_COMMAND_LEVEL

_IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

Point3 = tuple[float, float, float]


class ParamKind(str, Enum):
    IDENTIFIER = "identifier"
    INTEGER = "integer"
    REAL = "real"
    POINT3D = "point3d"


class DurationClass(str, Enum):
    INSTANTANEOUS = "instantaneous"
    PROLONGED = "prolonged"


@dataclass(frozen=True)
class ParamSpec:
    """One slot in an action's parameter schema.

    Optional parameters must carry a default; validation fills it in when
    the raw tag omits the trailing parameter.
    """

    name: str
    kind: ParamKind
    required: bool = True
    default: object = None


@dataclass(frozen=True)
class ActionDefinition:
    action_type: str
    param_schema: tuple[ParamSpec, ...]
    duration_class: DurationClass
    nominal_duration: float
    base_priority: int
    owner_agent: str
    resources: frozenset[str] = field(default_factory=frozenset)

    def check(self) -> None:
        """Raise InvalidDefinitionError on any invariant violation."""
        if not _IDENTIFIER_RE.match(self.action_type):
            raise InvalidDefinitionError(
                f"action_type {self.action_type!r} is not an identifier")
        if not MIN_COMMAND_LEVEL <= self.base_priority <= MAX_COMMAND_LEVEL:
            raise InvalidDefinitionError(
                f"{self.action_type}: base_priority must be in "
                f"[{MIN_COMMAND_LEVEL}, {MAX_COMMAND_LEVEL}], got {self.base_priority}")
        if self.duration_class is DurationClass.INSTANTANEOUS and self.nominal_duration != 0:
            raise InvalidDefinitionError(
                f"{self.action_type}: instantaneous actions must have nominal_duration 0")
        if self.nominal_duration < 0:
            raise InvalidDefinitionError(
                f"{self.action_type}: nominal_duration must be >= 0")
        if not self.owner_agent:
            raise InvalidDefinitionError(f"{self.action_type}: owner_agent is empty")
        seen_optional = False
        names = set()
        for spec in self.param_schema:
            if spec.name in names:
                raise InvalidDefinitionError(
                    f"{self.action_type}: duplicate param name {spec.name!r}")
            names.add(spec.name)
            if spec.required and seen_optional:
                raise InvalidDefinitionError(
                    f"{self.action_type}: required param {spec.name!r} "
                    "follows an optional one")
            if not spec.required:
                seen_optional = True
                if spec.default is None:
                    raise InvalidDefinitionError(
                        f"{self.action_type}: optional param {spec.name!r} "
                        "has no default")

    @property
    def arity(self) -> int:
        return len(self.param_schema)

    @property
    def required_arity(self) -> int:
        return sum(1 for p in self.param_schema if p.required)


def coerce_param(kind: ParamKind, raw: str, *, index: int) -> object:
    """Coerce one raw tag parameter to its schema kind."""
    raw = raw.strip()
    if kind is ParamKind.IDENTIFIER:
        if not _IDENTIFIER_RE.match(raw):
            raise TypeMismatchError(
                f"param {index + 1}: {raw!r} is not an identifier", param_index=index)
        return raw
    if kind is ParamKind.INTEGER:
        try:
            return int(raw)
        except ValueError:
            raise TypeMismatchError(
                f"param {index + 1}: {raw!r} is not an integer", param_index=index) from None
    if kind is ParamKind.REAL:
        try:
            return float(raw)
        except ValueError:
            raise TypeMismatchError(
                f"param {index + 1}: {raw!r} is not a real number", param_index=index) from None
    if kind is ParamKind.POINT3D:
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 3:
            raise TypeMismatchError(
                f"param {index + 1}: {raw!r} is not an x,y,z point", param_index=index)
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise TypeMismatchError(
                f"param {index + 1}: {raw!r} is not an x,y,z point", param_index=index) from None
    raise TypeMismatchError(f"param {index + 1}: unknown kind {kind}", param_index=index)


def render_param(kind: ParamKind, value: object) -> str:
    """Render a normalized value back to its canonical tag string."""
    if kind is ParamKind.POINT3D:
        return ",".join(repr(float(c)) for c in value)  # type: ignore[arg-type]
    if kind is ParamKind.REAL:
        return repr(float(value))  # type: ignore[arg-type]
    return str(value)


def validate_params(definition: ActionDefinition, raw_params: list[str]) -> list[object]:
    """Check raw tag parameters against the schema and coerce them.

    Missing optional parameters are filled from their registry defaults;
    the returned list always has exactly the schema arity. Raises
    ArityMismatchError or TypeMismatchError to report unrecoverable input;
    callers decide how to recover.
    """
    schema = definition.param_schema
    if len(raw_params) > len(schema):
        raise ArityMismatchError(
            f"{definition.action_type}: expected at most {len(schema)} params, "
            f"got {len(raw_params)}")
    if len(raw_params) < definition.required_arity:
        raise ArityMismatchError(
            f"{definition.action_type}: expected at least {definition.required_arity} "
            f"params, got {len(raw_params)}")
    out: list[object] = []
    for i, spec in enumerate(schema):
        if i < len(raw_params):
            out.append(coerce_param(spec.kind, raw_params[i], index=i))
        else:
            out.append(spec.default)
    return out


def render_params(definition: ActionDefinition, values: list[object]) -> list[str]:
    return [render_param(spec.kind, v) for spec, v in zip(definition.param_schema, values)]


class ActionRegistry:
    """Lookup table from action type to its definition."""

    def __init__(self) -> None:
        self._defs: dict[str, ActionDefinition] = {}

    def register(self, definition: ActionDefinition, *, overwrite: bool = False) -> None:
        definition.check()
        if definition.action_type in self._defs and not overwrite:
            raise DuplicateActionError(
                f"action {definition.action_type!r} is already registered")
        self._defs[definition.action_type] = definition

    def get(self, action_type: str) -> ActionDefinition | None:
        return self._defs.get(action_type)

    def lookup(self, action_type: str) -> ActionDefinition:
        try:
            return self._defs[action_type]
        except KeyError:
            raise UnknownActionError(f"no action {action_type!r} in registry") from None

    def __contains__(self, action_type: str) -> bool:
        return action_type in self._defs

    def __len__(self) -> int:
        return len(self._defs)

    def action_types(self) -> list[str]:
        return sorted(self._defs)

    def definitions(self) -> list[ActionDefinition]:
        return [self._defs[t] for t in self.action_types()]


# --- registry file format: one JSON record per line ---

def _spec_to_json(spec: ParamSpec) -> dict:
    rec: dict = {"name": spec.name, "kind": spec.kind.value, "required": spec.required}
    if not spec.required:
        rec["default"] = (list(spec.default) if spec.kind is ParamKind.POINT3D
                          else spec.default)
    return rec


def _spec_from_json(rec: dict) -> ParamSpec:
    kind = ParamKind(rec["kind"])
    default = rec.get("default")
    if default is not None and kind is ParamKind.POINT3D:
        default = tuple(float(c) for c in default)
    return ParamSpec(rec["name"], kind, rec.get("required", True), default)


def definition_to_json(definition: ActionDefinition) -> dict:
    return {
        "action_type": definition.action_type,
        "param_schema": [_spec_to_json(s) for s in definition.param_schema],
        "duration_class": definition.duration_class.value,
        "nominal_duration": definition.nominal_duration,
        "base_priority": definition.base_priority,
        "owner_agent": definition.owner_agent,
        "resources": sorted(definition.resources),
    }


def definition_from_json(rec: dict) -> ActionDefinition:
    return ActionDefinition(
        action_type=rec["action_type"],
        param_schema=tuple(_spec_from_json(s) for s in rec.get("param_schema", [])),
        duration_class=DurationClass(rec["duration_class"]),
        nominal_duration=float(rec["nominal_duration"]),
        base_priority=int(rec["base_priority"]),
        owner_agent=rec["owner_agent"],
        resources=frozenset(rec.get("resources", [])),
    )


def load_registry(path: str | Path) -> ActionRegistry:
    registry = ActionRegistry()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        registry.register(definition_from_json(json.loads(line)))
    return registry


def dump_registry(registry: ActionRegistry, path: str | Path) -> None:
    lines = [json.dumps(definition_to_json(d), ensure_ascii=False)
             for d in registry.definitions()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
