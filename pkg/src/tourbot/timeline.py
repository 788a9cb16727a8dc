"""Compile sanitized tags into a time-aligned event stream.

Trigger times come from a character-rate speech model: the engine has no
audio, so speaking time is estimated as characters spoken divided by a
configurable rate, plus a pause for each sentence terminator. Instantaneous
actions fire exactly when their anchor fragment is spoken; prolonged
actions fire early by a capped lead so the motion is underway when the
fragment arrives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnroutableActionError
from .registry import ActionDefinition, ActionRegistry, DurationClass, validate_params
from .scenario import ActionTag

DEFAULT_CHARS_PER_SECOND = 15.0
DEFAULT_PAUSES = {".": 0.3, "!": 0.3, "?": 0.3}
DEFAULT_ADVANCE_CAP = 1.0


@dataclass
class SpeechModel:
    """Character-rate timing model for synthesized speech."""

    chars_per_second: float = DEFAULT_CHARS_PER_SECOND
    pauses: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PAUSES))

    def __post_init__(self) -> None:
        if self.chars_per_second <= 0:
            raise ValueError("chars_per_second must be positive")
        if any(v < 0 for v in self.pauses.values()):
            raise ValueError("pause durations must be >= 0")

    def speak_time(self, speech_text: str, offset: int) -> float:
        """Seconds until the character at `offset` starts being spoken."""
        base = offset / self.chars_per_second
        extra = sum(self.pauses.get(c, 0.0) for c in speech_text[:offset])
        return base + extra


@dataclass
class TimelineEvent:
    trigger_time: float
    target_agent: str
    definition: ActionDefinition
    params: tuple
    origin: int  # char offset of the source tag

    @property
    def action_type(self) -> str:
        return self.definition.action_type


def compile_timeline(speech_text: str,
                     tags: list[ActionTag],
                     speech_model: SpeechModel,
                     registry: ActionRegistry,
                     *,
                     advance_cap: float = DEFAULT_ADVANCE_CAP) -> list[TimelineEvent]:
    """Turn anchored tags into a trigger-time-sorted event list.

    Tags must have passed sanitize(); unsanitized tags are validated here
    as a fallback and a schema failure propagates. Ties on trigger time
    keep char offset order, and equal offsets keep input order.
    """
    events: list[TimelineEvent] = []
    for index, tag in enumerate(tags):
        definition = registry.lookup(tag.action_type)
        if not definition.owner_agent:
            raise UnroutableActionError(
                f"action {tag.action_type!r} has no owning agent")
        values = tag.normalized
        if values is None:
            values = tuple(validate_params(definition, list(tag.params)))
        anchor = speech_model.speak_time(speech_text, tag.char_offset)
        if definition.duration_class is DurationClass.PROLONGED:
            lead = min(definition.nominal_duration, advance_cap)
            trigger = max(0.0, anchor - lead)
        else:
            trigger = anchor
        events.append(TimelineEvent(trigger, definition.owner_agent,
                                    definition, tuple(values), tag.char_offset))
    events.sort(key=lambda e: (e.trigger_time, e.origin))
    return events
