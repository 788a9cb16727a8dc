"""Total priority order used by the arbitration core.

Scenario commands carry levels 1..10. Two reserved levels sit below every
command so that defaults and background fillers always yield to commands,
and the arbitration rule handles them with no special cases:

    NONE < BACKGROUND < DEFAULT < level 1 < ... < level 10

NONE stands for "no active action" and is what comparisons see when an
agent is idle.
"""

from enum import IntEnum

from .errors import ConfigError

MIN_COMMAND_LEVEL = 1
MAX_COMMAND_LEVEL = 10

_COMMAND_BASE = 2  # enum value of command level 1 is _COMMAND_BASE + 1


class Priority(IntEnum):
    NONE = 0
    BACKGROUND = 1
    DEFAULT = 2
    LEVEL_1 = 3
    LEVEL_2 = 4
    LEVEL_3 = 5
    LEVEL_4 = 6
    LEVEL_5 = 7
    LEVEL_6 = 8
    LEVEL_7 = 9
    LEVEL_8 = 10
    LEVEL_9 = 11
    LEVEL_10 = 12

    @property
    def is_command(self) -> bool:
        return self >= Priority.LEVEL_1

    @property
    def command_level(self) -> int | None:
        """Scenario-facing level (1..10), or None for reserved levels."""
        if not self.is_command:
            return None
        return int(self) - _COMMAND_BASE

    @property
    def label(self) -> str:
        if self is Priority.NONE:
            return "none"
        if self is Priority.BACKGROUND:
            return "background"
        if self is Priority.DEFAULT:
            return "default"
        return str(self.command_level)


def command_priority(level: int) -> Priority:
    """Map a scenario priority level (1..10) onto the internal order."""
    if not MIN_COMMAND_LEVEL <= level <= MAX_COMMAND_LEVEL:
        raise ConfigError(f"command priority level must be in "
                          f"[{MIN_COMMAND_LEVEL}, {MAX_COMMAND_LEVEL}], got {level}")
    return Priority(level + _COMMAND_BASE)


def parse_priority(label: str) -> Priority:
    """Inverse of Priority.label, for reading traces back."""
    simple = {"none": Priority.NONE,
              "background": Priority.BACKGROUND,
              "default": Priority.DEFAULT}
    if label in simple:
        return simple[label]
    return command_priority(int(label))
