"""Scenario text parsing and sanitization.

A scenario is plain speech text with inline command tags of the form

    <action_type:param_1; param_2; ...; param_n>

Tags are never spoken: parsing excises them and records for each tag the
character offset in the cleaned speech text where it stood, so the
timeline compiler can fire it when that fragment is spoken.

Anything between angle brackets that does not match the grammar (no colon
after the identifier, or another "<" before the closing ">") is ordinary
speech and stays in the text. The only fatal input is a tag opener that is
never closed before the end of the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import ParamValidationError, ParseError
from .registry import ActionRegistry, render_params, validate_params

_OPENER_RE = re.compile(r"<([A-Za-z_][A-Za-z0-9_]*):")

REASON_UNKNOWN_ACTION = "unknown_action"
REASON_BAD_PARAMS = "bad_params"


@dataclass
class ActionTag:
    """One parsed command tag, anchored into the speech text."""

    action_type: str
    params: tuple[str, ...]
    char_offset: int
    # Typed parameter values, filled by sanitize(); not part of identity.
    normalized: tuple | None = field(default=None, compare=False)

    def render(self) -> str:
        return f"<{self.action_type}:{';'.join(self.params)}>"


@dataclass
class DroppedTag:
    tag: ActionTag
    reason: str  # REASON_UNKNOWN_ACTION or REASON_BAD_PARAMS
    detail: str


@dataclass
class RepairedTag:
    tag: ActionTag
    repair: str


@dataclass
class SanitizationReport:
    dropped: list[DroppedTag] = field(default_factory=list)
    repaired: list[RepairedTag] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.dropped

    def summary(self) -> str:
        lines = [f"dropped: {len(self.dropped)}, repaired: {len(self.repaired)}"]
        for d in self.dropped:
            lines.append(f"  drop {d.tag.render()} [{d.reason}] {d.detail}")
        for r in self.repaired:
            lines.append(f"  repair {r.tag.render()}: {r.repair}")
        return "\n".join(lines)


@dataclass
class GenerationParams:
    """Knobs for scenario generation; also the cache lookup key."""

    target_length: int
    style: str  # "formal" | "humorous"
    audience: str  # "schoolchildren" | "adults_nontechnical" | "specialists"

    STYLES = ("formal", "humorous")
    AUDIENCES = ("schoolchildren", "adults_nontechnical", "specialists")

    def check(self) -> None:
        if self.target_length <= 0:
            raise ValueError("target_length must be positive")
        if self.style not in self.STYLES:
            raise ValueError(f"style must be one of {self.STYLES}")
        if self.audience not in self.AUDIENCES:
            raise ValueError(f"audience must be one of {self.AUDIENCES}")


@dataclass
class ScenarioDocument:
    raw_text: str
    metadata: GenerationParams | None = None


def _scan(raw: str) -> list[tuple]:
    """Split raw text into ("text", str) and ("tag", type, params) pieces."""
    pieces: list[tuple] = []
    i = 0
    while i < len(raw):
        m = _OPENER_RE.search(raw, i)
        if m is None:
            pieces.append(("text", raw[i:]))
            break
        if m.start() > i:
            pieces.append(("text", raw[i:m.start()]))
        close = raw.find(">", m.end())
        if close == -1:
            raise ParseError(
                f"tag opener <{m.group(1)}: at position {m.start()} is never closed")
        reopen = raw.find("<", m.end())
        if reopen != -1 and reopen < close:
            # Another "<" inside the body: the opener is literal speech.
            pieces.append(("text", raw[m.start():reopen]))
            i = reopen
            continue
        body = raw[m.end():close]
        params = tuple(p.strip() for p in body.split(";")) if body.strip() else ()
        pieces.append(("tag", m.group(1), params))
        i = close + 1
    return pieces


def parse_scenario(raw_text: str) -> tuple[str, list[ActionTag]]:
    """Separate speech text from its embedded tags.

    Returns the speech with all well-formed tags excised (whitespace
    around an excised tag collapses to a single space) and the tags with
    offsets into that speech. Offsets point at the start of the text
    fragment the tag precedes.
    """
    pieces = _scan(raw_text)
    speech = ""
    tags: list[ActionTag] = []
    pending: list[tuple[str, tuple[str, ...]]] = []
    for piece in pieces:
        if piece[0] == "tag":
            pending.append((piece[1], piece[2]))
            continue
        text = piece[1]
        if pending:
            if speech == "":
                text = text.lstrip()
            elif speech[-1].isspace() and text[:1].isspace():
                speech = speech.rstrip() + " "
                text = text.lstrip()
            offset = len(speech)
            for action_type, params in pending:
                tags.append(ActionTag(action_type, params, offset))
            pending = []
        speech += text
    if pending:
        speech = speech.rstrip()
        for action_type, params in pending:
            tags.append(ActionTag(action_type, params, len(speech)))
    return speech, tags


def render_scenario(speech_text: str, tags: list[ActionTag], *, natural: bool = False) -> str:
    """Re-embed tags into speech text at their offsets.

    The default mode inserts tag text verbatim, which makes
    parse_scenario(render_scenario(s, t)) the identity on tag content and
    offsets. natural=True additionally pads a space after a tag when it
    would otherwise glue onto a following word, which reads better in
    generated files.
    """
    ordered = sorted(enumerate(tags), key=lambda it: (it[1].char_offset, it[0]))
    out: list[str] = []
    pos = 0
    for _, tag in ordered:
        if tag.char_offset < pos:
            raise ValueError("tag offsets must be non-decreasing")
        out.append(speech_text[pos:tag.char_offset])
        out.append(tag.render())
        pos = tag.char_offset
        if natural and pos < len(speech_text) and not speech_text[pos].isspace():
            out.append(" ")
    out.append(speech_text[pos:])
    return "".join(out)


def sanitize(tags: list[ActionTag],
             registry: ActionRegistry) -> tuple[list[ActionTag], SanitizationReport]:
    """Drop hallucinated tags, repair recoverable ones, keep the rest.

    Unknown action types and unrecoverable parameters are dropped with a
    reason; tags whose missing optional parameters can be filled from
    registry defaults are repaired and kept. Order of kept tags matches
    the input. Never raises: this is the recovery path for generated
    content.
    """
    report = SanitizationReport()
    kept: list[ActionTag] = []
    for tag in tags:
        definition = registry.get(tag.action_type)
        if definition is None:
            report.dropped.append(DroppedTag(tag, REASON_UNKNOWN_ACTION,
                                             f"no action {tag.action_type!r}"))
            continue
        try:
            values = validate_params(definition, list(tag.params))
        except ParamValidationError as exc:
            report.dropped.append(DroppedTag(tag, REASON_BAD_PARAMS, str(exc)))
            continue
        canonical = tuple(render_params(definition, values))
        clean = replace(tag, params=canonical)
        clean.normalized = tuple(values)
        if len(tag.params) < definition.arity:
            filled = [s.name for s in definition.param_schema[len(tag.params):]]
            report.repaired.append(RepairedTag(
                clean, f"filled optional {', '.join(filled)} from defaults"))
        kept.append(clean)
    return kept, report
