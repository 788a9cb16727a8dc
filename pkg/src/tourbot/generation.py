"""Two-stage scenario generation.

Stage one compresses an exhibit description into a stylized first-person
narrative tuned by length, style, and audience. Stage two inserts
nonverbal action tags into that narrative without touching the speech
text. Both stages validate their output: the narrative must land within a
tolerance band of the target length, and the annotated text stripped of
tags must equal the input narrative up to whitespace. Each check allows
one regeneration before reporting failure.

Prompt templates live as text assets next to this module; changing how
scenarios read requires only editing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import LengthViolationError, NarrativeMutatedError, ParseError
from .providers import ProviderRequest
from .registry import ActionRegistry, ParamKind
from .scenario import (
    GenerationParams,
    SanitizationReport,
    ScenarioDocument,
    parse_scenario,
    render_scenario,
    sanitize,
)

DEFAULT_PERSONA = ("MENTOR-1, an anthropomorphic robot guide with an expressive "
                   "face and two arms, leading visitors through a robotics "
                   "laboratory")
DEFAULT_LOCATION = "the robotics laboratory exhibition hall"
LENGTH_TOLERANCE = 0.2

_SYSTEM_STAGE1 = ("You write spoken tour narration for a social robot. "
                  "Respond with the narration text only.")
_SYSTEM_STAGE2 = ("You annotate tour narration with inline action tags. "
                  "Respond with the annotated narration only.")

_PLACEHOLDER_VALUES = {
    ParamKind.IDENTIFIER: "name",
    ParamKind.INTEGER: "1",
    ParamKind.REAL: "0.5",
    ParamKind.POINT3D: "1.0,0.0,1.0",
}


@dataclass
class ExhibitDescription:
    exhibit_id: str
    title: str
    body: str

    def check(self) -> None:
        if not self.body.strip():
            raise ValueError("exhibit description body is empty")


def _template(name: str) -> str:
    return resources.files("tourbot").joinpath(f"prompts/{name}").read_text("utf-8")


def generic_tag_examples(registry: ActionRegistry) -> list[str]:
    """Schema-derived sample tags, used when no profile vocabulary exists."""
    out = []
    for definition in registry.definitions():
        params = ";".join(_PLACEHOLDER_VALUES[s.kind] for s in definition.param_schema)
        out.append(f"<{definition.action_type}:{params}>")
    return out


def build_stage1_request(desc: ExhibitDescription, params: GenerationParams,
                         *, persona: str = DEFAULT_PERSONA,
                         location: str = DEFAULT_LOCATION) -> ProviderRequest:
    params.check()
    desc.check()
    user = _template("stage1.txt").format(
        persona=persona, location=location, target_length=params.target_length,
        style=params.style, audience=params.audience,
        title=desc.title, body=desc.body)
    return ProviderRequest(system=_SYSTEM_STAGE1, user=user, temperature=0.8)


def build_stage2_request(narrative: str, tag_examples: list[str]) -> ProviderRequest:
    user = _template("stage2.txt").format(
        tag_examples="\n".join(tag_examples), narrative=narrative)
    return ProviderRequest(system=_SYSTEM_STAGE2, user=user, temperature=0.4)


def generate_narrative(desc: ExhibitDescription, params: GenerationParams,
                       provider, *, tolerance: float = LENGTH_TOLERANCE,
                       persona: str = DEFAULT_PERSONA,
                       location: str = DEFAULT_LOCATION) -> str:
    """Stage one: produce a plain narrative near the target length.

    Regenerates once if the length lands outside the tolerance band, then
    raises LengthViolationError carrying the text so the caller can still
    decide to use it.
    """
    request = build_stage1_request(desc, params, persona=persona, location=location)
    text = ""
    for _ in range(2):
        text = provider.complete(request).text.strip()
        if abs(len(text) - params.target_length) <= tolerance * params.target_length:
            return text
    raise LengthViolationError(
        f"narrative length {len(text)} outside ±{tolerance:.0%} of "
        f"{params.target_length}", text=text)


def _squash_ws(text: str) -> str:
    return " ".join(text.split())


def insert_tags(narrative: str, registry: ActionRegistry, provider,
                *, tag_examples: list[str] | None = None
                ) -> tuple[ScenarioDocument, SanitizationReport]:
    """Stage two: annotate the narrative with registry-valid tags.

    The provider output is parsed and sanitized; hallucinated tags are
    dropped into the report and the returned document contains only valid
    ones. If the provider altered the speech text (or emitted unparseable
    markup) the stage regenerates once, then raises NarrativeMutatedError.
    """
    examples = tag_examples if tag_examples is not None \
        else generic_tag_examples(registry)
    request = build_stage2_request(narrative, examples)
    failure = "no attempt made"
    for _ in range(2):
        raw = provider.complete(request).text
        try:
            speech, tags = parse_scenario(raw)
        except ParseError as exc:
            failure = f"unparseable output: {exc}"
            continue
        if _squash_ws(speech) != _squash_ws(narrative):
            failure = "tag-stripped output differs from the input narrative"
            continue
        kept, report = sanitize(tags, registry)
        document = ScenarioDocument(render_scenario(speech, kept, natural=True))
        return document, report
    raise NarrativeMutatedError(f"annotation failed after retry: {failure}")


def generate_scenario(desc: ExhibitDescription, params: GenerationParams,
                      provider, registry: ActionRegistry,
                      *, tag_examples: list[str] | None = None,
                      persona: str = DEFAULT_PERSONA,
                      location: str = DEFAULT_LOCATION
                      ) -> tuple[ScenarioDocument, SanitizationReport]:
    """Run both stages and stamp the document with its parameters."""
    narrative = generate_narrative(desc, params, provider,
                                   persona=persona, location=location)
    document, report = insert_tags(narrative, registry, provider,
                                   tag_examples=tag_examples)
    document.metadata = params
    return document, report


def load_exhibit(path) -> ExhibitDescription:
    """Read an exhibit file: first line is the title, the rest the body."""
    p = Path(path)
    text = p.read_text(encoding="utf-8").strip()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"exhibit file {p} is empty")
    title = lines[0].strip()
    body = "\n".join(lines[1:]).strip() or title
    return ExhibitDescription(exhibit_id=p.stem, title=title, body=body)
