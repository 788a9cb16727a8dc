"""Text generation providers.

One abstraction: a provider takes a request (system instructions, user
content, decoding parameters) and returns text. The live implementation
speaks the common chat-completion wire shape over HTTPS and is configured
entirely from the environment, so the pipeline is not coupled to any one
vendor. The stub implementation is a seeded template filler that needs no
network and produces byte-identical output for identical inputs, which is
what CI and the simulator's endurance runs use.

The stub reads what it needs (target length, style, audience, available
tag forms, the narrative to annotate) from labeled lines in the prompt
itself, the same way a live model would.
"""

from __future__ import annotations

import hashlib
import os
import random
import re
from dataclasses import dataclass

import requests

from .errors import ProviderUnavailableError

ENDPOINT_ENV = "TOURBOT_PROVIDER_ENDPOINT"
MODEL_ENV = "TOURBOT_PROVIDER_MODEL"
KEY_ENV = "TOURBOT_PROVIDER_KEY"

_TAG_SAMPLE_RE = re.compile(r"<[A-Za-z_][A-Za-z0-9_]*:[^<>\n]*>")

# Known-bad tags the stub can inject to exercise sanitization.
_INVALID_TAGS = (
    "<teleport:moon>",
    "<anim:head;nodding;two>",
    "<facial:>",
    "<hologram:full;3>",
    "<pose:head_and_arms>",
)


@dataclass
class ProviderRequest:
    system: str
    user: str
    temperature: float = 0.7
    max_tokens: int | None = None


@dataclass
class ProviderResponse:
    text: str
    finished: bool = True


class HttpChatProvider:
    """Chat-completion client configured from the environment."""

    def __init__(self, endpoint: str | None = None, model: str | None = None,
                 api_key: str | None = None, timeout: float = 60.0):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.model = model or os.environ.get(MODEL_ENV)
        self.api_key = api_key or os.environ.get(KEY_ENV)
        self.timeout = timeout

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        if not self.endpoint or not self.model:
            raise ProviderUnavailableError(
                f"provider not configured: set {ENDPOINT_ENV} and {MODEL_ENV}")
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(self.endpoint, json=payload, headers=headers,
                                 timeout=self.timeout)
            resp.raise_for_status()
            text = resp.json()["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise ProviderUnavailableError(f"provider request failed: {exc}") from exc
        if not text:
            raise ProviderUnavailableError("provider returned empty text")
        return ProviderResponse(text=text)


def _prompt_field(user: str, label: str) -> str | None:
    m = re.search(rf"^{re.escape(label)}:\s*(.+)$", user, re.MULTILINE)
    return m.group(1).strip() if m else None


def _prompt_block(user: str, label: str) -> str | None:
    m = re.search(rf"^{re.escape(label)}:\s*\n", user, re.MULTILINE)
    return user[m.end():] if m else None


class StubProvider:
    """Deterministic offline generator.

    Output is a pure function of the constructor seed and the request
    content. invalid_tag_rate > 0 makes the annotation stage occasionally
    emit hallucinated or malformed tags, for resilience testing.
    """

    def __init__(self, seed: int = 0, invalid_tag_rate: float = 0.0):
        self.seed = seed
        self.invalid_tag_rate = invalid_tag_rate

    def _rng(self, request: ProviderRequest) -> random.Random:
        digest = hashlib.sha256(
            f"{self.seed}\x00{request.system}\x00{request.user}".encode()).hexdigest()
        return random.Random(int(digest[:16], 16))

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        user = request.user
        if _prompt_block(user, "Narrative") is not None:
            return ProviderResponse(self._annotate(user, self._rng(request)))
        if _prompt_field(user, "Target length") is not None:
            return ProviderResponse(self._narrate(user, self._rng(request)))
        raise ProviderUnavailableError("stub cannot interpret this prompt shape")

    # -- stage 1: stylized narrative ----------------------------------------

    def _narrate(self, user: str, rng: random.Random) -> str:
        target = int(re.sub(r"\D", "", _prompt_field(user, "Target length") or "800"))
        style = (_prompt_field(user, "Style") or "formal").lower()
        audience = (_prompt_field(user, "Audience") or "adults_nontechnical").lower()
        title = _prompt_field(user, "Exhibit title") or "this exhibit"
        body = " ".join((_prompt_block(user, "Exhibit description") or "").split())
        fragments = [f.strip() for f in re.split(r"[.!?]+", body) if f.strip()]
        if not fragments:
            fragments = [f"the story of {title}"]

        audience_hooks = {
            "schoolchildren": "and yes, you may ask me anything you like",
            "adults_nontechnical": "no engineering degree required to enjoy this",
            "specialists": "the implementation details will interest you here",
        }
        hook = audience_hooks.get(audience, audience_hooks["adults_nontechnical"])
        if style == "humorous":
            templates = [
                "Gather round, because {title} is about to steal the show.",
                "Here is my favorite part: {frag}.",
                "Between us, {frag}, which still makes my circuits hum.",
                "I promise {hook}.",
                "Believe it or not, {frag}.",
                "If robots could brag, I would mention that {frag}.",
            ]
        else:
            templates = [
                "Before you stands {title}, a centerpiece of this collection.",
                "Note that {frag}.",
                "It is worth remembering that {frag}.",
                "For this audience, {hook}.",
                "The records tell us that {frag}.",
                "Consider for a moment that {frag}.",
            ]
        fillers = [
            "Take a closer look.",
            "Let that sink in.",
            "There is more to see.",
            "Follow me a step closer.",
            "A short pause here.",
        ]

        parts: list[str] = []
        total = 0
        frag_index = 0
        guard = 0
        while total < target * 0.92 and guard < 400:
            guard += 1
            template = rng.choice(templates)
            frag = fragments[frag_index % len(fragments)]
            frag_index += 1
            sentence = template.format(title=title, frag=_lower_first(frag), hook=hook)
            sep = 1 if parts else 0
            if total + sep + len(sentence) > target * 1.12:
                sentence = rng.choice(fillers)
                if total + sep + len(sentence) > target * 1.12:
                    break
            parts.append(sentence)
            total += sep + len(sentence)
        if not parts:
            parts = [fillers[0]]
        return " ".join(parts)

    # -- stage 2: tag insertion ----------------------------------------------

    def _annotate(self, user: str, rng: random.Random) -> str:
        narrative = (_prompt_block(user, "Narrative") or "").strip("\n")
        head = user.split("Narrative:", 1)[0]
        # Sample only from the listed forms, not from prose describing the
        # tag syntax.
        if "Available tag forms:" in head:
            head = head.split("Available tag forms:", 1)[1]
        samples = _TAG_SAMPLE_RE.findall(head)
        if not samples:
            return narrative
        points = [m.end() for m in re.finditer(r"[.!?] ", narrative)]
        out = narrative
        for position in sorted(points, reverse=True):
            if rng.random() >= 0.45:
                continue
            if self.invalid_tag_rate > 0 and rng.random() < self.invalid_tag_rate:
                tag = rng.choice(_INVALID_TAGS)
            else:
                tag = rng.choice(samples)
            out = out[:position] + tag + " " + out[position:]
        return out


def _lower_first(text: str) -> str:
    # Leave acronyms and proper names like MENTOR-1 alone.
    if text[:1].isupper() and text[1:2].islower():
        return text[0].lower() + text[1:]
    return text
