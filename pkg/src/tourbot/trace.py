"""Structured, diffable run traces.

Every arbitration verdict, cancellation, completion, and autonomous
transition in a simulated run becomes one line-delimited record. Traces
are the engine's only observable output, so the format is fixed: one JSON
object per line with a stable field order, times rounded to milliseconds.
Two runs with the same inputs and seed must produce byte-identical files.

`cause` is the index of the record that triggered this one (the dispatch
that led to a cancellation, the completion that scheduled a default, and
so on). Structural comparison ignores cause numbering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

# Record kinds.
DISPATCHED = "dispatched"
EXECUTED = "executed"
IGNORED = "ignored"
CANCELLED = "cancelled"
DELAYED = "delayed"
RESUBMITTED = "resubmitted"
COMPLETED = "completed"
DEFAULT_STARTED = "default_started"
BACKGROUND_STARTED = "background_started"
WARNING = "warning"

KINDS = (DISPATCHED, EXECUTED, IGNORED, CANCELLED, DELAYED, RESUBMITTED,
         COMPLETED, DEFAULT_STARTED, BACKGROUND_STARTED, WARNING)

# Anomaly classes carried by warning records (params[0]).
CLASS_INFO = "info"
CLASS_WARN = "warn"
CLASS_ERROR = "error"


@dataclass
class TraceRecord:
    time: float
    agent: str
    kind: str
    action_type: str
    params: tuple[str, ...]
    priority: str
    cause: int | None = None

    def to_line(self) -> str:
        return json.dumps({
            "time": round(self.time, 3),
            "agent": self.agent,
            "kind": self.kind,
            "action_type": self.action_type,
            "params": list(self.params),
            "priority": self.priority,
            "cause": self.cause,
        }, ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "TraceRecord":
        rec = json.loads(line)
        return cls(rec["time"], rec["agent"], rec["kind"], rec["action_type"],
                   tuple(rec["params"]), rec["priority"], rec["cause"])

    def structural_key(self) -> tuple:
        """Identity for diffing: everything except cause numbering."""
        return (round(self.time, 3), self.agent, self.kind, self.action_type,
                tuple(self.params), self.priority)


class Trace:
    """Append-only record sink for one run."""

    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def emit(self, time: float, agent: str, kind: str, action_type: str,
             params: tuple[str, ...] = (), priority: str = "",
             cause: int | None = None) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown trace record kind {kind!r}")
        self.records.append(TraceRecord(time, agent, kind, action_type,
                                        tuple(params), priority, cause))
        return len(self.records) - 1

    def warn(self, time: float, agent: str, anomaly: str, message: str,
             *, severity: str = CLASS_WARN, cause: int | None = None) -> int:
        return self.emit(time, agent, WARNING, anomaly, (severity, message),
                         cause=cause)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for rec in self.records:
            out[rec.kind] = out.get(rec.kind, 0) + 1
        return out

    def error_warnings(self) -> list[TraceRecord]:
        return [r for r in self.records
                if r.kind == WARNING and r.params[:1] == (CLASS_ERROR,)]

    def write(self, path: str | Path) -> None:
        text = "\n".join(r.to_line() for r in self.records)
        Path(path).write_text(text + ("\n" if text else ""), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "Trace":
        trace = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                trace.records.append(TraceRecord.from_line(line))
        return trace


@dataclass
class TraceDiff:
    """Structural difference between two traces."""

    mismatches: list[tuple[int, TraceRecord | None, TraceRecord | None]] = \
        field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        if self.empty:
            return "traces are identical"
        lines = [f"{len(self.mismatches)} differing records"]
        for idx, a, b in self.mismatches[:20]:
            lines.append(f"  #{idx}: {a.to_line() if a else '<absent>'}"
                         f" != {b.to_line() if b else '<absent>'}")
        if len(self.mismatches) > 20:
            lines.append(f"  ... {len(self.mismatches) - 20} more")
        return "\n".join(lines)


def trace_diff(a: Trace | list[TraceRecord], b: Trace | list[TraceRecord]) -> TraceDiff:
    """Record-for-record comparison ignoring cause back-references."""
    ra = list(a)
    rb = list(b)
    diff = TraceDiff()
    for i in range(max(len(ra), len(rb))):
        rec_a = ra[i] if i < len(ra) else None
        rec_b = rb[i] if i < len(rb) else None
        ka = rec_a.structural_key() if rec_a else None
        kb = rec_b.structural_key() if rec_b else None
        if ka != kb:
            diff.mismatches.append((i, rec_a, rec_b))
    return diff


def background_derived_indices(records: list[TraceRecord]) -> set[int]:
    """Indices of records that exist only because of a background action.

    A record is background-derived when it is a background start, refers to
    the action instance such a start created (its completion, or its
    cancellation by a later command), or is transitively caused by a
    derived record (for example the default restart scheduled after a
    background finishes). Everything else in a trace must be identical
    across runs that differ only in the seed.
    """
    derived: set[int] = set()
    # Per-agent: is the action currently occupying the agent derived?
    current_derived: dict[str, bool] = {}
    starts = (EXECUTED, DEFAULT_STARTED, BACKGROUND_STARTED)
    for idx, rec in enumerate(records):
        caused = rec.cause is not None and rec.cause in derived
        if rec.kind == BACKGROUND_STARTED:
            derived.add(idx)
            current_derived[rec.agent] = True
            continue
        if rec.kind in starts:
            if caused:
                derived.add(idx)
            current_derived[rec.agent] = caused
            continue
        if rec.kind in (COMPLETED, CANCELLED):
            if current_derived.get(rec.agent) or caused:
                derived.add(idx)
            current_derived[rec.agent] = False
            continue
        if caused:
            derived.add(idx)
    return derived
