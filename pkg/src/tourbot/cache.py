"""On-disk scenario cache with nearest-parameter fallback.

When the provider is unreachable the robot replays a previously generated
scenario for the exhibit, choosing the cached entry closest in generation
parameters; a hand-written basic scenario per exhibit is the floor the
cache never falls through. "Closest" is an explicit weighted metric:

    d = w_len * |len_a - len_b| / max(len_a, len_b)
      + w_style * [styles differ] + w_aud * [audiences differ]

Ties go to the most recently cached entry. The index file is updated by
write-then-rename, so concurrent generate invocations cannot corrupt it.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import NoScenarioError
from .scenario import GenerationParams, ScenarioDocument

INDEX_NAME = "index.json"


def param_distance(a: GenerationParams, b: GenerationParams,
                   *, w_len: float = 1.0, w_style: float = 1.0,
                   w_aud: float = 1.0) -> float:
    d = w_len * abs(a.target_length - b.target_length) \
        / max(a.target_length, b.target_length)
    if a.style != b.style:
        d += w_style
    if a.audience != b.audience:
        d += w_aud
    return d


class ScenarioCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- index -------------------------------------------------------------

    def _index_path(self) -> Path:
        return self.root / INDEX_NAME

    def _load_index(self) -> dict:
        path = self._index_path()
        if not path.exists():
            return {"entries": [], "basic": {}, "next_seq": 1}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_index(self, index: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self._index_path().with_suffix(".json.tmp")
        tmp.write_text(json.dumps(index, indent=2, ensure_ascii=False) + "\n",
                       encoding="utf-8")
        os.replace(tmp, self._index_path())

    # -- writes ------------------------------------------------------------

    def put(self, exhibit_id: str, params: GenerationParams,
            document: ScenarioDocument) -> Path:
        """Store one generated scenario and record it in the index."""
        params.check()
        index = self._load_index()
        seq = index["next_seq"]
        filename = f"{exhibit_id}_{seq:04d}.txt"
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / filename).write_text(document.raw_text, encoding="utf-8")
        index["entries"].append({
            "exhibit": exhibit_id,
            "params": {"target_length": params.target_length,
                       "style": params.style,
                       "audience": params.audience},
            "file": filename,
            "seq": seq,
        })
        index["next_seq"] = seq + 1
        self._write_index(index)
        return self.root / filename

    def put_basic(self, exhibit_id: str, document: ScenarioDocument) -> Path:
        """Install the hand-written floor scenario for an exhibit."""
        index = self._load_index()
        filename = f"{exhibit_id}_basic.txt"
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / filename).write_text(document.raw_text, encoding="utf-8")
        index["basic"][exhibit_id] = filename
        self._write_index(index)
        return self.root / filename

    # -- reads -------------------------------------------------------------

    def has_basic(self, exhibit_id: str) -> bool:
        return exhibit_id in self._load_index()["basic"]

    def entries_for(self, exhibit_id: str) -> list[dict]:
        return [e for e in self._load_index()["entries"]
                if e["exhibit"] == exhibit_id]

    def _read_doc(self, filename: str,
                  params: GenerationParams | None) -> ScenarioDocument:
        text = (self.root / filename).read_text(encoding="utf-8")
        return ScenarioDocument(text, metadata=params)

    def fallback_select(self, exhibit_id: str, params: GenerationParams,
                        *, w_len: float = 1.0, w_style: float = 1.0,
                        w_aud: float = 1.0) -> ScenarioDocument:
        """Nearest cached scenario, or the basic one when nothing is cached."""
        index = self._load_index()
        candidates = [e for e in index["entries"] if e["exhibit"] == exhibit_id]
        if candidates:
            def key(entry):
                entry_params = GenerationParams(**entry["params"])
                return (param_distance(params, entry_params, w_len=w_len,
                                       w_style=w_style, w_aud=w_aud),
                        -entry["seq"])
            best = min(candidates, key=key)
            return self._read_doc(best["file"], GenerationParams(**best["params"]))
        basic = index["basic"].get(exhibit_id)
        if basic is None:
            raise NoScenarioError(
                f"no cached or basic scenario for exhibit {exhibit_id!r}")
        return self._read_doc(basic, None)
