"""Classical record of a protocol run, serialized as JSON lines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

PUBLIC = "public"
ALICE = "alice"
BOB = "bob"
CHANNEL = "channel"


@dataclass(frozen=True)
class Event:
    stage: str
    kind: str
    party: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        return {"stage": self.stage, "event": self.kind, "party": self.party, **self.payload}


@dataclass
class Transcript:
    events: list[Event] = field(default_factory=list)

    def add(self, stage: str, kind: str, party: str = PUBLIC, **payload) -> Event:
        event = Event(stage, kind, party, payload)
        self.events.append(event)
        return event

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def find(self, kind: str, stage: str | None = None, party: str | None = None) -> list[Event]:
        return [e for e in self.events if e.kind == kind
                and (stage is None or e.stage == stage)
                and (party is None or e.party == party)]

    def view(self, party: str) -> list[Event]:
        """Events a participant can see: public ones plus their own."""
        return [e for e in self.events if e.party in (PUBLIC, party)]

    def stages(self) -> list[str]:
        return [e.stage for e in self.events]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_record(), separators=(",", ":")) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        events = []
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            stage, kind, party = rec.pop("stage"), rec.pop("event"), rec.pop("party")
            events.append(Event(stage, kind, party, rec))
        return cls(events)


def write_transcripts(path, transcripts: Iterable[tuple[int, Transcript]]) -> None:
    """Concatenate transcripts into one file, each event tagged with its trial."""
    with open(path, "w", encoding="utf-8") as fh:
        for trial, transcript in transcripts:
            for e in transcript:
                fh.write(json.dumps({"trial": trial, **e.to_record()}, separators=(",", ":")) + "\n")
