"""Replay files: JSON lines, one event per line, then one result record.

Each event line has the fields ``tick, actor, kind, payload`` in that order
with payload keys sorted, so equal event sequences serialize to equal bytes.
The replay digest is the hex SHA-256 of the file bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from .arena import Event


def _dump(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def event_line(ev: Event) -> str:
    payload = {k: ev.payload[k] for k in sorted(ev.payload)}
    return _dump({"tick": ev.tick, "actor": ev.actor, "kind": ev.kind,
                  "payload": payload})


def result_line(result: dict[str, Any]) -> str:
    return _dump({"result": result})


def serialize(events: Iterable[Event], result: dict[str, Any]) -> str:
    lines = [event_line(ev) for ev in events]
    lines.append(result_line(result))
    return "\n".join(lines) + "\n"


def digest(replay_text: str) -> str:
    return hashlib.sha256(replay_text.encode("utf-8")).hexdigest()


def read(text: str) -> tuple[list[Event], dict[str, Any] | None]:
    """Parse replay text back into events and the trailing result record."""
    events: list[Event] = []
    result = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "result" in obj:
            result = obj["result"]
            continue
        try:
            events.append(Event(obj["tick"], obj["actor"], obj["kind"], obj["payload"]))
        except KeyError as e:
            raise ValueError(f"line {lineno}: missing field {e}") from None
    return events, result


@dataclass
class BugTrack:
    team: str
    pos: tuple[int, int]
    heading: str
    name: str = ""
    damage: int = 0
    alive: bool = True
    shield_up: bool = False
    fuel: int | None = None
    flags: int = 0


@dataclass
class ReplayState:
    """World facts rebuilt purely from the event stream."""

    bugs: dict[int, BugTrack] = field(default_factory=dict)
    flags: dict[str, int] = field(default_factory=dict)
    kills: dict[str, int] = field(default_factory=dict)
    mines_removed: list[tuple[int, int]] = field(default_factory=list)
    ticks: int = 0
    outcome: dict[str, Any] | None = None

    def points(self, flag_points: int = 10, kill_points: int = 5) -> dict[str, int]:
        return {t: self.flags.get(t, 0) * flag_points + self.kills.get(t, 0) * kill_points
                for t in self.flags}

    @property
    def survivors(self) -> list[int]:
        return sorted(i for i, b in self.bugs.items() if b.alive)


_TURN = {"north": 0, "east": 1, "south": 2, "west": 3}


def reconstruct(events: Iterable[Event]) -> ReplayState:
    st = ReplayState()
    for ev in events:
        p = ev.payload
        st.ticks = max(st.ticks, ev.tick)
        kind = ev.kind
        if kind == "spawned":
            st.bugs[p["id"]] = BugTrack(p["team"], tuple(p["pos"]), p["heading"], p["name"])
            st.flags.setdefault(p["team"], 0)
            st.kills.setdefault(p["team"], 0)
            continue
        if kind == "match_end":
            st.outcome = p
            continue
        if kind == "mine_tripped":
            st.mines_removed.append(tuple(p["pos"]))
            continue
        bug = st.bugs[ev.actor]
        if kind == "moved":
            bug.pos = tuple(p["to"])
            bug.fuel = p["fuel"]
        elif kind in ("bumped", "fuel_taken"):
            bug.fuel = p["fuel"]
        elif kind == "turned":
            bug.heading = p["heading"]
        elif kind == "shield_changed":
            bug.shield_up = p["up"]
        elif kind == "hit":
            bug.damage = p["damage"]
        elif kind == "flag_taken":
            bug.flags += 1
            st.flags[bug.team] += 1
        elif kind == "destroyed":
            bug.alive = False
            bug.damage = 100
            if p["credited"]:
                st.kills[st.bugs[p["by"]].team] += 1
    return st
