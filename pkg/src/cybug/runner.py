"""Matches, tournaments and the built-in bots."""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence, Union

from . import arena, replay
from .config import RuleConfig
from .invariants import InvariantMonitor
from .lang import Diagnostic, Program, has_errors, parse

BUILTIN_BOTS = ("ghazu_corpus", "ghazu_spec", "idle", "wanderer")
BUILTIN_MAPS = ("duel", "minefield", "arena32")

BotSpec = Union[str, os.PathLike, Program]


class MatchSetupError(Exception):
    """A bot or map failed to load; nothing was simulated."""

    def __init__(self, message: str, *, bot: str | None = None,
                 diagnostics: Sequence[Diagnostic] = ()):
        super().__init__(message)
        self.bot = bot
        self.diagnostics = list(diagnostics)


def _data(*parts: str) -> str:
    return resources.files("cybug").joinpath("data", *parts).read_text(encoding="utf-8")


def builtin_source(name: str) -> str:
    if name not in BUILTIN_BOTS:
        raise KeyError(f"unknown builtin bot {name!r}; choose from {', '.join(BUILTIN_BOTS)}")
    return _data("bots", f"{name}.cb")


def builtin_bot(name: str) -> Program:
    program, _ = parse(builtin_source(name), "lenient")
    return program


def builtin_map(name: str) -> str:
    if name not in BUILTIN_MAPS:
        raise KeyError(f"unknown builtin map {name!r}")
    return _data("maps", f"{name}.map")


def bot_label(spec: BotSpec) -> str:
    if isinstance(spec, Program):
        return spec.name
    s = str(spec)
    return s if s in BUILTIN_BOTS else Path(s).stem


def load_bot(spec: BotSpec) -> Program:
    """Resolve a builtin name, a script path or a ready Program."""
    if isinstance(spec, Program):
        return spec
    s = str(spec)
    if s in BUILTIN_BOTS:
        return builtin_bot(s)
    try:
        text = Path(s).read_text(encoding="utf-8")
    except OSError as e:
        raise MatchSetupError(f"cannot read bot {s}: {e.strerror}", bot=s) from None
    program, diags = parse(text, "lenient")
    if has_errors(diags):
        raise MatchSetupError(f"bot {s} has syntax errors", bot=s, diagnostics=diags)
    return program


def load_map_text(spec: str | os.PathLike) -> str:
    s = str(spec)
    if s in BUILTIN_MAPS:
        return builtin_map(s)
    try:
        return Path(s).read_text(encoding="utf-8")
    except OSError as e:
        raise MatchSetupError(f"cannot read map {s}: {e.strerror}") from None


@dataclass
class MatchConfig:
    map: str | os.PathLike
    bots: list[tuple[BotSpec, str]]
    overrides: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    max_ticks: int | None = None
    rules: RuleConfig | None = None

    def rule_config(self) -> RuleConfig:
        changes = dict(self.overrides)
        changes["seed"] = self.seed
        if self.max_ticks is not None:
            changes["max_ticks"] = self.max_ticks
        return (self.rules or RuleConfig()).replace(**changes)


@dataclass(frozen=True)
class TeamScore:
    flags: int
    kills: int
    points: int


@dataclass(frozen=True)
class MatchResult:
    outcome: str          # team_eliminated | tick_limit
    winner: str | None    # None is a draw
    ticks: int
    scores: dict[str, TeamScore]
    survivors: tuple[int, ...]
    digest: str

    def record(self) -> dict[str, Any]:
        """The replay's trailing result line (everything but the digest)."""
        return {
            "outcome": self.outcome,
            "winner": self.winner,
            "ticks": self.ticks,
            "teams": {t: {"flags": s.flags, "kills": s.kills, "points": s.points}
                      for t, s in self.scores.items()},
            "survivors": list(self.survivors),
        }

    def summary(self) -> str:
        win = f"winner {self.winner}" if self.winner is not None else "draw"
        lines = [f"{win} ({self.outcome}) after {self.ticks} ticks"]
        for team, s in self.scores.items():
            lines.append(f"  team {team}: {s.points} points "
                         f"({s.flags} flags, {s.kills} kills)")
        lines.append(f"  survivors: {', '.join(map(str, self.survivors)) or 'none'}")
        lines.append(f"  replay sha256: {self.digest}")
        return "\n".join(lines)


def build_world(config: MatchConfig) -> arena.World:
    """Load map and bots and spawn them; raises MatchSetupError on failure."""
    teams = {team for _, team in config.bots}
    if len(teams) < 2:
        raise MatchSetupError("a match needs at least two teams")
    programs = [(load_bot(spec), str(team)) for spec, team in config.bots]
    try:
        world = arena.load_map(load_map_text(config.map), config.rule_config())
    except arena.MapError as e:
        raise MatchSetupError(f"map {config.map}: {e}") from None
    for program, team in programs:
        try:
            arena.spawn(world, program, team)
        except ValueError as e:
            raise MatchSetupError(str(e)) from None
    return world


def finish(world: arena.World, outcome: arena.Outcome) -> tuple[MatchResult, str]:
    world.emit("world", "match_end", {"outcome": outcome.reason,
                                      "winner": outcome.winner}, tick=world.tick)
    scores = {t: TeamScore(world.flags_scored.get(t, 0), world.kills.get(t, 0),
                           world.score(t)) for t in world.teams}
    survivors = tuple(b.id for b in world.cybugs if b.alive)
    partial = MatchResult(outcome.reason, outcome.winner, world.tick, scores,
                          survivors, digest="")
    text = replay.serialize(world.log, partial.record())
    result = MatchResult(outcome.reason, outcome.winner, world.tick, scores,
                         survivors, replay.digest(text))
    return result, text


def play(world: arena.World, *, check_invariants: bool = False) -> tuple[MatchResult, str]:
    monitor = InvariantMonitor(world) if check_invariants else None
    while (outcome := arena.is_over(world)) is None:
        arena.tick(world)
        if monitor is not None:
            monitor.observe()
    return finish(world, outcome)


def run_match(config: MatchConfig, *, replay_path: str | os.PathLike | None = None,
              check_invariants: bool = False) -> tuple[MatchResult, str]:
    """Play one match to completion; returns the result and replay text."""
    world = build_world(config)
    result, text = play(world, check_invariants=check_invariants)
    if replay_path is not None:
        Path(replay_path).write_bytes(text.encode("utf-8"))
    return result, text


# ---------------------------------------------------------------------------
# Tournaments

@dataclass
class BotRecord:
    wins: int = 0
    draws: int = 0
    losses: int = 0

    @property
    def played(self) -> int:
        return self.wins + self.draws + self.losses

    @property
    def points(self) -> int:
        return 3 * self.wins + self.draws


@dataclass
class PairingResult:
    a: str
    b: str
    seed: int
    winner: str | None  # a bot label, or None for a draw
    ticks: int
    digest: str


@dataclass
class Standings:
    bots: list[str]
    matches: list[PairingResult]
    table: dict[str, BotRecord]

    def ranking(self) -> list[tuple[str, BotRecord]]:
        return sorted(self.table.items(),
                      key=lambda kv: (-kv[1].points, -kv[1].wins, self.bots.index(kv[0])))

    def to_json(self) -> str:
        doc = {
            "bots": self.bots,
            "matches": [vars(m) for m in self.matches],
            "table": [{"bot": name, "wins": r.wins, "draws": r.draws,
                       "losses": r.losses, "points": r.points, "played": r.played}
                      for name, r in self.ranking()],
        }
        return json.dumps(doc, indent=2) + "\n"

    def format(self) -> str:
        width = max(len(b) for b in self.bots)
        lines = [f"{'bot':<{width}}   W   D   L  pts"]
        for name, r in self.ranking():
            lines.append(f"{name:<{width}} {r.wins:>3} {r.draws:>3} {r.losses:>3} {r.points:>4}")
        return "\n".join(lines)


def _unique_labels(bots: Sequence[BotSpec]) -> list[str]:
    labels, seen = [], {}
    for spec in bots:
        base = bot_label(spec)
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return labels


def _play_pairing(task) -> PairingResult:
    map_text, (la, pa), (lb, pb), seed, rules = task
    world = arena.load_map(map_text, rules.replace(seed=seed))
    first, second = ((la, pa), (lb, pb)) if (seed % 2 == 0) else ((lb, pb), (la, pa))
    for label, prog in (first, second):
        arena.spawn(world, prog, label)
    result, _ = play(world)
    return PairingResult(la, lb, seed, result.winner, result.ticks, result.digest)


def run_tournament(bots: Sequence[BotSpec], map: str | os.PathLike, rounds: int,
                   seed: int = 0, *, rules: RuleConfig | None = None,
                   workers: int | None = None) -> Standings:
    """Round robin: every unordered pair plays *rounds* matches.

    Round ``i`` of a pairing uses seed ``seed + i``; sides alternate with
    the seed's parity.  With ``workers > 1`` matches run in a process pool;
    the standings are identical to sequential execution.
    """
    if len(bots) < 2:
        raise ValueError("a tournament needs at least two bots")
    labels = _unique_labels(bots)
    programs = []
    for label, spec in zip(labels, bots):
        try:
            programs.append(load_bot(spec))
        except MatchSetupError as e:
            e.bot = label
            raise
    map_text = load_map_text(map)
    rules = rules or RuleConfig()
    try:
        arena.load_map(map_text, rules)
    except arena.MapError as e:
        raise MatchSetupError(f"map {map}: {e}") from None

    tasks = [(map_text, (labels[i], programs[i]), (labels[j], programs[j]),
              seed + r, rules)
             for i, j in itertools.combinations(range(len(bots)), 2)
             for r in range(rounds)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_play_pairing, tasks, chunksize=4))
    else:
        results = [_play_pairing(t) for t in tasks]

    table = {label: BotRecord() for label in labels}
    for m in results:
        if m.winner is None:
            table[m.a].draws += 1
            table[m.b].draws += 1
        else:
            loser = m.b if m.winner == m.a else m.a
            table[m.winner].wins += 1
            table[loser].losses += 1
    return Standings(labels, results, table)
