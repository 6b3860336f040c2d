"""Grid battlefield and the global tick loop.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, both
0-based; north is decreasing ``y``.  Resolution is strictly sequential in
spawn order: each living Cybug pays shield upkeep, runs its VM for one tick
and has its action resolved before the next Cybug moves.

Every state change is recorded as an :class:`Event` in ``world.log``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .config import RuleConfig
from .lang import EntityKind, Program
from .rng import XorShift64Star
from .vm import (HEADINGS, Action, CybugVmState, Percepts, ScanResult,
                 init_vm, step_tick)

EMPTY, BARRIER, MINE, FLAG, FUEL = ".", "#", "*", "F", "+"
GLYPHS = frozenset(".#*F+123456789")
PASSABLE = frozenset((EMPTY, MINE, FLAG, FUEL))

GLYPH_KIND = {BARRIER: EntityKind.BARRIER, MINE: EntityKind.MINE,
              FLAG: EntityKind.FLAG, FUEL: EntityKind.FUEL}

VECTORS = {"north": (0, -1), "east": (1, 0), "south": (0, 1), "west": (-1, 0)}

EVENT_KINDS = frozenset({
    "spawned", "moved", "bumped", "turned", "scanned", "fired", "hit",
    "shield_changed", "discharged", "mine_tripped", "fuel_taken", "flag_taken",
    "self_destructed", "destroyed", "out_of_ammo", "out_of_fuel", "fault",
    "match_end",
})


class MapError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class Event(NamedTuple):
    tick: int
    actor: int | str  # cybug id, or "world"
    kind: str
    payload: dict[str, Any]


class Outcome(NamedTuple):
    reason: str  # team_eliminated | tick_limit
    winner: str | None  # None means draw


def rotate(heading: str, quarter_turns: int) -> str:
    return HEADINGS[(HEADINGS.index(heading) + quarter_turns) % 4]


class _BugHost:
    """Adapter the VM talks to for one Cybug."""

    __slots__ = ("world", "bug")

    def __init__(self, world: World, bug: Cybug):
        self.world = world
        self.bug = bug

    def draw_random(self, upper: int) -> int:
        return self.world.prng.randint(1, upper)

    def gps(self) -> tuple[int, int]:
        return (self.bug.x, self.bug.y)

    def set_shield(self, up: bool) -> None:
        _set_shield(self.world, self.bug, up)

    def fault(self, reason: str) -> None:
        self.world.emit(self.bug.id, "fault", {"reason": reason})


@dataclass(eq=False)
class Cybug:
    id: int
    team: str
    x: int
    y: int
    vm: CybugVmState
    host: _BugHost | None = None
    last_executed: list[int] = field(default_factory=list)

    @property
    def alive(self) -> bool:
        return self.vm.damage < 100

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(eq=False)
class World:
    config: RuleConfig
    width: int
    height: int
    cells: list[list[str]]
    spawns: list[tuple[int, int, int]]  # (digit, x, y) in digit order
    cybugs: list[Cybug] = field(default_factory=list)
    tick: int = 0
    prng: XorShift64Star = None
    flags_scored: dict[str, int] = field(default_factory=dict)
    kills: dict[str, int] = field(default_factory=dict)
    log: list[Event] = field(default_factory=list)
    initial_flags: int = 0
    occupied: dict[tuple[int, int], Cybug] = field(default_factory=dict)

    def __post_init__(self):
        if self.prng is None:
            self.prng = XorShift64Star(self.config.seed)
        self.initial_flags = self.count(FLAG)

    def emit(self, actor: int | str, kind: str, payload: dict[str, Any],
             tick: int | None = None) -> Event:
        """Append an event; stamped with the tick being resolved by default."""
        ev = Event(self.tick + 1 if tick is None else tick, actor, kind, payload)
        self.log.append(ev)
        return ev

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def cell(self, x: int, y: int) -> str:
        return self.cells[y][x]

    def count(self, glyph: str) -> int:
        return sum(row.count(glyph) for row in self.cells)

    def bug(self, id: int) -> Cybug:
        return self.cybugs[id]

    @property
    def teams(self) -> list[str]:
        return list(dict.fromkeys(b.team for b in self.cybugs))

    def living_teams(self) -> list[str]:
        return list(dict.fromkeys(b.team for b in self.cybugs if b.alive))

    def score(self, team: str) -> int:
        cfg = self.config
        return (self.flags_scored.get(team, 0) * cfg.flag_points
                + self.kills.get(team, 0) * cfg.kill_points)

    @property
    def scores(self) -> dict[str, int]:
        return {t: self.score(t) for t in self.teams}

    def render(self) -> str:
        rows = [list(r) for r in self.cells]
        for b in self.cybugs:
            if b.alive:
                rows[b.y][b.x] = "^>v<"[HEADINGS.index(b.vm.heading)]
        return "\n".join("".join(r) for r in rows)


def _is_comment(line: str) -> bool:
    return line.startswith("#") and any(c not in GLYPHS for c in line)


def load_map(text: str, config: RuleConfig | None = None) -> World:
    """Decode a map; spawn digits become empty cells indexed by digit.

    A line beginning with ``#`` is a comment when it contains any character
    outside the glyph alphabet (``# duel``), otherwise it is a grid row.
    """
    config = config or RuleConfig()
    rows: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line or _is_comment(line):
            continue
        rows.append((lineno, line))
    if not rows:
        raise MapError("map has no grid rows", 1, 1)

    width = len(rows[0][1])
    cells: list[list[str]] = []
    spawns: dict[int, tuple[int, int, int]] = {}
    for y, (lineno, line) in enumerate(rows):
        if len(line) != width:
            raise MapError(f"row has {len(line)} cells, expected {width}",
                           lineno, min(len(line), width) + 1)
        row = []
        for x, ch in enumerate(line):
            if ch not in GLYPHS:
                raise MapError(f"unknown glyph {ch!r}", lineno, x + 1)
            if ch.isdigit():
                digit = int(ch)
                if digit in spawns:
                    raise MapError(f"spawn point {ch} defined twice", lineno, x + 1)
                spawns[digit] = (digit, x, y)
                ch = EMPTY
            row.append(ch)
        cells.append(row)
    if not spawns:
        raise MapError("map has no spawn points", rows[0][0], 1)
    return World(config=config, width=width, height=len(cells), cells=cells,
                 spawns=[spawns[d] for d in sorted(spawns)])


def spawn(world: World, program: Program, team: str) -> int:
    """Place a Cybug at the next spawn point in digit order; returns its id."""
    if len(world.cybugs) >= len(world.spawns):
        raise ValueError(f"no free spawn point ({len(world.spawns)} on this map)")
    digit, x, y = world.spawns[len(world.cybugs)]
    if (x, y) in world.occupied:
        raise ValueError(f"spawn point {digit} is occupied")
    bug = Cybug(len(world.cybugs), str(team), x, y, init_vm(program, world.config))
    bug.host = _BugHost(world, bug)
    world.cybugs.append(bug)
    world.occupied[(x, y)] = bug
    world.flags_scored.setdefault(bug.team, 0)
    world.kills.setdefault(bug.team, 0)
    world.emit("world", "spawned", {"id": bug.id, "team": bug.team,
                                    "pos": [x, y], "heading": bug.vm.heading,
                                    "spawn": digit, "name": program.name},
               tick=world.tick)
    return bug.id


# ---------------------------------------------------------------------------
# Rays

def cast_ray(world: World, x: int, y: int, heading: str, reach: int, *,
             ignore_team: str | None = None,
             transparent: frozenset[str] = frozenset((EMPTY,))
             ) -> tuple[int, str | Cybug] | None:
    """Walk cell by cell from ``(x, y)``; return ``(distance, blocker)``.

    The blocker is either a terrain glyph or a living :class:`Cybug`.  Bugs
    on *ignore_team* and glyphs in *transparent* are passed through.  The
    walk stops silently at the grid edge.
    """
    dx, dy = VECTORS[heading]
    occupied = world.occupied
    cells = world.cells
    for d in range(1, reach + 1):
        cx, cy = x + dx * d, y + dy * d
        if not (0 <= cx < world.width and 0 <= cy < world.height):
            return None
        other = occupied.get((cx, cy))
        if other is not None and other.team != ignore_team:
            return d, other
        glyph = cells[cy][cx]
        if glyph not in transparent:
            return d, glyph
    return None


SCAN_TURNS = {"long": 0, "forward": 0, "left": -1, "right": 1}


def perform_scan(world: World, id: int, kind: str) -> Percepts:
    bug = world.bug(id)
    vm = bug.vm
    if kind == "gps":
        vm.gps = bug.pos
        return Percepts(gps=bug.pos)
    cfg = world.config
    reach = cfg.scan_range_long if kind == "long" else cfg.scan_range_directional
    heading = rotate(vm.heading, SCAN_TURNS[kind])
    hit = cast_ray(world, bug.x, bug.y, heading, reach, ignore_team=bug.team)
    if hit is None:
        vm.scan_reg = None
    else:
        d, what = hit
        found = EntityKind.ENEMY if isinstance(what, Cybug) else GLYPH_KIND[what]
        vm.scan_reg = ScanResult(found, d)
    return Percepts(scan_result=vm.scan_reg, bump=vm.bump_flag)


# ---------------------------------------------------------------------------
# Damage and state helpers

def _set_shield(world: World, bug: Cybug, up: bool, reason: str = "script") -> None:
    vm = bug.vm
    if up and vm.fuel <= 0:
        return
    if vm.shield_up == up:
        return
    vm.shield_up = up
    world.emit(bug.id, "shield_changed", {"up": up, "reason": reason})


def _damage(world: World, target: Cybug, amount: int, source: Cybug | None,
            cause: str) -> None:
    if not target.alive:
        return
    if target.vm.shield_up:
        amount = math.floor(amount * world.config.shield_factor)
    vm = target.vm
    vm.damage = min(100, vm.damage + amount)
    world.emit(target.id, "hit", {"amount": amount, "cause": cause,
                                  "damage": vm.damage,
                                  "by": None if source is None else source.id})
    if not target.alive:
        _destroy(world, target, source)


def _destroy(world: World, target: Cybug, source: Cybug | None) -> None:
    world.occupied.pop(target.pos, None)
    credited = source is not None and source.team != target.team
    if credited:
        world.kills[source.team] = world.kills.get(source.team, 0) + 1
    world.emit(target.id, "destroyed", {
        "by": None if source is None else source.id,
        "credited": credited, "pos": [target.x, target.y]})


def _remove_mine(world: World, x: int, y: int, cause: str, by: Cybug | None) -> None:
    world.cells[y][x] = EMPTY
    world.emit("world" if by is None else by.id, "mine_tripped",
               {"pos": [x, y], "cause": cause})


def _in_radius(world: World, cx: int, cy: int, radius: int):
    for y in range(max(0, cy - radius), min(world.height, cy + radius + 1)):
        for x in range(max(0, cx - radius), min(world.width, cx + radius + 1)):
            yield x, y


def _bugs_in_radius(world: World, cx: int, cy: int, radius: int) -> list[Cybug]:
    # spawn order keeps damage resolution deterministic
    return [b for b in world.cybugs
            if b.alive and abs(b.x - cx) <= radius and abs(b.y - cy) <= radius]


def _splash(world: World, cx: int, cy: int, radius: int, amount: int,
            source: Cybug | None, cause: str, *, spare: Cybug | None = None,
            clear_mines: bool = False) -> None:
    for b in _bugs_in_radius(world, cx, cy, radius):
        if b is not spare:
            _damage(world, b, amount, source, cause)
    if clear_mines:
        for x, y in _in_radius(world, cx, cy, radius):
            if world.cells[y][x] == MINE:
                _remove_mine(world, x, y, cause, source)


# ---------------------------------------------------------------------------
# Actions

def _move(world: World, bug: Cybug, direction: str) -> None:
    vm = bug.vm
    cfg = world.config
    if vm.fuel < cfg.move_cost or vm.fuel <= 0:
        world.emit(bug.id, "out_of_fuel", {"pos": [bug.x, bug.y]})
        return
    heading = vm.heading if direction == "forward" else rotate(vm.heading, 2)
    dx, dy = VECTORS[heading]
    tx, ty = bug.x + dx, bug.y + dy
    blocked = None
    if not world.in_bounds(tx, ty):
        blocked = "edge"
    elif world.cells[ty][tx] == BARRIER:
        blocked = "barrier"
    elif (tx, ty) in world.occupied:
        blocked = "occupied"
    if blocked:
        vm.bump_flag = True
        vm.fuel -= min(vm.fuel, cfg.blocked_move_cost)
        world.emit(bug.id, "bumped", {"pos": [bug.x, bug.y], "into": [tx, ty],
                                      "reason": blocked, "fuel": vm.fuel})
        return

    del world.occupied[bug.pos]
    src = [bug.x, bug.y]
    bug.x, bug.y = tx, ty
    world.occupied[(tx, ty)] = bug
    vm.bump_flag = False
    vm.fuel -= cfg.move_cost
    world.emit(bug.id, "moved", {"from": src, "to": [tx, ty], "fuel": vm.fuel})

    glyph = world.cells[ty][tx]
    if glyph == MINE:
        _remove_mine(world, tx, ty, "stepped", bug)
        _damage(world, bug, cfg.mine_damage, None, "mine")
    elif glyph == FUEL:
        world.cells[ty][tx] = EMPTY
        gained = min(cfg.fuel_pickup, cfg.fuel_max - vm.fuel)
        vm.fuel += gained
        world.emit(bug.id, "fuel_taken", {"pos": [tx, ty], "gained": gained,
                                          "fuel": vm.fuel})
    elif glyph == FLAG:
        world.cells[ty][tx] = EMPTY
        vm.flags_carried += 1
        world.flags_scored[bug.team] = world.flags_scored.get(bug.team, 0) + 1
        world.emit(bug.id, "flag_taken", {"pos": [tx, ty], "team": bug.team})


WEAPON_STATS = {
    "missile": ("missile_damage", "missile_range"),
    "gun": ("gun_damage", "gun_range"),
}

# weapons fly over pickups but stop on barriers, mines and any living bug
_WEAPON_TRANSPARENT = frozenset((EMPTY, FLAG, FUEL))


def weapon_ray(world: World, bug: Cybug, reach: int) -> tuple[int, str | Cybug] | None:
    return cast_ray(world, bug.x, bug.y, bug.vm.heading, reach,
                    transparent=_WEAPON_TRANSPARENT)


def grenade_point(world: World, bug: Cybug) -> tuple[int, int]:
    """Landing cell: ``grenade_offset`` ahead, short of the first barrier/edge."""
    dx, dy = VECTORS[bug.vm.heading]
    x, y = bug.x, bug.y
    for _ in range(world.config.grenade_offset):
        nx, ny = x + dx, y + dy
        if not world.in_bounds(nx, ny) or world.cells[ny][nx] == BARRIER:
            break
        x, y = nx, ny
    return x, y


def _fire(world: World, bug: Cybug, weapon: str) -> None:
    vm = bug.vm
    cfg = world.config
    if vm.ammo.get(weapon, 0) <= 0:
        world.emit(bug.id, "out_of_ammo", {"weapon": weapon})
        return
    vm.ammo[weapon] -= 1
    if weapon == "grenade":
        gx, gy = grenade_point(world, bug)
        world.emit(bug.id, "fired", {"weapon": weapon, "ammo": vm.ammo[weapon],
                                     "at": [gx, gy]})
        _splash(world, gx, gy, cfg.grenade_radius, cfg.grenade_damage, bug,
                "grenade", clear_mines=True)
        return

    dmg_key, range_key = WEAPON_STATS[weapon]
    hit = weapon_ray(world, bug, getattr(cfg, range_key))
    payload: dict[str, Any] = {"weapon": weapon, "ammo": vm.ammo[weapon]}
    if hit is None:
        payload["result"] = "miss"
        world.emit(bug.id, "fired", payload)
        return
    d, what = hit
    dx, dy = VECTORS[vm.heading]
    tx, ty = bug.x + dx * d, bug.y + dy * d
    payload["at"] = [tx, ty]
    if isinstance(what, Cybug):
        payload["result"] = "cybug"
        payload["target"] = what.id
        world.emit(bug.id, "fired", payload)
        _damage(world, what, getattr(cfg, dmg_key), bug, weapon)
    elif what == MINE:
        payload["result"] = "mine"
        world.emit(bug.id, "fired", payload)
        _remove_mine(world, tx, ty, weapon, bug)
        _splash(world, tx, ty, cfg.discharge_radius, cfg.mine_damage, bug, "mine")
    else:
        payload["result"] = "absorbed"
        world.emit(bug.id, "fired", payload)


def apply_action(world: World, id: int, action: Action) -> list[Event]:
    """Resolve one Cybug's action; returns the events it produced."""
    bug = world.bug(id)
    if not bug.alive:
        raise ValueError(f"cybug {id} is dead")
    start = len(world.log)
    kind, detail = action
    vm = bug.vm
    cfg = world.config
    if kind == "move":
        _move(world, bug, detail)
    elif kind == "turn":
        vm.heading = rotate(vm.heading, -1 if detail == "left" else 1)
        world.emit(id, "turned", {"heading": vm.heading})
    elif kind == "scan":
        if cfg.scan_cost:
            vm.fuel -= min(vm.fuel, cfg.scan_cost)
        perform_scan(world, id, detail)
        found = vm.gps if detail == "gps" else vm.scan_reg
        payload: dict[str, Any] = {"scan": detail}
        if detail == "gps":
            payload["gps"] = list(found)
        elif found is None:
            payload["found"] = None
        else:
            payload["found"] = found.kind.value
            payload["distance"] = found.distance
        world.emit(id, "scanned", payload)
    elif kind == "fire":
        _fire(world, bug, detail)
    elif kind == "discharge":
        world.emit(id, "discharged", {"pos": [bug.x, bug.y]})
        _splash(world, bug.x, bug.y, cfg.discharge_radius, cfg.discharge_damage,
                bug, "discharge", spare=bug, clear_mines=True)
    elif kind == "shield":
        _set_shield(world, bug, detail == "up")
    elif kind == "self_destruct":
        world.emit(id, "self_destructed", {"pos": [bug.x, bug.y]})
        _splash(world, bug.x, bug.y, cfg.selfdestruct_radius,
                cfg.selfdestruct_damage, bug, "self_destruct", spare=bug)
        if bug.alive:
            vm.damage = 100
            _destroy(world, bug, None)
    elif kind != "idle":
        raise ValueError(f"unknown action {action!r}")
    return world.log[start:]


def tick(world: World) -> list[Event]:
    start = len(world.log)
    upkeep = world.config.shield_upkeep_per_tick
    for bug in world.cybugs:
        if not bug.alive:
            continue
        vm = bug.vm
        if vm.shield_up:
            vm.fuel -= min(vm.fuel, upkeep)
            if vm.fuel <= 0:
                _set_shield(world, bug, False, reason="fuel")
        action, bug.last_executed = step_tick(vm, bug.host)
        apply_action(world, bug.id, action)
    world.tick += 1
    return world.log[start:]


def is_over(world: World) -> Outcome | None:
    teams = world.teams
    living = world.living_teams()
    if len(teams) >= 2 and len(living) <= 1:
        if living:
            return Outcome("team_eliminated", living[0])
        return Outcome("team_eliminated", _leader(world))
    if world.tick >= world.config.max_ticks:
        return Outcome("tick_limit", _leader(world))
    return None


def _leader(world: World) -> str | None:
    scores = world.scores
    if not scores:
        return None
    best = max(scores.values())
    top = [t for t, s in scores.items() if s == best]
    return top[0] if len(top) == 1 else None
