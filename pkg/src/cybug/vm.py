"""Per-agent interpreter.

Each tick the VM runs instructions from ``pc`` until one *acting*
instruction (move, turn, directional or long scan, fire, discharge, self
destruct) is reached; that instruction becomes the tick's :class:`Action`.
Everything else is *instant* and costs one unit of the per-tick budget.
The program counter persists across ticks.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

from .config import RuleConfig
from .lang import ACTING_OPS, CondKind, Condition, EntityKind, Op, Program

HEADINGS = ("north", "east", "south", "west")


class Action(NamedTuple):
    kind: str    # move | turn | scan | fire | discharge | shield | self_destruct | idle
    detail: str | None = None

    @property
    def is_idle(self) -> bool:
        return self.kind == "idle"


IDLE_BUDGET = Action("idle", "budget_exhausted")
IDLE_HALTED = Action("idle", "program_halted")

OP_ACTIONS: dict[Op, Action] = {
    Op.MOVE_FORWARD: Action("move", "forward"),
    Op.MOVE_BACKWARD: Action("move", "backward"),
    Op.TURN_LEFT: Action("turn", "left"),
    Op.TURN_RIGHT: Action("turn", "right"),
    Op.LONG_RANGE_SCAN: Action("scan", "long"),
    Op.SCAN_FORWARD: Action("scan", "forward"),
    Op.SCAN_LEFT: Action("scan", "left"),
    Op.SCAN_RIGHT: Action("scan", "right"),
    Op.LAUNCH_MISSILE: Action("fire", "missile"),
    Op.FIRE_GUN: Action("fire", "gun"),
    Op.THROW_GRENADE: Action("fire", "grenade"),
    Op.DISCHARGE_ENERGY: Action("discharge"),
    Op.SELF_DESTRUCT: Action("self_destruct"),
}
assert set(OP_ACTIONS) == ACTING_OPS


class ScanResult(NamedTuple):
    kind: EntityKind
    distance: int


class Percepts(NamedTuple):
    scan_result: ScanResult | None = None
    bump: bool = False
    gps: tuple[int, int] | None = None


class Host(Protocol):
    """What the VM needs from the battlefield during a tick."""

    def draw_random(self, upper: int) -> int: ...
    def gps(self) -> tuple[int, int]: ...
    def set_shield(self, up: bool) -> None: ...
    def fault(self, reason: str) -> None: ...


@dataclass(eq=False)
class CybugVmState:
    program: Program
    config: RuleConfig
    pc: int = 0
    call_stack: list[int] = field(default_factory=list)
    fuel: int = 0
    damage: int = 0
    random_reg: int = 1
    scan_reg: ScanResult | None = None
    gps: tuple[int, int] | None = None
    bump_flag: bool = False
    shield_up: bool = False
    heading: str = "north"
    ammo: dict[str, int] = field(default_factory=dict)
    flags_carried: int = 0
    faulted: bool = False
    targets: tuple[int | None, ...] = ()

    @property
    def alive(self) -> bool:
        return self.damage < 100

    @property
    def halted(self) -> bool:
        return self.faulted or self.pc >= len(self.program.instructions)

    def snapshot(self) -> tuple:
        """Hashable copy of the mutable registers (for purity checks)."""
        return (self.pc, tuple(self.call_stack), self.fuel, self.damage,
                self.random_reg, self.scan_reg, self.gps, self.bump_flag,
                self.shield_up, self.heading, tuple(sorted(self.ammo.items())),
                self.flags_carried, self.faulted)


def _resolve_targets(program: Program) -> tuple[int | None, ...]:
    out = []
    for ins in program.instructions:
        act = ins.action
        out.append(program.resolve(act.arg) if act.op.is_jump else None)
    return tuple(out)


def init_vm(program: Program, config: RuleConfig | None = None,
            heading: str = "north") -> CybugVmState:
    config = config or RuleConfig()
    return CybugVmState(
        program=program,
        config=config,
        fuel=config.fuel_start,
        heading=heading,
        ammo={"missile": config.missile_ammo, "gun": config.gun_ammo,
              "grenade": config.grenade_ammo},
        targets=_resolve_targets(program),
    )


_CMP = {"<": operator.lt, ">": operator.gt, "=": operator.eq,
        "<=": operator.le, ">=": operator.ge}


def eval_condition(cond: Condition, state: CybugVmState) -> bool:
    kind = cond.kind
    if kind is CondKind.SCAN_FOUND:
        found = state.scan_reg
        if found is None or found.kind is not cond.entity:
            return False
        cfg = state.config
        if cond.entity is EntityKind.ENEMY:
            reach = cfg.enemy_range
        else:
            reach = max(cfg.scan_range_long, cfg.scan_range_directional)
        return found.distance <= reach
    if kind is CondKind.BUMP_BARRIER:
        return state.bump_flag
    if kind is CondKind.RANDOM_IS:
        return state.random_reg == cond.value
    if kind is CondKind.FUEL_CMP:
        return _CMP[cond.comparator](state.fuel, cond.value)
    return _CMP[cond.comparator](state.damage, cond.value)


def _fault(state: CybugVmState, host: Host, reason: str) -> Action:
    state.faulted = True
    host.fault(reason)
    return IDLE_HALTED


def step_tick(state: CybugVmState, host: Host) -> tuple[Action, list[int]]:
    """Run one tick; returns the action and the executed instruction indices."""
    code = state.program.instructions
    n = len(code)
    targets = state.targets
    budget = state.config.budget
    executed: list[int] = []
    if state.faulted:
        return IDLE_HALTED, executed

    while True:
        pc = state.pc
        if pc >= n:
            state.pc = n
            return IDLE_HALTED, executed
        if budget <= 0:
            return IDLE_BUDGET, executed
        ins = code[pc]
        executed.append(pc)
        budget -= 1
        op = ins.op
        if op is Op.IF:
            if not eval_condition(ins.cond, state):
                state.pc = pc + 1
                continue
            ins = ins.then
            op = ins.op
            if op not in ACTING_OPS:
                budget -= 1

        action = OP_ACTIONS.get(op)
        if action is not None:
            state.pc = pc + 1
            return action, executed

        if op is Op.GOTO:
            t = targets[pc]
            state.pc = pc + 1 if t is None else t
        elif op is Op.GOSUB:
            t = targets[pc]
            if t is None:
                state.pc = pc + 1
            elif len(state.call_stack) >= state.config.call_depth:
                return _fault(state, host, "call stack overflow"), executed
            else:
                state.call_stack.append(pc + 1)
                state.pc = t
        elif op is Op.RETURN:
            if not state.call_stack:
                return _fault(state, host, "return with empty call stack"), executed
            state.pc = state.call_stack.pop()
        elif op is Op.GENERATE_RANDOM:
            state.random_reg = host.draw_random(state.config.random_max)
            state.pc = pc + 1
        elif op is Op.RAISE_SHIELD or op is Op.LOWER_SHIELD:
            host.set_shield(op is Op.RAISE_SHIELD)
            state.pc = pc + 1
        elif op is Op.GPS_SCAN:
            state.gps = host.gps()
            state.pc = pc + 1
        else:  # Op.NAME
            state.pc = pc + 1
