"""Continuous checks of the world's conservation and safety properties."""

from __future__ import annotations

from .arena import BARRIER, FLAG, MINE, World


class InvariantViolation(AssertionError):
    pass


class InvariantMonitor:
    """Call :meth:`observe` after every tick; raises on the first violation.

    Checked: fuel bounds, damage monotonicity, occupancy (unique, in
    bounds, passable, index consistent), flag conservation, and mine
    monotonicity with every removal matched by a ``mine_tripped`` event.
    """

    def __init__(self, world: World):
        self.world = world
        self.damage = {b.id: b.vm.damage for b in world.cybugs}
        self.mines = world.count(MINE)
        self.log_pos = len(world.log)
        self.ticks_checked = 0
        self.observe()

    def _fail(self, msg: str) -> None:
        raise InvariantViolation(f"tick {self.world.tick}: {msg}")

    def observe(self) -> None:
        w = self.world
        cfg = w.config
        seen: dict[tuple[int, int], int] = {}
        for b in w.cybugs:
            vm = b.vm
            if not 0 <= vm.fuel <= cfg.fuel_max:
                self._fail(f"cybug {b.id} fuel {vm.fuel} out of bounds")
            if not 0 <= vm.damage <= 100:
                self._fail(f"cybug {b.id} damage {vm.damage} out of bounds")
            if vm.damage < self.damage.get(b.id, 0):
                self._fail(f"cybug {b.id} damage decreased")
            self.damage[b.id] = vm.damage
            if not b.alive:
                if w.occupied.get(b.pos) is b:
                    self._fail(f"dead cybug {b.id} still occupies {b.pos}")
                continue
            if b.pos in seen:
                self._fail(f"cybugs {seen[b.pos]} and {b.id} share {b.pos}")
            seen[b.pos] = b.id
            if not w.in_bounds(*b.pos) or w.cells[b.y][b.x] == BARRIER:
                self._fail(f"cybug {b.id} on impassable cell {b.pos}")
            if w.occupied.get(b.pos) is not b:
                self._fail(f"occupancy index disagrees for cybug {b.id}")
        if len(w.occupied) != len(seen):
            self._fail("occupancy index has stale entries")

        carried = sum(b.vm.flags_carried for b in w.cybugs)
        scored = sum(w.flags_scored.values())
        ground = w.count(FLAG)
        if ground + carried != w.initial_flags or scored != carried:
            self._fail(f"flags: ground {ground} + carried {carried} != "
                       f"{w.initial_flags} (scored {scored})")

        mines = w.count(MINE)
        tripped = sum(1 for ev in w.log[self.log_pos:] if ev.kind == "mine_tripped")
        if mines > self.mines:
            self._fail("mine count increased")
        if self.mines - mines != tripped:
            self._fail(f"{self.mines - mines} mines removed but {tripped} events")
        self.mines = mines
        self.log_pos = len(w.log)
        self.ticks_checked += 1
