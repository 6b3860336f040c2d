"""Rule magnitudes for a match.

None of these numbers are canonical; they are defaults chosen so the
reference scripts play sensibly, and every one can be overridden from a
``key=value`` config file or programmatically.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class RuleConfig:
    fuel_start: int = 100
    fuel_max: int = 100
    move_cost: int = 1
    blocked_move_cost: int = 1
    shield_upkeep_per_tick: int = 1
    scan_cost: int = 0

    missile_ammo: int = 20
    missile_damage: int = 30
    missile_range: int = 8
    gun_ammo: int = 50
    gun_damage: int = 10
    gun_range: int = 3
    grenade_ammo: int = 5
    grenade_damage: int = 20
    grenade_offset: int = 3
    grenade_radius: int = 1
    discharge_damage: int = 20
    discharge_radius: int = 1
    selfdestruct_damage: int = 60
    selfdestruct_radius: int = 2
    mine_damage: int = 25
    fuel_pickup: int = 50
    shield_factor: float = 0.5

    scan_range_long: int = 8
    scan_range_directional: int = 4

    budget: int = 64
    call_depth: int = 16
    random_max: int = 4

    flag_points: int = 10
    kill_points: int = 5

    max_ticks: int = 1000
    seed: int = 0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name != "seed" and v < 0:
                raise ValueError(f"{f.name} must be >= 0, got {v}")
        for name in ("missile_range", "gun_range", "grenade_offset",
                     "scan_range_long", "scan_range_directional",
                     "budget", "random_max", "fuel_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.shield_factor <= 1.0:
            raise ValueError("shield_factor must lie in [0, 1]")
        if self.fuel_start > self.fuel_max:
            raise ValueError("fuel_start exceeds fuel_max")

    def replace(self, **changes) -> RuleConfig:
        """Copy with *changes*; string values are coerced to the field type."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        coerced = {}
        for key, value in changes.items():
            if key not in types:
                raise KeyError(f"unknown rule '{key}'")
            if isinstance(value, str):
                value = float(value) if types[key] in (float, "float") else int(value)
            coerced[key] = value
        return dataclasses.replace(self, **coerced)

    @classmethod
    def from_text(cls, text: str, base: RuleConfig | None = None) -> RuleConfig:
        """Parse ``key=value`` lines (``#`` comments and blank lines ignored)."""
        changes = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            changes[key.strip()] = value.strip()
        return (base or cls()).replace(**changes)

    @property
    def enemy_range(self) -> int:
        """Distance at which ``scan found enemy`` counts as in range."""
        return self.missile_range
