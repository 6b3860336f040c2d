"""
One match, tick by tick
=======================

Set up a duel by hand, step the world, and watch the log.
"""

from cybug import arena
from cybug.invariants import InvariantMonitor
from cybug.config import RuleConfig
from cybug.runner import builtin_bot, builtin_map

world = arena.load_map(builtin_map("duel"), RuleConfig(seed=42))
arena.spawn(world, builtin_bot("ghazu_spec"), "A")
arena.spawn(world, builtin_bot("wanderer"), "B")
print(world.render())

monitor = InvariantMonitor(world)   # raises if a rule is ever broken
while (outcome := arena.is_over(world)) is None:
    for ev in arena.tick(world):
        if ev.kind in ("fired", "hit", "destroyed", "flag_taken", "self_destructed"):
            print(ev.tick, ev.actor, ev.kind, ev.payload)
    monitor.observe()

print(outcome, "after", world.tick, "ticks")
print("scores:", world.scores)
print(world.render())
