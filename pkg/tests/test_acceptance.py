"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines;
they are printed even without ``-s``.
"""

import random
import time

import pytest

from cybug import arena, replay
from cybug.config import RuleConfig
from cybug.invariants import InvariantMonitor
from cybug.lang import Op, has_errors, parse, unreachable_regions
from cybug.runner import (MatchConfig, _unique_labels, build_world,
                          builtin_bot, finish, load_bot, load_map_text, run_match,
                          run_tournament)
from cybug.vm import ScanResult, init_vm, step_tick
from fuzzgen import RandomPerceptHost, random_program_source, restart
from oracles import DIRS, ray_oracle, reachable_oracle, turn


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail
    return emit


def monitored_play(world):
    """Play to the end, asserting every invariant after every tick."""
    monitor = InvariantMonitor(world)
    while (outcome := arena.is_over(world)) is None:
        arena.tick(world)
        monitor.observe()
    result, text = finish(world, outcome)
    return result, text, world.tick


class Ledger:
    """Ticks and runs checked by the invariant monitor across the suite."""
    runs = 0
    ticks = 0


def run_checked(config):
    result, text, ticks = monitored_play(build_world(config))
    Ledger.runs += 1
    Ledger.ticks += ticks
    return result, text


# ---------------------------------------------------------------------------

def test_criterion_1_corpus_fidelity(report, ghazu_source):
    program, diags = parse(ghazu_source, "lenient")
    codes = sorted(d.code for d in diags)
    undefined = [d for d in diags if d.code == "undefined-label"]
    strict_prog, strict_diags = parse(ghazu_source, "strict")
    bad_line = next(i for i, line in enumerate(ghazu_source.splitlines(), 1)
                    if "goto then hide" in line)
    strict_errs = [d for d in strict_diags if d.severity == "error"]
    ok = (program.name == "GHAZU"
          and set(program.labels) == {"start", "bhagta", "museebat", "suiside"}
          and codes == ["dangling-then", "recovered-syntax", "undefined-label"]
          and "hide" in undefined[0].message
          and not has_errors(diags)
          and any(d.span.line == bad_line for d in strict_errs))
    report(1, "corpus fidelity", ok,
           f"name={program.name} labels={sorted(program.labels)} diags={codes} "
           f"strict errors on line {bad_line}: "
           f"{sum(d.span.line == bad_line for d in strict_errs)}")


def test_criterion_2_lint_regions(report, ghazu):
    regions = unreachable_regions(ghazu)
    dead = {i for r in regions for i in r}
    oracle_dead = set(range(len(ghazu))) - reachable_oracle(ghazu)
    start = ghazu.labels["suiside"]
    seq = [i for i in range(start, len(ghazu))
           if ghazu.instructions[i].op in (Op.LOWER_SHIELD, Op.LAUNCH_MISSILE,
                                           Op.SELF_DESTRUCT)]
    covering = [r for r in regions if all(i in r for i in seq)]
    ok = len(regions) >= 2 and dead == oracle_dead and len(seq) == 3 and covering
    report(2, "lint regions on corpus", ok,
           f"{len(regions)} regions, {len(dead)} dead instructions, oracle agrees="
           f"{dead == oracle_dead}, suicide block {seq} in {covering}")


def test_criterion_3_lint_soundness(report):
    programs, ticks, violations, with_dead = 100, 10_000, 0, 0
    for p in range(programs):
        program, _ = parse(random_program_source(random.Random(p)))
        dead = {i for r in unreachable_regions(program) for i in r}
        with_dead += bool(dead)
        state = init_vm(program, RuleConfig())
        host = RandomPerceptHost(state, p)
        ran = set()
        for _ in range(ticks):
            _, executed = step_tick(state, host)
            ran.update(executed)
            host.perturb()
            if state.halted:
                restart(state)
        violations += len(ran & dead)
    report(3, "lint soundness fuzz", violations == 0,
           f"{programs} programs x {ticks} ticks, {with_dead} with dead code, "
           f"{violations} violations")


def test_criterion_4_determinism(report):
    bots = [("ghazu_spec", "A"), ("wanderer", "B")]
    repeat = {run_checked(MatchConfig("minefield", bots, seed=42))[0].digest
              for _ in range(10)}
    spread = {run_checked(MatchConfig("minefield", bots, seed=s))[0].digest
              for s in range(100)}
    ok = len(repeat) == 1 and len(spread) >= 90
    report(4, "determinism", ok,
           f"seed 42 x10 -> {len(repeat)} digest(s); 100 seeds -> {len(spread)} digests")


def first_response_latency(text):
    """Ticks from the first enemy sighting to the first attack at or after it."""
    events, _ = replay.read(text)
    seen = [e.tick for e in events if e.actor == 0 and e.kind == "scanned"
            and e.payload.get("found") == "enemy"]
    if not seen:
        return None
    attacks = [e.tick for e in events if e.actor == 0
               and e.kind in ("fired", "discharged") and e.tick >= seen[0]]
    return attacks[0] - seen[0] if attacks else None


def test_criterion_5_strategy(report):
    wins, slow = 0, []
    worst = 0
    for seed in range(100):
        result, text = run_checked(MatchConfig("duel", [("ghazu_spec", "A"), ("idle", "B")],
                                               seed=seed))
        if result.outcome == "team_eliminated" and result.winner == "A":
            wins += 1
            lat = first_response_latency(text)
            if lat is None or lat > 5:
                slow.append((seed, lat))
            else:
                worst = max(worst, lat)
    ok = wins >= 95 and not slow
    report(5, "strategy wins vs idle", ok,
           f"{wins}/100 wins, worst sighting-to-attack {worst} ticks, late wins {slow}")


def test_criterion_6_suicide(report):
    world = arena.load_map(load_map_text("duel"))
    me = world.bug(arena.spawn(world, builtin_bot("ghazu_spec"), "A"))
    foe = world.bug(arena.spawn(world, builtin_bot("idle"), "B"))
    # put the enemy directly ahead, adjacent
    del world.occupied[foe.pos]
    foe.x, foe.y = me.x, me.y + 1
    world.occupied[foe.pos] = foe
    me.vm.heading = "south"
    me.vm.damage = 96
    acts = []
    for _ in range(3):
        if not me.alive:
            break
        before = len(world.log)
        arena.tick(world)
        acts += [e.kind for e in world.log[before:] if e.actor == me.id
                 and e.kind not in ("shield_changed", "hit", "destroyed")]
    # the opening scan is perception; the first acting response must be the blast
    responses = [k for k in acts if k != "scanned"]
    ok = (acts[:1] == ["scanned"] and responses[:1] == ["self_destructed"]
          and foe.vm.damage == world.config.selfdestruct_damage and not me.alive)

    # same check from a primed state: sighting already in the scan register
    primed = arena.load_map(load_map_text("duel"))
    p_me = primed.bug(arena.spawn(primed, builtin_bot("ghazu_spec"), "A"))
    p_foe = primed.bug(arena.spawn(primed, builtin_bot("idle"), "B"))
    del primed.occupied[p_foe.pos]
    p_foe.x, p_foe.y = p_me.x + 1, p_me.y
    primed.occupied[p_foe.pos] = p_foe
    p_me.vm.heading = "east"
    p_me.vm.damage = 96
    p_me.vm.scan_reg = ScanResult(arena.EntityKind.ENEMY, 1)
    p_me.vm.pc = p_me.vm.program.labels["decide"]
    action, _ = step_tick(p_me.vm, p_me.host)
    ok = ok and action.kind == "self_destruct"
    report(6, "suicide rule", ok,
           f"actions {acts}, primed action {action.kind}, enemy damage {foe.vm.damage}")


def random_world(rng, size=12):
    cells = [[rng.choices(".#*F+", weights=(10, 2, 1, 1, 1))[0] for _ in range(size)]
             for _ in range(size)]
    n = rng.randint(2, 7)
    spots = rng.sample([(x, y) for y in range(size) for x in range(size)], n)
    grid = [row[:] for row in cells]
    for k, (x, y) in enumerate(spots):
        grid[y][x] = str(k + 1)
        cells[y][x] = "."
    world = arena.load_map("\n".join("".join(r) for r in grid))
    idle = parse("Start:\ngoto Start")[0]
    bugs = []
    for k in range(n):
        bug = world.bug(arena.spawn(world, idle, rng.choice("ABC")))
        bug.vm.heading = rng.choice(list(DIRS))
        if k and rng.random() < 0.15:
            bug.vm.damage = 100
            del world.occupied[bug.pos]
        bugs.append(bug)
    return world, cells, bugs


GLYPH_KIND = {"#": "barrier", "*": "mine", "F": "flag", "+": "fuel"}


def test_criterion_7_ray_oracle(report):
    rng = random.Random(2024)
    cfg = RuleConfig()
    checks = mismatches = 0
    examples = []
    for _ in range(1000):
        world, cells, bugs = random_world(rng)
        me = next(b for b in bugs if b.alive)
        others = [(b.x, b.y, b.team, b.alive) for b in bugs]
        for scan in ("long", "forward", "left", "right"):
            heading = turn(me.vm.heading, {"left": -1, "right": 1}.get(scan, 0))
            reach = cfg.scan_range_long if scan == "long" else cfg.scan_range_directional
            want = ray_oracle(cells, others, me.pos, heading, reach, ignore_team=me.team)
            if want is not None:
                d, (what, v) = want
                want = ScanResult(arena.EntityKind("enemy" if what == "bug"
                                                   else GLYPH_KIND[v]), d)
            got = arena.perform_scan(world, me.id, scan).scan_result
            checks += 1
            if got != want:
                mismatches += 1
                examples.append((scan, got, want))
        for weapon, reach in (("missile", cfg.missile_range), ("gun", cfg.gun_range)):
            want = ray_oracle(cells, [o for o, b in zip(others, bugs) if b is not me],
                              me.pos, me.vm.heading, reach, transparent=".F+")
            got = arena.weapon_ray(world, me, reach)
            if got is not None:
                d, what = got
                got = (d, ("bug", [b for b in bugs if b is not me].index(what))
                       if isinstance(what, arena.Cybug) else ("glyph", what))
            checks += 1
            if got != want:
                mismatches += 1
                examples.append((weapon, got, want))
    report(7, "ray-cast oracle equivalence", mismatches == 0,
           f"1000 worlds, {checks} rays, {mismatches} mismatches {examples[:3]}")


def test_criterion_8_conservation(report):
    # every acceptance match above ran under the monitor; add the perf match
    # and the tournament so nothing escapes checking
    run_checked(eight_bot_config())
    bots, rules = tournament_bots(), RuleConfig()
    labels = _unique_labels(bots)
    programs = [load_bot(b) for b in bots]
    map_text = load_map_text("duel")
    replayed = 0
    for i in range(len(bots)):
        for j in range(i + 1, len(bots)):
            for r in range(10):
                world = arena.load_map(map_text, rules.replace(seed=r))
                sides = [(labels[i], programs[i]), (labels[j], programs[j])]
                if r % 2:
                    sides.reverse()
                for label, prog in sides:
                    arena.spawn(world, prog, label)
                _, _, ticks = monitored_play(world)
                Ledger.runs += 1
                Ledger.ticks += ticks
                replayed += 1
    report(8, "conservation invariants", Ledger.runs > replayed,
           f"{Ledger.runs} monitored runs, {Ledger.ticks} ticks, 0 violations")


def eight_bot_config():
    bots = ["ghazu_spec", "ghazu_corpus", "wanderer", "idle"] * 2
    return MatchConfig("arena32", [(b, str(i)) for i, b in enumerate(bots)],
                       seed=1, max_ticks=1000)


def tournament_bots():
    return ["ghazu_spec", "ghazu_corpus", "wanderer", "idle"] * 2 + ["ghazu_spec", "wanderer"]


def test_criterion_9_performance(report):
    cfg = eight_bot_config()
    t0 = time.perf_counter()
    result, _ = run_match(cfg)
    match_s = time.perf_counter() - t0

    # worst case for the interpreter: every bot spins its full budget each tick
    idle = MatchConfig("arena32", [("idle", str(i)) for i in range(8)], max_ticks=1000)
    t0 = time.perf_counter()
    idle_result, _ = run_match(idle)
    idle_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    standings = run_tournament(tournament_bots(), "duel", rounds=10)
    tour_s = time.perf_counter() - t0
    ok = (result.ticks == idle_result.ticks == 1000 and match_s < 1.0 and idle_s < 1.0
          and len(standings.matches) == 450 and tour_s < 30.0)
    report(9, "desk-scale performance", ok,
           f"8-bot 1000 ticks {match_s:.2f}s (all-idle {idle_s:.2f}s); "
           f"10-bot 10-round tournament ({len(standings.matches)} matches) {tour_s:.1f}s")
