"""``cybug`` command line: parse, lint, run, tournament, replay.

Exit codes: 0 success, 1 errors in diagnostics or match setup, 2 usage.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence, TextIO

from . import replay as replay_io
from .config import RuleConfig
from .lang import Diagnostic, format_diagnostic, has_errors, lint, parse
from .runner import (MatchConfig, MatchSetupError, run_match, run_tournament)


def _read(path: str, err: TextIO) -> str | None:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"cybug: cannot read {path}: {e.strerror}", file=err)
        return None


def _print_diags(diags: Sequence[Diagnostic], filename: str, out: TextIO) -> None:
    for d in diags:
        print(format_diagnostic(d, filename), file=out)


def cmd_parse(args, out: TextIO, err: TextIO) -> int:
    text = _read(args.file, err)
    if text is None:
        return 1
    program, diags = parse(text, "strict" if args.strict else "lenient")
    print(f"name: {program.name}", file=out)
    print(f"instructions: {len(program)}", file=out)
    labels = ", ".join(f"{k}@{i}" for k, i in sorted(program.labels.items(),
                                                      key=lambda kv: kv[1]))
    print(f"labels: {labels or '-'}", file=out)
    _print_diags(diags, args.file, out)
    return 1 if has_errors(diags) else 0


def cmd_lint(args, out: TextIO, err: TextIO) -> int:
    text = _read(args.file, err)
    if text is None:
        return 1
    program, diags = parse(text, "strict" if args.strict else "lenient")
    seen = {(d.code, d.span) for d in diags}
    merged = list(diags) + [d for d in lint(program) if (d.code, d.span) not in seen]
    merged.sort(key=lambda d: (d.span.line, d.span.column_start, d.code))
    _print_diags(merged, args.file, out)
    return 1 if has_errors(merged) else 0


def _rules(args, err: TextIO) -> RuleConfig | None:
    rules = RuleConfig()
    try:
        if args.config:
            text = _read(args.config, err)
            if text is None:
                return None
            rules = RuleConfig.from_text(text, rules)
        overrides = {}
        for item in args.set or ():
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"--set expects key=value, got {item!r}")
            overrides[key.strip()] = value.strip()
        return rules.replace(**overrides)
    except (KeyError, ValueError) as e:
        print(f"cybug: bad rule configuration: {e}", file=err)
        return None


def _bot_arg(item: str, index: int) -> tuple[str, str]:
    path, sep, team = item.rpartition(":")
    if sep and path and team and os.sep not in team:
        return path, team
    return item, str(index)


def _setup_failure(e: MatchSetupError, err: TextIO) -> int:
    print(f"cybug: {e}", file=err)
    _print_diags(e.diagnostics, e.bot or "<bot>", err)
    return 1


def cmd_run(args, out: TextIO, err: TextIO) -> int:
    rules = _rules(args, err)
    if rules is None:
        return 1
    bots = [_bot_arg(b, i) for i, b in enumerate(args.bot)]
    config = MatchConfig(map=args.map, bots=bots, seed=args.seed,
                         max_ticks=args.max_ticks, rules=rules)
    try:
        result, _ = run_match(config, replay_path=args.replay)
    except MatchSetupError as e:
        return _setup_failure(e, err)
    print(result.summary(), file=out)
    return 0


def _tournament_bots(spec: str) -> list[str]:
    p = Path(spec)
    if p.is_dir():
        return [str(f) for f in sorted(p.glob("*.cb"))]
    return [s.strip() for s in spec.split(",") if s.strip()]


def cmd_tournament(args, out: TextIO, err: TextIO) -> int:
    rules = _rules(args, err)
    if rules is None:
        return 1
    bots = _tournament_bots(args.bots)
    if len(bots) < 2:
        print("cybug: a tournament needs at least two bots", file=err)
        return 1
    try:
        standings = run_tournament(bots, args.map, args.rounds, args.seed,
                                   rules=rules, workers=args.workers)
    except MatchSetupError as e:
        return _setup_failure(e, err)
    if args.report:
        Path(args.report).write_text(standings.to_json(), encoding="utf-8")
    print(f"{len(standings.matches)} matches", file=out)
    print(standings.format(), file=out)
    return 0


def _describe(ev) -> str:
    p = ev.payload
    who = "world" if ev.actor == "world" else f"bug {ev.actor}"
    detail = " ".join(f"{k}={p[k]}" for k in sorted(p))
    return f"t={ev.tick:<5} {who:<8} {ev.kind:<15} {detail}".rstrip()


def cmd_replay(args, out: TextIO, err: TextIO) -> int:
    text = _read(args.file, err)
    if text is None:
        return 1
    try:
        events, result = replay_io.read(text)
    except ValueError as e:
        print(f"cybug: {args.file}: malformed replay: {e}", file=err)
        return 1
    if args.format == "text":
        for ev in events:
            print(_describe(ev), file=out)
    else:
        counts = Counter(ev.kind for ev in events)
        print(f"events: {len(events)}", file=out)
        for kind, n in sorted(counts.items()):
            print(f"  {kind}: {n}", file=out)
    if result is not None:
        winner = result.get("winner")
        print(f"result: {'draw' if winner is None else 'winner ' + str(winner)} "
              f"({result.get('outcome')}) after {result.get('ticks')} ticks", file=out)
    print(f"sha256: {replay_io.digest(text)}", file=out)
    return 0


def _default_seed() -> int:
    raw = os.environ.get("CYBUG_SEED")
    try:
        return int(raw) if raw else 0
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cybug", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a script and summarise it")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("lint", help="static checks on a script")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_lint)

    def rule_flags(p):
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help="PRNG seed (default: $CYBUG_SEED or 0)")
        p.add_argument("--config", help="key=value rule file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one rule; wins over --config")

    p = sub.add_parser("run", help="play one match")
    p.add_argument("--map", required=True, help="map file or builtin map name")
    p.add_argument("--bot", required=True, action="append",
                   help="script path or builtin name, optionally FILE:TEAM")
    p.add_argument("--max-ticks", type=int)
    p.add_argument("--replay", help="write the JSON-lines replay here")
    rule_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tournament", help="round-robin tournament")
    p.add_argument("--bots", required=True, help="directory of .cb files or comma list")
    p.add_argument("--map", required=True)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--report", help="write the JSON standings report here")
    p.add_argument("--workers", type=int, default=None)
    rule_flags(p)
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("replay", help="inspect a replay file")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "summary"), default="text")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return args.func(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
