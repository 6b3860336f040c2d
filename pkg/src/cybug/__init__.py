"""Toolchain and deterministic battlefield for CAICL Cybug scripts."""

from .arena import (Event, MapError, Outcome, World, apply_action, is_over,
                    load_map, perform_scan, spawn, tick)
from .config import RuleConfig
from .lang import (Diagnostic, Program, build_cfg, format_program, lint, parse,
                   tokenize)
from .runner import (MatchConfig, MatchResult, MatchSetupError, Standings,
                     builtin_bot, run_match, run_tournament)
from .vm import Action, CybugVmState, eval_condition, init_vm, step_tick

__all__ = [
    "Action", "CybugVmState", "Diagnostic", "Event", "MapError", "MatchConfig",
    "MatchResult", "MatchSetupError", "Outcome", "Program", "RuleConfig",
    "Standings", "World", "apply_action", "build_cfg", "builtin_bot",
    "eval_condition", "format_program", "init_vm", "is_over", "lint", "load_map",
    "parse", "perform_scan", "run_match", "run_tournament", "spawn", "step_tick",
    "tick", "tokenize",
]

__version__ = "0.1.0"
