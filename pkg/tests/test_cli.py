import io
import json
import re
import subprocess
import sys

import pytest

from cybug.cli import main

DIAG = re.compile(r"^.+:\d+:\d+: (error|warning|info)\[[a-z-]+\] ")


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_lint_corpus_exits_zero(ghazu_path):
    code, out, _ = cli("lint", ghazu_path)
    assert code == 0
    lines = out.splitlines()
    assert lines and all(DIAG.match(line) for line in lines)
    assert any("[unreachable-code]" in line for line in lines)
    assert not any("error[" in line for line in lines)


def test_parse_strict_corpus_fails(ghazu_path):
    code, out, _ = cli("parse", ghazu_path, "--strict")
    assert code == 1
    assert re.search(r":38:\d+: error\[", out)


def test_parse_summary(ghazu_path):
    code, out, _ = cli("parse", ghazu_path)
    assert code == 0
    assert out.startswith("name: GHAZU\ninstructions: 35\n")
    assert "labels: start@2, bhagta@15, museebat@19, suiside@30" in out


def test_run_without_map_is_usage_error(capsys):
    code, _, _ = cli("run", "--bot", "idle")
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert cli("frobnicate")[0] == 2


def test_missing_file():
    code, _, err = cli("lint", "/nonexistent.cb")
    assert code == 1 and "cannot read" in err


def test_run_prints_summary_and_writes_replay(tmp_path):
    rp = tmp_path / "m.jsonl"
    args = ("run", "--map", "duel", "--bot", "ghazu_spec:A", "--bot", "idle:B",
            "--seed", "42", "--replay", str(rp))
    code, out, _ = cli(*args)
    assert code == 0 and out.startswith("winner A (team_eliminated)")
    assert rp.exists()
    # byte-identical stdout on repeat
    assert cli(*args)[1] == out

    code, text, _ = cli("replay", str(rp))
    assert code == 0 and "spawned" in text and "result: winner A" in text
    code, summ, _ = cli("replay", str(rp), "--format", "summary")
    assert code == 0 and summ.startswith("events: ")


def test_run_bot_with_errors_fails(tmp_path):
    bad = tmp_path / "bad.cb"
    bad.write_text("jump around\n")
    code, _, err = cli("run", "--map", "duel", "--bot", str(bad), "--bot", "idle")
    assert code == 1 and "syntax-error" in err


def test_config_file_and_set_precedence(tmp_path):
    conf = tmp_path / "rules.txt"
    conf.write_text("# rules\nmax_ticks = 40\n")
    code, out, _ = cli("run", "--map", "duel", "--bot", "idle", "--bot", "idle",
                       "--config", str(conf))
    assert code == 0 and "after 40 ticks" in out
    code, out, _ = cli("run", "--map", "duel", "--bot", "idle", "--bot", "idle",
                       "--config", str(conf), "--set", "max_ticks=12")
    assert "after 12 ticks" in out
    code, _, err = cli("run", "--map", "duel", "--bot", "idle", "--bot", "idle",
                       "--set", "bogus=1")
    assert code == 1 and "bad rule" in err


def test_seed_from_environment(monkeypatch, tmp_path):
    args = ("run", "--map", "minefield", "--bot", "wanderer", "--bot", "wanderer",
            "--max-ticks", "100")
    monkeypatch.setenv("CYBUG_SEED", "9")
    env_out = cli(*args)[1]
    flag_wins = cli(*args, "--seed", "0")[1]
    monkeypatch.delenv("CYBUG_SEED")
    assert cli(*args, "--seed", "9")[1] == env_out
    assert cli(*args)[1] == flag_wins


def test_tournament_report(tmp_path):
    report = tmp_path / "standings.json"
    code, out, _ = cli("tournament", "--bots", "ghazu_spec,idle,wanderer", "--map", "duel",
                       "--rounds", "2", "--report", str(report), "--set", "max_ticks=150")
    assert code == 0 and out.startswith("6 matches\n")
    doc = json.loads(report.read_text())
    assert {row["bot"] for row in doc["table"]} == {"ghazu_spec", "idle", "wanderer"}


def test_tournament_from_directory(tmp_path):
    for name in ("a", "b"):
        (tmp_path / f"{name}.cb").write_text(f"name {name}\nStart:\ngoto Start\n")
    code, out, _ = cli("tournament", "--bots", str(tmp_path), "--map", "duel",
                       "--set", "max_ticks=5")
    assert code == 0 and out.startswith("1 matches")


@pytest.mark.parametrize("sub", ["parse", "lint", "run", "tournament", "replay"])
def test_console_entry_point_help(sub):
    r = subprocess.run([sys.executable, "-m", "cybug.cli", sub, "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "usage" in r.stdout
