"""
A small tournament, then auditing one replay
============================================
"""

import tempfile
from pathlib import Path

from cybug import replay
from cybug.runner import MatchConfig, run_match, run_tournament

standings = run_tournament(["ghazu_spec", "ghazu_corpus", "wanderer", "idle"],
                           "minefield", rounds=4, seed=100)
print(standings.format())

# Replays are plain JSON lines; the digest pins down the whole match.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "match.jsonl"
    result, text = run_match(MatchConfig("minefield", [("ghazu_spec", "A"), ("wanderer", "B")],
                                         seed=42), replay_path=path)
    print(result.summary())
    assert replay.digest(path.read_text()) == result.digest

# Rebuild the end state from events alone and compare.
events, record = replay.read(text)
state = replay.reconstruct(events)
print("rebuilt points:", state.points(), "recorded:", record["teams"])
print("mines cleared at:", state.mines_removed)

# Same seed, same bytes.
again, _ = run_match(MatchConfig("minefield", [("ghazu_spec", "A"), ("wanderer", "B")], seed=42))
print("reproducible:", again.digest == result.digest)
