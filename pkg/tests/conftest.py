import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cybug.lang import parse  # noqa: E402

ASSETS = Path(__file__).parent / "assets"


@pytest.fixture(scope="session")
def ghazu_source():
    return (ASSETS / "ghazu.cb").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def ghazu(ghazu_source):
    program, _ = parse(ghazu_source, "lenient")
    return program


@pytest.fixture
def ghazu_path():
    return str(ASSETS / "ghazu.cb")


class FakeHost:
    """Minimal VM host: seeded randomness, records shield and faults."""

    def __init__(self, state=None, seed=0, pos=(0, 0)):
        self.state = state
        self.rng = random.Random(seed)
        self.pos = pos
        self.faults = []
        self.shield_calls = []

    def draw_random(self, upper):
        return self.rng.randint(1, upper)

    def gps(self):
        return self.pos

    def set_shield(self, up):
        self.shield_calls.append(up)
        if self.state is not None:
            self.state.shield_up = up

    def fault(self, reason):
        self.faults.append(reason)


@pytest.fixture
def fake_host():
    return FakeHost
