import json
from pathlib import Path

import pytest

from rescuegraph.graphio import corpus_manifest_path, corpus_path, parse_graph
from rescuegraph.validate import load_manifest

FIXTURES = Path(__file__).parent / "fixtures"


class StepClock:
    """Deterministic clock: every call advances by a fixed step."""

    def __init__(self, start: float = 1000.0, step: float = 1.0):
        self.now = start
        self.step = step

    def __call__(self) -> float:
        self.now += self.step
        return self.now


@pytest.fixture(scope="session")
def corpus_text() -> str:
    return corpus_path().read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def corpus_doc(corpus_text):
    return json.loads(corpus_text)


@pytest.fixture(scope="session")
def corpus_graph(corpus_text):
    return parse_graph(corpus_text)


@pytest.fixture(scope="session")
def corpus_manifest():
    return load_manifest(corpus_manifest_path())


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
