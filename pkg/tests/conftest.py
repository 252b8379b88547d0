import json
from pathlib import Path

import pytest

from pioptions.tree import FixtureNode, FixtureTree

DATA = Path(__file__).parent / "data"

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def worked_tree() -> FixtureTree:
    return FixtureTree.from_dict(json.loads((DATA / "worked_tree.json").read_text()))


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda ln: ln.split()[1]):
            terminalreporter.write_line(line)


def random_h_tree(rng, depth: int, l: int, zero_prob: float = 0.3) -> FixtureNode:
    """Random exercise-value tree with a share of exact zeros (out-of-the-money nodes)."""
    h = 0.0 if rng.random() < zero_prob else float(rng.random())
    if depth == 0:
        return FixtureNode(h)
    return FixtureNode(h, tuple(random_h_tree(rng, depth - 1, l, zero_prob) for _ in range(l)))


def iter_nodes(node, path=()):
    yield path, node
    for j, c in enumerate(node.children):
        yield from iter_nodes(c, path + (j,))
