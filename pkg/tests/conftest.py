import os
from pathlib import Path

import numpy as np
import pytest

from lse_recovery.graph import Graph, parse_tudataset

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("LSE_DATA_DIR", ROOT / "data"))

ACCEPTANCE_LINES: list[str] = []


def dataset_available(name: str) -> bool:
    return (DATA_DIR / name / f"{name}_A.txt").is_file()


@pytest.fixture(scope="session")
def mutag():
    if not dataset_available("MUTAG"):
        pytest.fail(f"MUTAG not found under {DATA_DIR}")
    return parse_tudataset(DATA_DIR / "MUTAG", "MUTAG")


def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def path3() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2)])


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4, label: int = 0, id: int = 1) -> Graph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges, label=label, id=id)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
