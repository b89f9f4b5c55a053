from __future__ import annotations

import random
from pathlib import Path

import pytest

from toxaudit import SynthSpec, synth_corpus
from toxaudit.fairmetrics import ScoredExample

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def small_synth():
    """Deterministic 600-row corpus with one biased and one neutral identity."""
    spec = SynthSpec(
        n_comments=600,
        toxic_fraction=0.15,
        identity_bias_table={"muslim": (0.8, 0.15), "female": (0.3, 0.3)},
        seed=11,
    )
    return synth_corpus(spec)


def random_scored(rng: random.Random, n: int, subgroup: str | None = None) -> list[ScoredExample]:
    """Random scored examples guaranteed to contain both classes."""
    labels = [0, 1] + [rng.randint(0, 1) for _ in range(n - 2)]
    rng.shuffle(labels)
    out = []
    for i, label in enumerate(labels):
        groups = frozenset()
        if subgroup is not None and rng.random() < 0.4:
            groups = frozenset({subgroup})
        out.append(ScoredExample(str(i), label, rng.random(), groups))
    return out


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion PASS/FAIL lines at the end of the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
