from pathlib import Path

import pytest

from shotfit.corpus import SyntheticSpec, generate_synthetic_corpus, read_corpus, stratified_split

FIXTURES = Path(__file__).parent / "fixtures"
REVIEWS_860 = FIXTURES / "reviews_860.csv"

# 3 classes, 100 train + 100 test per class (each class/dialect cell splits 50/50)
SYNTH_SPEC = SyntheticSpec(classes=3, per_class=200)
SYNTH_SEED = 11
SYNTH_SPLIT_SEED = 1


def synthetic_split():
    corpus = generate_synthetic_corpus(SYNTH_SPEC, SYNTH_SEED)
    return stratified_split(corpus, 0.5, SYNTH_SPLIT_SEED)


@pytest.fixture(scope="session")
def reviews_860():
    return read_corpus(REVIEWS_860)


@pytest.fixture(scope="session")
def synth_split():
    return synthetic_split()


# acceptance criteria report their verdicts here; echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
