import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from nucparse.treebank import DepTree, Sentence, Token, load

ROOT_DIR = Path(__file__).resolve().parent.parent
FIGURES = ROOT_DIR / "data" / "figures"
MINI = ROOT_DIR / "data" / "mini"

LABELS = ("nsubj", "obj", "obl", "amod", "nmod", "advmod", "det", "case", "aux", "cop", "mark", "cc", "clf",
          "conj", "punct", "aux:pass", "nmod:poss")


def random_heads(rng: random.Random, n: int) -> list[int]:
    """Uniform-ish random single-rooted tree; any shape, projective or not."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * n
    for k, node in enumerate(order[1:], start=1):
        heads[node - 1] = order[rng.randrange(k)]
    return heads


def random_tree(rng: random.Random, n: int, labels=LABELS) -> DepTree:
    heads = random_heads(rng, n)
    return DepTree(heads, ["root" if h == 0 else rng.choice(labels) for h in heads])


@st.composite
def trees(draw, min_size=1, max_size=12, labels=LABELS):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(random.Random(seed), n, labels)


def sentence_from_tree(tree: DepTree, forms=None) -> Sentence:
    forms = forms or [f"w{i}" for i in range(1, len(tree) + 1)]
    return Sentence(tuple(Token(i, f, head=h, deprel=l)
                          for i, (f, h, l) in enumerate(zip(forms, tree.heads, tree.labels), start=1)))


@pytest.fixture(scope="session")
def fig1():
    return load(FIGURES / "fig1.conllu")[0]


@pytest.fixture(scope="session")
def fig3():
    return load(FIGURES / "fig3.conllu")[0]


@pytest.fixture(scope="session")
def mini_train():
    return load(MINI / "train.conllu")


@pytest.fixture(scope="session")
def mini_dev():
    return load(MINI / "dev.conllu")


# Acceptance results: criterion number -> (passed, detail), printed after the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
