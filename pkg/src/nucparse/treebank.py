"""CoNLL-U reading and writing, and the sentence/tree model shared by the toolkit."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator, Optional, Sequence

logger = logging.getLogger(__name__)

COLUMNS = ("id", "form", "lemma", "upos", "xpos", "feats", "head", "deprel", "deps", "misc")


class ConllError(ValueError):
    """Malformed CoNLL-U input. ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def universal(deprel: str) -> str:
    """Strip the language-specific subtype: ``aux:pass`` -> ``aux``."""
    return deprel.split(":", 1)[0]


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: Optional[int] = None  # None when the HEAD column is "_"
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"token id must be >= 1, got {self.id}")
        if self.head is not None and (self.head < 0 or self.head == self.id):
            raise ValueError(f"token {self.id} has invalid head {self.head}")

    @property
    def deprel_universal(self) -> str:
        return universal(self.deprel)

    def to_line(self) -> str:
        head = "_" if self.head is None else str(self.head)
        cols = (str(self.id), self.form, self.lemma, self.upos, self.xpos, self.feats,
                head, self.deprel, self.deps, self.misc)
        return "\t".join(c if c != "" else "_" for c in cols)


@dataclass(frozen=True)
class DepTree:
    """Head and label arrays over tokens 1..n (index i holds token i+1)."""

    heads: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(self.heads))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.heads) != len(self.labels):
            raise ValueError("heads and labels differ in length")

    def __len__(self):
        return len(self.heads)

    @property
    def children(self) -> tuple[tuple[int, ...], ...]:
        """``children[h]`` lists dependents of item h (0 = root), in linear order."""
        kids: list[list[int]] = [[] for _ in range(len(self.heads) + 1)]
        for dep, head in enumerate(self.heads, start=1):
            if 0 <= head <= len(self.heads):
                kids[head].append(dep)
        return tuple(tuple(k) for k in kids)

    def head(self, i: int) -> int:
        return self.heads[i - 1]

    def label(self, i: int) -> str:
        return self.labels[i - 1]

    def arcs(self) -> set[tuple[int, int, str]]:
        return {(h, d, l) for d, (h, l) in enumerate(zip(self.heads, self.labels), start=1)}


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    # (start, end, raw line) for every multiword token line, kept verbatim
    multiword_ranges: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "comments", tuple(self.comments))
        object.__setattr__(self, "multiword_ranges", tuple(self.multiword_ranges))

    def __len__(self):
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def sent_id(self) -> Optional[str]:
        for c in self.comments:
            body = c.lstrip("#").strip()
            if body.startswith("sent_id"):
                return body.split("=", 1)[-1].strip()
        return None

    @property
    def has_tree(self) -> bool:
        return all(t.head is not None for t in self.tokens)

    @property
    def tree(self) -> DepTree:
        """The basic tree with universal labels."""
        if not self.has_tree:
            raise ValueError("sentence has no HEAD annotation")
        return DepTree(tuple(t.head for t in self.tokens),
                       tuple(t.deprel_universal for t in self.tokens))

    def with_tree(self, tree: DepTree) -> "Sentence":
        if len(tree) != len(self.tokens):
            raise ValueError("tree length does not match sentence")
        toks = []
        for t, h, l in zip(self.tokens, tree.heads, tree.labels):
            # keep a gold subtype when the universal part is unchanged
            deprel = t.deprel if t.deprel != "_" and universal(t.deprel) == l else l
            toks.append(replace(t, head=h, deprel=deprel))
        return replace(self, tokens=tuple(toks))

    def with_forms(self, forms: Sequence[str]) -> "Sentence":
        return replace(self, tokens=tuple(replace(t, form=f) for t, f in zip(self.tokens, forms)))


def validate_tree(tree: DepTree) -> list[str]:
    """Return human-readable violations; empty iff acyclic, single-rooted and in range."""
    n = len(tree.heads)
    problems = []
    for dep, head in enumerate(tree.heads, start=1):
        if not 0 <= head <= n:
            problems.append(f"token {dep}: head {head} out of range 0..{n}")
        elif head == dep:
            problems.append(f"token {dep}: attached to itself")
    roots = [d for d, h in enumerate(tree.heads, start=1) if h == 0]
    if not roots:
        problems.append("no root: no token has head 0")
    elif len(roots) > 1:
        problems.append(f"multiple roots: tokens {roots}")
    if problems and any("out of range" in p for p in problems):
        return problems
    # colour nodes reached from the root; anything left lies on a cycle or hangs off one
    state = [0] * (n + 1)  # 0 unseen, 1 on current path, 2 done
    reported: set[frozenset[int]] = set()
    for start in range(1, n + 1):
        path = []
        node = start
        while node != 0 and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = tree.heads[node - 1]
        if node != 0 and state[node] == 1:
            cycle = path[path.index(node):]
            key = frozenset(cycle)
            if key not in reported:
                reported.add(key)
                problems.append(f"cycle: tokens {sorted(cycle)}")
        for p in path:
            state[p] = 2
    return problems


def _parse_int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConllError(f"bad {what} {text!r}", lineno) from None


def _describe(index: int, comments: Sequence[str]) -> str:
    for c in comments:
        body = c.lstrip("#").strip()
        if body.startswith("sent_id"):
            return f"sentence {body.split('=', 1)[-1].strip()!r}"
    return f"sentence #{index}"


def _build(lines: list[tuple[int, str]], index: int, drop_invalid: bool) -> Optional[Sentence]:
    comments: list[str] = []
    tokens: list[Token] = []
    ranges: list[tuple[int, int, str]] = []
    for lineno, line in lines:
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(f"expected 10 tab-separated columns, found {len(cols)}", lineno)
        ident = cols[0]
        if "-" in ident:
            a, b = ident.split("-", 1)
            ranges.append((_parse_int(a, lineno, "range start"), _parse_int(b, lineno, "range end"), line))
            continue
        if "." in ident:
            logger.warning("line %d: skipping empty node %s", lineno, ident)
            continue
        head = None if cols[6] == "_" else _parse_int(cols[6], lineno, "head")
        try:
            tokens.append(Token(_parse_int(ident, lineno, "id"), cols[1], cols[2], cols[3], cols[4],
                                cols[5], head, cols[7], cols[8], cols[9]))
        except ValueError as err:
            if isinstance(err, ConllError):
                raise
            raise ConllError(str(err), lineno) from None
    if not tokens:
        if comments or ranges:
            raise ConllError(f"{_describe(index, comments)} has no word lines", lines[0][0])
        return None
    ids = [t.id for t in tokens]
    if ids != list(range(1, len(tokens) + 1)):
        raise ConllError(f"{_describe(index, comments)}: ids are not 1..{len(tokens)}: {ids}", lines[0][0])
    sent = Sentence(tuple(tokens), tuple(comments), tuple(ranges))
    if sent.has_tree:
        problems = validate_tree(sent.tree)
        if problems:
            if not drop_invalid:
                raise ConllError(f"{_describe(index, comments)}: {'; '.join(problems)}", lines[0][0])
            logger.warning("dropping %s: %s", _describe(index, comments), "; ".join(problems))
            return None
    elif any(t.head is not None for t in tokens):
        raise ConllError(f"{_describe(index, comments)}: HEAD given for some tokens only", lines[0][0])
    return sent


def iter_conllu(source: IO[str] | Iterable[str], drop_invalid: bool = True) -> Iterator[Sentence]:
    block: list[tuple[int, str]] = []
    index = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if line.strip() == "":
            if block:
                index += 1
                sent = _build(block, index, drop_invalid)
                if sent is not None:
                    yield sent
                block = []
            continue
        block.append((lineno, line))
    if block:
        sent = _build(block, index + 1, drop_invalid)
        if sent is not None:
            yield sent


def read_conllu(source: IO[str] | Iterable[str], drop_invalid: bool = True) -> list[Sentence]:
    """Parse CoNLL-U text.

    Multiword token lines go to ``multiword_ranges``; empty nodes are skipped with a
    warning. Sentences whose annotated tree is invalid are dropped (logged) unless
    ``drop_invalid`` is false, in which case they raise :class:`ConllError`.
    """
    return list(iter_conllu(source, drop_invalid))


def load(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return read_conllu(f)


def format_sentence(sentence: Sentence) -> str:
    lines = list(sentence.comments)
    pending = sorted(sentence.multiword_ranges)
    k = 0
    for tok in sentence.tokens:
        while k < len(pending) and pending[k][0] <= tok.id:
            lines.append(pending[k][2])
            k += 1
        lines.append(tok.to_line())
    lines.extend(r[2] for r in pending[k:])
    return "\n".join(lines) + "\n"


def write_conllu(sentences: Iterable[Sentence], sink: IO[str]) -> None:
    for sent in sentences:
        sink.write(format_sentence(sent))
        sink.write("\n")


def save(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_conllu(sentences, f)
