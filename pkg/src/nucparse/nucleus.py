"""Syntactic nuclei in UD trees: extraction, treebank statistics and the oracle form transform."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .treebank import DepTree, Sentence, universal

#: det, case, clf, aux, cop, mark and cc: the relations joining a function word to its nucleus
FUNCTIONAL_RELATIONS = frozenset({"det", "case", "clf", "aux", "cop", "mark", "cc"})

SEPARATOR = "-"


def functional_set(names: Optional[Iterable[str]] = None) -> frozenset[str]:
    """Build a functional relation set from names (default: the seven UD relations)."""
    if names is None:
        return FUNCTIONAL_RELATIONS
    rels = frozenset(universal(n.strip()) for n in names if n.strip())
    if not rels:
        raise ValueError("functional relation set must not be empty")
    return rels


def is_functional(label: str, functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> bool:
    return universal(label) in functional


@dataclass(frozen=True)
class Nucleus:
    core: int
    members: tuple[int, ...]
    contiguous: bool

    @property
    def dissociated(self) -> bool:
        return len(self.members) > 1


def nucleus_cores(tree: DepTree, functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> list[int]:
    """``cores[i-1]`` is the core of the nucleus containing token i.

    A token joins its head's nucleus when its relation is functional; a root token is
    always a core, even when labelled with a functional relation.
    """
    n = len(tree.heads)
    cores = [0] * n
    for i in range(1, n + 1):
        node = i
        steps = 0
        while tree.heads[node - 1] != 0 and universal(tree.labels[node - 1]) in functional:
            node = tree.heads[node - 1]
            steps += 1
            if steps > n:
                raise ValueError("cyclic tree")
        cores[i - 1] = node
    return cores


def extract_nuclei(tree: DepTree, functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> list[Nucleus]:
    """Partition the tokens into nuclei, ordered by their leftmost member."""
    groups: dict[int, list[int]] = {}
    for i, core in enumerate(nucleus_cores(tree, functional), start=1):
        groups.setdefault(core, []).append(i)
    nuclei = [Nucleus(core, tuple(m), m[-1] - m[0] + 1 == len(m)) for core, m in groups.items()]
    return sorted(nuclei, key=lambda nuc: nuc.members[0])


@dataclass
class NucleusStats:
    tokens: int = 0
    sentences: int = 0
    relation_counts: Counter = field(default_factory=Counter)
    single: int = 0
    dissociated: int = 0
    discontiguous: int = 0
    size_histogram: Counter = field(default_factory=Counter)
    functional: frozenset[str] = FUNCTIONAL_RELATIONS

    @property
    def nuclei(self) -> int:
        return self.single + self.dissociated

    def rate(self, relation: str) -> float:
        return self.relation_counts[relation] / self.tokens if self.tokens else 0.0

    def rows(self) -> list[tuple[str, str]]:
        out = [("tokens", str(self.tokens)), ("sentences", str(self.sentences))]
        for rel in sorted(self.functional):
            out.append((f"{rel}_count", str(self.relation_counts[rel])))
            out.append((f"{rel}_rate", f"{self.rate(rel):.6f}"))
        out += [("nuclei", str(self.nuclei)), ("single_word", str(self.single)),
                ("dissociated", str(self.dissociated)), ("discontiguous", str(self.discontiguous))]
        out += [(f"size_{k}", str(v)) for k, v in sorted(self.size_histogram.items())]
        return out


def nucleus_statistics(treebank: Sequence[Sentence],
                       functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> NucleusStats:
    stats = NucleusStats(functional=functional)
    for sent in treebank:
        tree = sent.tree
        stats.sentences += 1
        stats.tokens += len(tree)
        for label in tree.labels:
            if label in functional:
                stats.relation_counts[label] += 1
        for nuc in extract_nuclei(tree, functional):
            stats.size_histogram[len(nuc.members)] += 1
            if nuc.dissociated:
                stats.dissociated += 1
                if not nuc.contiguous:
                    stats.discontiguous += 1
            else:
                stats.single += 1
    return stats


def oracle_forms(sentence: Sentence, functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> list[str]:
    forms = sentence.forms
    out = list(forms)
    for nuc in extract_nuclei(sentence.tree, functional):
        if not nuc.dissociated:
            continue
        rest = [forms[m - 1] for m in sorted(nuc.members, reverse=True) if m != nuc.core]
        suffix = SEPARATOR + SEPARATOR.join(rest)
        core_form = forms[nuc.core - 1]
        # an already transformed core is left alone, so the transform is idempotent
        if not core_form.endswith(suffix):
            out[nuc.core - 1] = core_form + suffix
    return out


def oracle_transform(sentence: Sentence, functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> Sentence:
    """Rewrite each nucleus core's form as core + function words, rightmost first.

    ``the dog chased the cat from the room`` becomes
    ``the dog-the chased the cat-the from the room-the-from``. Heads, labels and the
    function-word lines themselves are untouched.
    """
    return sentence.with_forms(oracle_forms(sentence, functional))
