"""LAS, CLAS, per-relation labeled F-scores, weighted improvement deltas and Welch's t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from scipy.special import betainc

from .nucleus import FUNCTIONAL_RELATIONS
from .treebank import DepTree, universal


class AlignmentError(ValueError):
    pass


def _pairs(system: Sequence[DepTree], gold: Sequence[DepTree]):
    if len(system) != len(gold):
        raise AlignmentError(f"{len(system)} system trees vs {len(gold)} gold trees")
    for k, (s, g) in enumerate(zip(system, gold)):
        if len(s) != len(g):
            raise AlignmentError(f"sentence {k}: {len(s)} system tokens vs {len(g)} gold tokens")
        yield s, g


def _attachment(system, gold, keep=lambda label: True) -> float:
    correct = total = 0
    for s, g in _pairs(system, gold):
        for sh, sl, gh, gl in zip(s.heads, s.labels, g.heads, g.labels):
            gl = universal(gl)
            if not keep(gl):
                continue
            total += 1
            correct += sh == gh and universal(sl) == gl
    return 100.0 * correct / total if total else 0.0


def las(system: Sequence[DepTree], gold: Sequence[DepTree]) -> float:
    """Percentage of tokens with the right head and universal label; punctuation counts."""
    return _attachment(system, gold)


def clas(system: Sequence[DepTree], gold: Sequence[DepTree],
         functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> float:
    """LAS over tokens whose gold relation is not functional (punctuation included)."""
    return _attachment(system, gold, lambda label: label not in functional)


@dataclass(frozen=True)
class RelationScore:
    precision: float
    recall: float
    f1: float
    gold: int
    system: int
    correct: int

    @property
    def precision_undefined(self) -> bool:
        return self.system == 0


def _counts(system, gold):
    gold_n: dict[str, int] = {}
    sys_n: dict[str, int] = {}
    correct: dict[str, int] = {}
    for s, g in _pairs(system, gold):
        for sh, sl, gh, gl in zip(s.heads, s.labels, g.heads, g.labels):
            sl, gl = universal(sl), universal(gl)
            gold_n[gl] = gold_n.get(gl, 0) + 1
            sys_n[sl] = sys_n.get(sl, 0) + 1
            if sh == gh and sl == gl:
                correct[gl] = correct.get(gl, 0) + 1
    return gold_n, sys_n, correct


def _score(c: int, g: int, s: int) -> RelationScore:
    p = c / s if s else 0.0
    r = c / g if g else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return RelationScore(p, r, f, g, s, c)


def per_relation_f1(system: Sequence[DepTree], gold: Sequence[DepTree]) -> dict[str, RelationScore]:
    """Labeled (head + label) precision, recall and F1 for every relation seen in either side.

    A relation the system never predicts gets precision 0 with ``precision_undefined`` set.
    """
    gold_n, sys_n, correct = _counts(system, gold)
    return {rel: _score(correct.get(rel, 0), gold_n.get(rel, 0), sys_n.get(rel, 0))
            for rel in sorted(set(gold_n) | set(sys_n))}


def set_f1(scores: Mapping[str, RelationScore], relations: Iterable[str]) -> float:
    """Labeled F1 pooled over a set of relations."""
    rels = set(relations)
    c = sum(v.correct for k, v in scores.items() if k in rels)
    g = sum(v.gold for k, v in scores.items() if k in rels)
    s = sum(v.system for k, v in scores.items() if k in rels)
    return _score(c, g, s).f1


@dataclass
class EvalReport:
    las: float
    clas: float
    per_relation: dict[str, RelationScore]
    tokens: int
    functional: frozenset[str] = FUNCTIONAL_RELATIONS

    def gold_frequency(self, rel: str) -> float:
        score = self.per_relation.get(rel)
        return score.gold / self.tokens if score and self.tokens else 0.0

    def rows(self) -> list[tuple]:
        out = [("LAS", f"{self.las:.2f}"), ("CLAS", f"{self.clas:.2f}"), ("tokens", str(self.tokens))]
        return out

    def relation_rows(self) -> list[tuple]:
        rows = []
        for rel, sc in self.per_relation.items():
            rows.append((rel, f"{sc.precision:.4f}", f"{sc.recall:.4f}", f"{sc.f1:.4f}", str(sc.gold),
                         str(sc.system), "undefined" if sc.precision_undefined else ""))
        return rows


def evaluate(system: Sequence[DepTree], gold: Sequence[DepTree],
             functional: frozenset[str] = FUNCTIONAL_RELATIONS) -> EvalReport:
    tokens = sum(len(g) for _, g in _pairs(system, gold))
    return EvalReport(las(system, gold), clas(system, gold, functional), per_relation_f1(system, gold),
                      tokens, functional)


@dataclass
class ComparisonReport:
    # (f1_sys - f1_base) * gold relative frequency, per relation
    weighted_f1: dict[str, float]
    # same weighting applied to recall; these sum to (LAS_sys - LAS_base) / 100
    weighted_recall: dict[str, float]
    # pooled labeled F1 differences in percentage points
    all_relations: float
    nucleus_external: float
    nucleus_internal: float
    las_delta: float
    clas_delta: float
    significance: dict[str, "Significance"] = field(default_factory=dict)

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.weighted_f1.items(), key=lambda kv: (-kv[1], kv[0]))


def weighted_deltas(base: EvalReport, sys: EvalReport) -> ComparisonReport:
    gold_base = {k: v.gold for k, v in base.per_relation.items() if v.gold}
    gold_sys = {k: v.gold for k, v in sys.per_relation.items() if v.gold}
    if gold_base != gold_sys or base.tokens != sys.tokens:
        raise AlignmentError("reports were computed against different gold treebanks")
    total = sum(gold_base.values())
    empty = RelationScore(0.0, 0.0, 0.0, 0, 0, 0)
    wf1, wrec = {}, {}
    for rel, count in gold_base.items():
        b, s = base.per_relation.get(rel, empty), sys.per_relation.get(rel, empty)
        wf1[rel] = (s.f1 - b.f1) * count / total
        wrec[rel] = (s.recall - b.recall) * count / total
    rels = set(base.per_relation) | set(sys.per_relation)
    functional = base.functional
    internal = {r for r in rels if r in functional}
    external = rels - internal

    def delta(subset):
        return 100.0 * (set_f1(sys.per_relation, subset) - set_f1(base.per_relation, subset))

    return ComparisonReport(wf1, wrec, delta(rels), delta(external), delta(internal),
                            sys.las - base.las, sys.clas - base.clas)


@dataclass(frozen=True)
class Significance:
    t: float
    p: float
    df: float
    significant: bool


VARIANCE_FLOOR = 1e-12


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t via the regularized incomplete beta function."""
    x = df / (df + t * t)
    tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def significance(base_runs: Sequence[float], sys_runs: Sequence[float], alpha: float = 0.05) -> Significance:
    """Two-tailed Welch t-test on per-seed scores.

    Sample variances are floored at ``VARIANCE_FLOOR`` so zero-variance groups still
    give a finite statistic.
    """
    if len(base_runs) < 2 or len(sys_runs) < 2:
        raise ValueError("need at least two runs per side")
    n1, n2 = len(base_runs), len(sys_runs)
    m1, m2 = math.fsum(base_runs) / n1, math.fsum(sys_runs) / n2
    v1 = max(math.fsum((x - m1) ** 2 for x in base_runs) / (n1 - 1), VARIANCE_FLOOR)
    v2 = max(math.fsum((x - m2) ** 2 for x in sys_runs) / (n2 - 1), VARIANCE_FLOOR)
    a, b = v1 / n1, v2 / n2
    se = math.sqrt(a + b)
    t = (m2 - m1) / se
    df = (a + b) ** 2 / (a * a / (n1 - 1) + b * b / (n2 - 1))
    p = min(1.0, 2.0 * t_sf(abs(t), df))
    return Significance(t, p, df, p < alpha)
