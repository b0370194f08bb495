"""Arc-hybrid transitions with Swap, root at the end of the buffer.

Items are token positions 1..n; the artificial root r is item 0, so an arc from r
maps directly onto head 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .treebank import DepTree

ROOT = 0
ROOT_LABEL = "root"


class IllegalTransition(ValueError):
    pass


class Kind(enum.IntEnum):
    SHIFT = 0
    LEFT_ARC = 1
    RIGHT_ARC = 2
    SWAP = 3

    def __str__(self):
        return {0: "Shift", 1: "LeftArc", 2: "RightArc", 3: "Swap"}[self.value]


class Transition(NamedTuple):
    kind: Kind
    label: Optional[str] = None

    def __str__(self):
        return f"{self.kind}({self.label})" if self.label is not None else str(self.kind)

    @property
    def creates_arc(self) -> bool:
        return self.kind in (Kind.LEFT_ARC, Kind.RIGHT_ARC)


SHIFT = Transition(Kind.SHIFT)
SWAP = Transition(Kind.SWAP)


def left_arc(label: str) -> Transition:
    return Transition(Kind.LEFT_ARC, label)


def right_arc(label: str) -> Transition:
    return Transition(Kind.RIGHT_ARC, label)


def _check_label(t: Transition) -> None:
    if t.creates_arc != (t.label is not None):
        raise IllegalTransition(f"{t}: label must be given exactly for arc transitions")


@dataclass(frozen=True)
class Configuration:
    stack: tuple[int, ...]  # top is stack[-1]
    buffer: tuple[int, ...]  # front is buffer[0]; ROOT always last
    arcs: tuple[tuple[int, int, str], ...] = ()  # (head, dependent, label) in creation order

    @property
    def s0(self) -> Optional[int]:
        return self.stack[-1] if self.stack else None

    @property
    def s1(self) -> Optional[int]:
        return self.stack[-2] if len(self.stack) > 1 else None

    @property
    def b0(self) -> Optional[int]:
        return self.buffer[0] if self.buffer else None

    def heads(self, n: int) -> list[Optional[int]]:
        out: list[Optional[int]] = [None] * n
        for h, d, _ in self.arcs:
            out[d - 1] = h
        return out

    def tree(self, n: int) -> DepTree:
        heads: list[int] = [-1] * n
        labels = ["_"] * n
        for h, d, l in self.arcs:
            heads[d - 1] = h
            labels[d - 1] = l
        return DepTree(tuple(heads), tuple(labels))


def initial_config(n: int) -> Configuration:
    if n < 1:
        raise ValueError("cannot parse an empty sentence")
    return Configuration((), tuple(range(1, n + 1)) + (ROOT,))


def legal(config: Configuration, t: Transition) -> bool:
    """Whether ``t`` may be applied.

    Swap needs s0 and b0 (not r) still in their original relative order, so every pair
    is swapped at most once; this bounds any derivation by n + n*n steps. Arcs from r
    carry the root label and are only possible when the stack holds a single item,
    which keeps every terminal configuration single-rooted.
    """
    stack, buffer = config.stack, config.buffer
    kind = t.kind
    if kind == Kind.SHIFT:
        return bool(buffer) and buffer[0] != ROOT
    if kind == Kind.SWAP:
        return bool(stack) and len(buffer) >= 2 and stack[-1] < buffer[0]
    if t.label is None:
        return False
    if kind == Kind.LEFT_ARC:
        if not stack or not buffer:
            return False
        if buffer[0] == ROOT:
            return len(stack) == 1 and t.label == ROOT_LABEL
        return t.label != ROOT_LABEL
    if kind == Kind.RIGHT_ARC:
        return len(stack) >= 2 and t.label != ROOT_LABEL
    return False


def apply(config: Configuration, t: Transition) -> Configuration:
    _check_label(t)
    if not legal(config, t):
        raise IllegalTransition(f"{t} is not legal in stack={config.stack} buffer={config.buffer}")
    stack, buffer, arcs = config.stack, config.buffer, config.arcs
    if t.kind == Kind.SHIFT:
        return Configuration(stack + (buffer[0],), buffer[1:], arcs)
    if t.kind == Kind.LEFT_ARC:
        return Configuration(stack[:-1], buffer, arcs + ((buffer[0], stack[-1], t.label),))
    if t.kind == Kind.RIGHT_ARC:
        return Configuration(stack[:-1], buffer, arcs + ((stack[-2], stack[-1], t.label),))
    # Swap: s0 goes back into the buffer, behind b0
    return Configuration(stack[:-1], (buffer[0], stack[-1]) + buffer[1:], arcs)


def is_terminal(config: Configuration) -> bool:
    return not config.stack and config.buffer == (ROOT,)


def max_steps(n: int) -> int:
    return 4 * n * n


def projective_order(tree: DepTree) -> list[int]:
    """``order[i]`` is item i's rank in the in-order traversal from r (r ranks last)."""
    kids = tree.children
    order = [0] * (len(tree) + 1)
    rank = 0
    # iterative in-order walk: left dependents, node, right dependents
    stack: list[tuple[int, bool]] = [(ROOT, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order[node] = rank
            rank += 1
            continue
        left = [c for c in kids[node] if node == ROOT or c < node]
        right = [c for c in kids[node] if node != ROOT and c > node]
        for c in reversed(right):
            stack.append((c, False))
        stack.append((node, True))
        for c in reversed(left):
            stack.append((c, False))
    return order


def static_oracle(tree: DepTree) -> list[Transition]:
    """A transition sequence that derives ``tree`` exactly.

    Reduce as soon as the top item is complete, swap eagerly whenever s0 comes after
    b0 in projective order, otherwise shift.
    """
    n = len(tree)
    heads = (ROOT,) + tree.heads  # 1-based lookup; heads[0] unused
    labels = (ROOT_LABEL,) + tree.labels
    need = [len(k) for k in tree.children]
    order = projective_order(tree)
    config = initial_config(n)
    out: list[Transition] = []
    limit = max_steps(n) + 2
    while not is_terminal(config):
        stack, buffer = config.stack, config.buffer
        s0 = stack[-1] if stack else None
        s1 = stack[-2] if len(stack) > 1 else None
        if s0 is not None and need[s0] == 0 and heads[s0] == buffer[0]:
            t = left_arc(labels[s0])
        elif s1 is not None and need[s0] == 0 and heads[s0] == s1:
            t = right_arc(labels[s0])
        elif s0 is not None and buffer[0] != ROOT and order[s0] > order[buffer[0]]:
            t = SWAP
        else:
            t = SHIFT
        config = apply(config, t)
        if t.creates_arc:
            need[config.arcs[-1][0]] -= 1
        out.append(t)
        if len(out) > limit:
            raise RuntimeError("static oracle failed to terminate")
    return out


def replay(n: int, transitions: Iterable[Transition]) -> Configuration:
    config = initial_config(n)
    for t in transitions:
        config = apply(config, t)
    return config


def _item(i: int) -> str:
    return "r" if i == ROOT else str(i)


def format_trace(n: int, transitions: Sequence[Transition]) -> list[str]:
    """One tab-separated line per step: step, kind, label, stack after, buffer after."""
    lines = []
    config = initial_config(n)
    for step, t in enumerate(transitions, start=1):
        config = apply(config, t)
        lines.append("\t".join((str(step), str(t.kind), t.label or "_",
                                " ".join(map(_item, config.stack)) or "_",
                                " ".join(map(_item, config.buffer)) or "_")))
    return lines
