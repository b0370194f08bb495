"""Composition functions that rewrite a head's vector when an arc is built.

``hard``: h ∘ d on functional arcs, h otherwise.
``soft``: h ∘ g(h, d, l) on functional arcs, h otherwise, with the gate
g = sigmoid(W [h; d; l] + b).
``generalized``: h ∘ g(h, d, l) on every arc.

The operator ∘ is vector addition or the zero-padded concatenation scheme, where
vectors carry a live first half and a zero second half.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import torch
from torch import nn

from .nucleus import FUNCTIONAL_RELATIONS
from .substrate import DTYPE
from .treebank import universal

MODES = ("none", "hard", "soft", "generalized")
OPERATORS = ("add", "concat")
UNK_RELATION = "<unk>"


@dataclass(frozen=True)
class CompositionConfig:
    mode: str = "none"
    operator: str = "add"
    relation_embedding_size: int = 10
    functional_set: frozenset[str] = FUNCTIONAL_RELATIONS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown composition mode {self.mode!r}")
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown composition operator {self.operator!r}")
        if self.relation_embedding_size < 1:
            raise ValueError("relation_embedding_size must be >= 1")

    @property
    def gated(self) -> bool:
        return self.mode in ("soft", "generalized")


def _same_dim(h: torch.Tensor, d: torch.Tensor) -> None:
    if h.shape != d.shape:
        raise ValueError(f"head and dependent differ in shape: {tuple(h.shape)} vs {tuple(d.shape)}")


def compose_add(h: torch.Tensor, d: torch.Tensor) -> torch.Tensor:
    _same_dim(h, d)
    return h + d


def compose_concat(h: torch.Tensor, d: torch.Tensor) -> torch.Tensor:
    """[d_live; h_live]: the second operand's zero half is filled with the first's live half."""
    _same_dim(h, d)
    if h.shape[-1] % 2:
        raise ValueError("concat composition needs an even dimension")
    half = h.shape[-1] // 2
    if torch.any(d[..., half:] != 0):
        raise ValueError("second operand of concat composition has a non-zero padding half")
    return torch.cat([d[..., :half], h[..., :half]], dim=-1)


def live(v: torch.Tensor) -> torch.Tensor:
    """Keep the live half of a padded vector and zero the rest."""
    half = v.shape[-1] // 2
    return torch.cat([v[..., :half], torch.zeros_like(v[..., half:])], dim=-1)


def combine(h: torch.Tensor, d: torch.Tensor, operator: str = "add") -> torch.Tensor:
    if operator == "add":
        return compose_add(h, d)
    if operator == "concat":
        return compose_concat(h, live(d))
    raise ValueError(f"unknown composition operator {operator!r}")


class GateNetwork(nn.Module):
    """sigmoid(W [h; d; l] + b) with a trained relation embedding l.

    ``token_dim`` is the size of h and d; the output has ``out_dim`` coordinates
    (token_dim under addition, the live half under concatenation).
    """

    def __init__(self, token_dim: int, relations: Sequence[str], relation_dim: int = 10,
                 out_dim: Optional[int] = None):
        super().__init__()
        self.token_dim = token_dim
        self.out_dim = out_dim or token_dim
        self.relations = [UNK_RELATION] + [r for r in relations if r != UNK_RELATION]
        self.rel_index = {r: i for i, r in enumerate(self.relations)}
        self.relation_embedding = nn.Embedding(len(self.relations), relation_dim, dtype=DTYPE)
        self.linear = nn.Linear(2 * token_dim + relation_dim, self.out_dim, dtype=DTYPE)

    def relation_vector(self, label: str) -> torch.Tensor:
        idx = self.rel_index.get(universal(label), 0)
        return self.relation_embedding.weight[idx]

    def forward(self, h: torch.Tensor, d: torch.Tensor, label: str) -> torch.Tensor:
        _same_dim(h, d)
        if h.shape[-1] != self.token_dim:
            raise ValueError(f"gate expects vectors of size {self.token_dim}, got {h.shape[-1]}")
        x = torch.cat([h, d, self.relation_vector(label)], dim=-1)
        return torch.sigmoid(self.linear(x))


def _gate_operand(g: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
    # under concatenation the gate fills only the live half
    if g.shape[-1] == h.shape[-1]:
        return g
    return torch.cat([g, torch.zeros_like(h[..., g.shape[-1]:])], dim=-1)


def compose_hard(h: torch.Tensor, d: torch.Tensor, label: str,
                 functional: frozenset[str] = FUNCTIONAL_RELATIONS, operator: str = "add") -> torch.Tensor:
    _same_dim(h, d)
    if universal(label) in functional:
        return combine(h, d, operator)
    return h


def compose_generalized(h: torch.Tensor, d: torch.Tensor, label: str, gate: GateNetwork,
                        operator: str = "add") -> torch.Tensor:
    return combine(h, _gate_operand(gate(h, d, label), h), operator)


def compose_soft(h: torch.Tensor, d: torch.Tensor, label: str, gate: GateNetwork,
                 functional: frozenset[str] = FUNCTIONAL_RELATIONS, operator: str = "add") -> torch.Tensor:
    _same_dim(h, d)
    if universal(label) in functional:
        return compose_generalized(h, d, label, gate, operator)
    return h


class Composer:
    """Dispatch on a :class:`CompositionConfig`; ``gate`` is required for soft/generalized."""

    def __init__(self, config: CompositionConfig, gate: Optional[GateNetwork] = None):
        if config.gated and gate is None:
            raise ValueError(f"mode {config.mode!r} needs a gate network")
        self.config = config
        self.gate = gate

    def __call__(self, h: torch.Tensor, d: torch.Tensor, label: str) -> torch.Tensor:
        cfg = self.config
        if cfg.mode == "none":
            return h
        if cfg.mode == "hard":
            return compose_hard(h, d, label, cfg.functional_set, cfg.operator)
        if cfg.mode == "soft":
            return compose_soft(h, d, label, self.gate, cfg.functional_set, cfg.operator)
        return compose_generalized(h, d, label, self.gate, cfg.operator)
