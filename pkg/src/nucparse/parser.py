"""Greedy BiLSTM transition parser with nucleus composition hooks."""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from . import __version__
from .composition import CompositionConfig, Composer, GateNetwork
from .nucleus import FUNCTIONAL_RELATIONS, oracle_forms
from .substrate import (DTYPE, BiLstm, Mlp, adam, cross_entropy, load_checkpoint,
                        save_checkpoint, xavier_)
from .transitions import (ROOT, ROOT_LABEL, SHIFT, SWAP, Configuration, Kind, Transition,
                          apply, initial_config, is_terminal, left_arc, max_steps, right_arc,
                          static_oracle)
from .treebank import DepTree, Sentence

logger = logging.getLogger(__name__)

UNK = "<unk>"


@dataclass(frozen=True)
class ModelConfig:
    word_dim: int = 100
    char_dim: int = 32
    char_hidden: int = 50  # per direction, so the character vector has 100 dims
    token_hidden: int = 256  # per direction, so token vectors have 512 dims
    token_layers: int = 2
    mlp_hidden: int = 256
    composition: CompositionConfig = field(default_factory=CompositionConfig)
    oracle: bool = False  # train and parse on nucleus-concatenated forms

    @property
    def token_dim(self) -> int:
        return 2 * self.token_hidden

    @property
    def slot_dim(self) -> int:
        # concatenation doubles the vector and pads the new half with zeros
        return 2 * self.token_dim if self.composition.operator == "concat" else self.token_dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["composition"]["functional_set"] = sorted(self.composition.functional_set)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        comp = dict(d.pop("composition"))
        comp["functional_set"] = frozenset(comp["functional_set"])
        return cls(composition=CompositionConfig(**comp), **d)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    seeds: int = 10
    seed: int = 0
    learning_rate: float = 1e-3
    unk_alpha: float = 0.25

    def __post_init__(self):
        if self.epochs < 1 or self.seeds < 1:
            raise ValueError("epochs and seeds must be >= 1")


@dataclass
class Vocabulary:
    words: list[str]
    word_freq: list[int]
    chars: list[str]
    labels: list[str]

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.char_index = {c: i for i, c in enumerate(self.chars)}

    @classmethod
    def build(cls, forms: Sequence[Sequence[str]], labels: Sequence[str]) -> "Vocabulary":
        freq = Counter(w for sent in forms for w in sent)
        chars = Counter(c for sent in forms for w in sent for c in w)
        words = [UNK] + sorted(freq)
        rels = sorted(set(labels) | {ROOT_LABEL})
        return cls(words, [0] + [freq[w] for w in words[1:]], [UNK] + sorted(chars), rels)

    def word_id(self, w: str) -> int:
        return self.word_index.get(w, 0)

    def char_ids(self, w: str) -> list[int]:
        return [self.char_index.get(c, 0) for c in w] or [0]

    def to_dict(self) -> dict:
        return {"words": self.words, "word_freq": self.word_freq, "chars": self.chars, "labels": self.labels}


class ActionSet:
    """Shift, Swap, LeftArc(root), then LeftArc and RightArc for every non-root label."""

    def __init__(self, labels: Sequence[str]):
        self.labels = [l for l in labels if l != ROOT_LABEL]
        k = len(self.labels)
        self.transitions: list[Transition] = ([SHIFT, SWAP, left_arc(ROOT_LABEL)]
                                              + [left_arc(l) for l in self.labels]
                                              + [right_arc(l) for l in self.labels])
        self.index = {t: i for i, t in enumerate(self.transitions)}
        self._left = slice(3, 3 + k)
        self._right = slice(3 + k, 3 + 2 * k)

    def __len__(self):
        return len(self.transitions)

    def legal_mask(self, config: Configuration) -> torch.Tensor:
        stack, buffer = config.stack, config.buffer
        mask = torch.zeros(len(self.transitions), dtype=torch.bool)
        b0 = buffer[0] if buffer else None
        mask[0] = b0 is not None and b0 != ROOT
        mask[1] = bool(stack) and len(buffer) >= 2 and stack[-1] < b0
        if stack and b0 is not None:
            if b0 == ROOT:
                mask[2] = len(stack) == 1
            else:
                mask[self._left] = True
        if len(stack) >= 2:
            mask[self._right] = True
        return mask


class ParserModel(nn.Module):
    def __init__(self, vocab: Vocabulary, config: ModelConfig = ModelConfig()):
        super().__init__()
        self.vocab = vocab
        self.config = config
        self.actions = ActionSet(vocab.labels)
        c = config
        self.word_embedding = nn.Embedding(len(vocab.words), c.word_dim, dtype=DTYPE)
        self.char_embedding = nn.Embedding(len(vocab.chars), c.char_dim, dtype=DTYPE)
        self.char_lstm = nn.LSTM(c.char_dim, c.char_hidden, bidirectional=True, batch_first=True, dtype=DTYPE)
        self.token_bilstm = BiLstm(c.word_dim + 2 * c.char_hidden, c.token_hidden, c.token_layers)
        self.mlp = Mlp(3 * c.slot_dim, c.mlp_hidden, len(self.actions))
        self.padding = nn.Parameter(torch.zeros(3, c.slot_dim, dtype=DTYPE))  # missing s1, s0, b0
        self.root_vector = nn.Parameter(torch.zeros(c.token_dim, dtype=DTYPE))
        comp = c.composition
        self.gate = None
        if comp.gated:
            out = c.token_dim
            self.gate = GateNetwork(c.slot_dim, vocab.labels, comp.relation_embedding_size, out_dim=out)
        self.composer = Composer(comp, self.gate)
        xavier_(self)
        nn.init.uniform_(self.padding, -0.1, 0.1)
        nn.init.uniform_(self.root_vector, -0.1, 0.1)

    def char_vectors(self, forms: Sequence[str]) -> torch.Tensor:
        ids = [self.vocab.char_ids(w) for w in forms]
        lengths = torch.tensor([len(x) for x in ids])
        padded = torch.zeros(len(ids), int(lengths.max()), dtype=torch.long)
        for i, x in enumerate(ids):
            padded[i, :len(x)] = torch.tensor(x)
        packed = pack_padded_sequence(self.char_embedding(padded), lengths, batch_first=True,
                                      enforce_sorted=False)
        _, (h, _) = self.char_lstm(packed)
        return torch.cat([h[0], h[1]], dim=-1)

    def encode(self, forms: Sequence[str], word_ids: Optional[Sequence[int]] = None) -> torch.Tensor:
        """Rows 0..n: the root vector, then one contextual vector per token."""
        if not forms:
            raise ValueError("empty sentence")
        if word_ids is None:
            word_ids = [self.vocab.word_id(w) for w in forms]
        words = self.word_embedding(torch.tensor(list(word_ids)))
        x = torch.cat([words, self.char_vectors(forms)], dim=-1)
        v = torch.cat([self.root_vector.unsqueeze(0), self.token_bilstm(x)], dim=0)
        if self.config.slot_dim != self.config.token_dim:
            v = torch.cat([v, torch.zeros_like(v)], dim=-1)
        return v

    def features(self, config: Configuration, slots: Sequence[torch.Tensor]) -> torch.Tensor:
        stack, buffer = config.stack, config.buffer
        s1 = slots[stack[-2]] if len(stack) > 1 else self.padding[0]
        s0 = slots[stack[-1]] if stack else self.padding[1]
        b0 = slots[buffer[0]] if buffer else self.padding[2]
        return torch.cat([s1, s0, b0])

    def compose_arc(self, slots: list[torch.Tensor], config: Configuration, t: Transition) -> None:
        """Overwrite the head's slot when ``t`` builds an arc."""
        if not t.creates_arc or self.config.composition.mode == "none":
            return
        stack, buffer = config.stack, config.buffer
        dep = stack[-1]
        head = buffer[0] if t.kind == Kind.LEFT_ARC else stack[-2]
        slots[head] = self.composer(slots[head], slots[dep], t.label)


def config_forms(config: ModelConfig, sentence: Sentence) -> list[str]:
    """Input forms; an oracle-mode model reads nucleus-concatenated forms built from the gold tree."""
    if config.oracle:
        if not sentence.has_tree:
            raise ValueError("an oracle-mode model needs gold trees to mark nuclei in the input")
        return oracle_forms(sentence, config.composition.functional_set)
    return sentence.forms


def model_forms(model: ParserModel, sentence: Sentence) -> list[str]:
    return config_forms(model.config, sentence)


def encode_sentence(model: ParserModel, sentence: Sentence) -> torch.Tensor:
    """Contextual vectors for r and tokens 1..n (row i is item i)."""
    return model.encode(model_forms(model, sentence))


def score_transitions(model: ParserModel, config: Configuration,
                      slots: Sequence[torch.Tensor]) -> torch.Tensor:
    """Raw action scores with illegal actions set to -inf."""
    if is_terminal(config):
        raise ValueError("no transitions from a terminal configuration")
    scores = model.mlp(model.features(config, slots))
    return scores.masked_fill(~model.actions.legal_mask(config), float("-inf"))


def derivation_loss(model: ParserModel, forms: Sequence[str], transitions: Sequence[Transition],
                    word_ids: Optional[Sequence[int]] = None,
                    on_slots: Optional[Callable[[list[torch.Tensor]], None]] = None) -> torch.Tensor:
    """Summed cross-entropy of the gold actions along a teacher-forced derivation."""
    slots = list(model.encode(forms, word_ids).unbind(0))
    config = initial_config(len(forms))
    feats, masks, gold = [], [], []
    for t in transitions:
        feats.append(model.features(config, slots))
        masks.append(model.actions.legal_mask(config))
        gold.append(model.actions.index[t])
        model.compose_arc(slots, config, t)
        config = apply(config, t)
    if on_slots is not None:
        on_slots(slots)
    logits = model.mlp(torch.stack(feats)).masked_fill(~torch.stack(masks), float("-inf"))
    return cross_entropy(logits, torch.tensor(gold))


def sentence_loss(model: ParserModel, sentence: Sentence) -> torch.Tensor:
    return derivation_loss(model, model_forms(model, sentence), static_oracle(sentence.tree))


@torch.no_grad()
def parse(model: ParserModel, sentence: Sentence, trace: Optional[list[Transition]] = None) -> DepTree:
    """Greedy decoding: apply the best-scoring legal action until terminal."""
    forms = model_forms(model, sentence)
    n = len(forms)
    slots = list(model.encode(forms).unbind(0))
    config = initial_config(n)
    steps = 0
    while not is_terminal(config):
        scores = score_transitions(model, config, slots)
        t = model.actions.transitions[int(torch.argmax(scores))]
        model.compose_arc(slots, config, t)
        config = apply(config, t)
        if trace is not None:
            trace.append(t)
        steps += 1
        if steps > max_steps(n):
            raise RuntimeError(f"derivation exceeded {max_steps(n)} steps")
    return config.tree(n)


def parse_treebank(model: ParserModel, sentences: Sequence[Sentence]) -> list[DepTree]:
    model.eval()
    return [parse(model, s) for s in sentences]


@dataclass
class EpochLog:
    epoch: int
    loss: float  # mean cross-entropy per transition
    dev_las: Optional[float] = None
    dev_clas: Optional[float] = None


def build_model(treebank: Sequence[Sentence], config: ModelConfig = ModelConfig(), seed: int = 0) -> ParserModel:
    forms = [config_forms(config, s) for s in treebank]
    labels = [l for s in treebank for l in s.tree.labels]
    torch.manual_seed(seed)
    return ParserModel(Vocabulary.build(forms, labels), config)


def _prepare(model: ParserModel, treebank: Sequence[Sentence]):
    known = set(model.vocab.labels)
    out = []
    for s in treebank:
        tree = s.tree
        missing = set(tree.labels) - known
        if missing:
            logger.warning("skipping sentence with unknown labels %s", sorted(missing))
            continue
        try:
            transitions = static_oracle(tree)
        except Exception as err:  # pragma: no cover - every valid tree is derivable
            logger.warning("skipping sentence: %s", err)
            continue
        out.append((model_forms(model, s), transitions))
    return out


def train(model: ParserModel, treebank: Sequence[Sentence], cfg: TrainConfig = TrainConfig(),
          dev: Optional[Sequence[Sentence]] = None,
          functional: frozenset[str] = FUNCTIONAL_RELATIONS,
          on_epoch: Optional[Callable[[EpochLog], None]] = None) -> list[EpochLog]:
    """Per-sentence Adam updates on the static-oracle derivations, ``cfg.epochs`` times."""
    from .evaluation import clas, las

    if not treebank:
        raise ValueError("empty training treebank")
    rng = random.Random(cfg.seed)
    data = _prepare(model, treebank)
    vocab = model.vocab
    optimizer = adam(model.parameters(), cfg.learning_rate)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = list(range(len(data)))
        rng.shuffle(order)
        total, steps = 0.0, 0
        for i in order:
            forms, transitions = data[i]
            ids = []
            for w in forms:
                wid = vocab.word_id(w)
                freq = vocab.word_freq[wid]
                if wid and rng.random() < cfg.unk_alpha / (cfg.unk_alpha + freq):
                    wid = 0
                ids.append(wid)
            loss = derivation_loss(model, forms, transitions, ids)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item()
            steps += len(transitions)
        log = EpochLog(epoch, total / max(steps, 1))
        if dev:
            gold = [s.tree for s in dev]
            predicted = parse_treebank(model, dev)
            log.dev_las = las(predicted, gold)
            log.dev_clas = clas(predicted, gold, functional)
        logger.info("epoch %d loss %.4f dev LAS %s", epoch, log.loss, log.dev_las)
        history.append(log)
        if on_epoch is not None:
            on_epoch(log)
    model.eval()
    return history


def save_model(model: ParserModel, path, extra: Optional[dict] = None) -> str:
    meta = {"version": __version__, "config": model.config.to_dict(), "vocab": model.vocab.to_dict()}
    if extra:
        meta["extra"] = extra
    return save_checkpoint(path, dict(model.state_dict()), meta)


def load_model(path) -> ParserModel:
    tensors, meta = load_checkpoint(path)
    config = ModelConfig.from_dict(meta["config"])
    vocab = Vocabulary(**meta["vocab"])
    model = ParserModel(vocab, config)
    model.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
    model.eval()
    return model
