import random

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_tree, sentence_from_tree
from nucparse.composition import CompositionConfig
from nucparse.nucleus import oracle_transform
from nucparse.parser import (ActionSet, ModelConfig, ParserModel, TrainConfig, Vocabulary, build_model,
                             derivation_loss, encode_sentence, load_model, parse, parse_treebank, save_model,
                             score_transitions, sentence_loss, train)
from nucparse.substrate import grad_check
from nucparse.transitions import ROOT_LABEL, SHIFT, Configuration, initial_config, static_oracle
from nucparse.treebank import DepTree, validate_tree

MODES = ["none", "hard", "soft", "generalized"]


def tiny(mode="none", operator="add", oracle=False, **kw) -> ModelConfig:
    return ModelConfig(word_dim=8, char_dim=4, char_hidden=4, token_hidden=8, token_layers=2, mlp_hidden=16,
                       composition=CompositionConfig(mode, operator, 3), oracle=oracle, **kw)


@pytest.fixture(scope="module")
def small_bank(mini_train):
    return mini_train[:20]


def test_default_dimension_chain(fig1):
    model = build_model([fig1], ModelConfig())
    v = encode_sentence(model, fig1)
    assert v.shape == (9, 512)
    assert model.token_bilstm.input_size == 200
    assert model.mlp.input_size == 3 * 512
    gated = build_model([fig1], ModelConfig(composition=CompositionConfig("soft")))
    assert gated.gate.linear.weight.shape == (512, 2 * 512 + 10)


def test_concat_layout_doubles_slots(fig1):
    model = build_model([fig1], tiny("soft", "concat"))
    v = encode_sentence(model, fig1)
    assert v.shape == (9, 32)
    assert torch.equal(v[:, 16:], torch.zeros(9, 16, dtype=v.dtype))
    assert model.mlp.input_size == 3 * 32


def test_encoding_is_deterministic(fig3):
    model = build_model([fig3], tiny())
    assert torch.equal(encode_sentence(model, fig3), encode_sentence(model, fig3))


def test_oov_words_differ_only_through_characters(fig1):
    model = build_model([fig1], tiny())
    a = model.encode(["zz"])
    b = model.encode(["qqqq"])
    assert model.vocab.word_id("zz") == model.vocab.word_id("qqqq") == 0
    assert not torch.equal(a, b)
    with torch.no_grad():
        for p in model.char_lstm.parameters():
            p.zero_()
    assert torch.equal(model.encode(["zz"]), model.encode(["qqqq"]))


def test_vocabulary_has_unk_everywhere(mini_train):
    vocab = Vocabulary.build([s.forms for s in mini_train], [l for s in mini_train for l in s.tree.labels])
    assert vocab.words[0] == vocab.chars[0] == "<unk>"
    assert vocab.word_index == {w: i for i, w in enumerate(vocab.words)}
    assert vocab.word_id("never-seen-word") == 0
    assert vocab.char_ids("☃") == [0]
    assert ROOT_LABEL in vocab.labels


def test_action_count_matches_label_set(mini_train):
    labels = sorted({l for s in mini_train for l in s.tree.labels})
    actions = ActionSet(labels)
    # Shift, Swap, one LeftArc(root), and Left/Right arcs for every other label
    assert len(actions) == 2 + 1 + 2 * (len(labels) - 1)
    assert len(set(actions.transitions)) == len(actions)


def test_initial_scores_allow_only_shift(fig1):
    model = build_model([fig1], tiny())
    scores = score_transitions(model, initial_config(8), list(model.encode(fig1.forms)))
    finite = [t for t, s in zip(model.actions.transitions, scores.tolist()) if s != float("-inf")]
    assert finite == [SHIFT]
    with pytest.raises(ValueError):
        score_transitions(model, Configuration((), (0,)), [])


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("operator", ["add", "concat"])
def test_untrained_models_produce_valid_trees(mode, operator, small_bank):
    model = build_model(small_bank, tiny(mode, operator), seed=1)
    for sent in small_bank:
        trace = []
        tree = parse(model, sent, trace)
        assert validate_tree(tree) == []
        assert tree.labels.count(ROOT_LABEL) == 1
        assert len(trace) <= 4 * len(sent) ** 2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.integers(0, 10_000), st.sampled_from(MODES))
def test_parse_output_always_valid(n, seed, mode):
    rng = random.Random(seed)
    torch.manual_seed(seed)
    vocab = Vocabulary(["<unk>", "a"], [0, 3], ["<unk>", "a"], ["root", "det", "nsubj", "obj"])
    model = ParserModel(vocab, tiny(mode))
    with torch.no_grad():
        for p in model.parameters():
            p.normal_(0, 2)
    sent = sentence_from_tree(random_tree(rng, n), ["a" * rng.randint(1, 3) for _ in range(n)])
    assert validate_tree(parse(model, sent)) == []


def test_oracle_model_reads_transformed_forms(fig1):
    model = build_model([fig1], tiny(oracle=True))
    assert "dog-the" in model.vocab.word_index and "room-the-from" in model.vocab.word_index
    assert torch.equal(encode_sentence(model, fig1), model.encode(oracle_transform(fig1).forms))
    assert validate_tree(parse(model, fig1)) == []


def _slots_after(model, sent):
    out = []
    derivation_loss(model, sent.forms, static_oracle(sent.tree), on_slots=out.extend)
    return out


@pytest.mark.parametrize("mode", ["hard", "soft"])
def test_composition_only_touches_functional_heads(mode, fig3):
    base = build_model([fig3], tiny("none"), seed=3)
    other = build_model([fig3], tiny(mode), seed=3)
    other.load_state_dict(base.state_dict(), strict=False)
    plain = _slots_after(base, fig3)
    composed = _slots_after(other, fig3)
    tree = fig3.tree
    touched = {tree.head(i) for i in range(1, len(tree) + 1) if tree.label(i) in other.config.composition.functional_set}
    for item, (a, b) in enumerate(zip(plain, composed)):
        if item in touched:
            assert not torch.equal(a, b)
        else:
            assert torch.equal(a, b)


def test_generalized_touches_every_head(fig3):
    base = build_model([fig3], tiny("none"), seed=3)
    gen = build_model([fig3], tiny("generalized"), seed=3)
    gen.load_state_dict(base.state_dict(), strict=False)
    plain, composed = _slots_after(base, fig3), _slots_after(gen, fig3)
    heads = set(fig3.tree.heads)  # r heads the root arc, so its slot is composed too
    assert {i for i, (a, b) in enumerate(zip(plain, composed)) if not torch.equal(a, b)} == heads


def test_none_and_hard_identical_without_functional_relations(mini_train):
    bank = []
    for sent in mini_train:
        if not any(l in ("det", "case", "clf", "aux", "cop", "mark", "cc") for l in sent.tree.labels):
            bank.append(sent)
        if len(bank) == 8:
            break
    assert len(bank) == 8
    cfg = TrainConfig(epochs=2, seed=5)
    a = build_model(bank, tiny("none"), seed=5)
    b = build_model(bank, tiny("hard"), seed=5)
    la, lb = train(a, bank, cfg), train(b, bank, cfg)
    assert [e.loss for e in la] == [e.loss for e in lb]
    sa, sb = a.state_dict(), b.state_dict()
    assert sa.keys() == sb.keys() and all(torch.equal(sa[k], sb[k]) for k in sa)


def test_single_sentence_loss_decreases(fig1):
    model = build_model([fig1], tiny(), seed=0)
    log = train(model, [fig1], TrainConfig(epochs=5, seed=0))
    assert log[4].loss < log[0].loss


def test_mini_treebank_loss_non_increasing(mini_train):
    cfg = ModelConfig(word_dim=32, char_dim=8, char_hidden=16, token_hidden=32, token_layers=2, mlp_hidden=64)
    model = build_model(mini_train, cfg, seed=0)
    losses = [e.loss for e in train(model, mini_train, TrainConfig(epochs=5, seed=0))]
    assert all(b <= a * 1.05 for a, b in zip(losses, losses[1:])), losses
    assert losses[-1] < losses[0]


@pytest.mark.parametrize("mode", MODES)
def test_every_mode_trains_and_parses(mode, small_bank):
    model = build_model(small_bank, tiny(mode), seed=2)
    log = train(model, small_bank, TrainConfig(epochs=2, seed=2), dev=small_bank[:5])
    assert len(log) == 2 and log[-1].dev_las is not None
    assert all(validate_tree(t) == [] for t in parse_treebank(model, small_bank[:5]))


def test_training_is_seed_deterministic(small_bank, tmp_path):
    digests = []
    for _ in range(2):
        model = build_model(small_bank[:6], tiny("soft"), seed=9)
        train(model, small_bank[:6], TrainConfig(epochs=2, seed=9))
        digests.append(save_model(model, tmp_path / "m.ckpt"))
    assert digests[0] == digests[1]
    model = build_model(small_bank[:6], tiny("soft"), seed=10)
    train(model, small_bank[:6], TrainConfig(epochs=2, seed=10))
    assert save_model(model, tmp_path / "m.ckpt") != digests[0]


def test_checkpoint_round_trip_preserves_parses(small_bank, tmp_path):
    model = build_model(small_bank, tiny("generalized", oracle=True), seed=4)
    save_model(model, tmp_path / "m.ckpt")
    loaded = load_model(tmp_path / "m.ckpt")
    assert loaded.config == model.config
    for sent in small_bank[:5]:
        assert parse(loaded, sent) == parse(model, sent)


def test_skips_sentences_with_unknown_labels(fig1, caplog):
    model = build_model([fig1], tiny())
    odd = sentence_from_tree(DepTree([0, 1], ["root", "vocative"]))
    train(model, [fig1, odd], TrainConfig(epochs=1))
    assert "unknown labels" in caplog.text


def test_train_rejects_empty_treebank(fig1):
    with pytest.raises(ValueError):
        train(build_model([fig1], tiny()), [], TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


@pytest.mark.parametrize("mode", MODES)
def test_three_word_loss_gradients(mode):
    tree = DepTree([2, 0, 2], ["det", "root", "obj"])
    sent = sentence_from_tree(tree, ["the", "cat", "sat"])
    model = build_model([sent], ModelConfig(word_dim=3, char_dim=2, char_hidden=2, token_hidden=2, token_layers=2,
                                            mlp_hidden=4, composition=CompositionConfig(mode, "add", 2)), seed=1)
    params = [p for p in model.parameters()]
    assert grad_check(lambda: sentence_loss(model, sent), params) < 1e-3


def test_gold_free_sentences_parse(fig1):
    from dataclasses import replace
    model = build_model([fig1], tiny())
    bare = replace(fig1, tokens=tuple(replace(t, head=None, deprel="_") for t in fig1.tokens))
    assert validate_tree(parse(model, bare)) == []
    oracle = build_model([fig1], tiny(oracle=True))
    with pytest.raises(ValueError):
        parse(oracle, bare)
