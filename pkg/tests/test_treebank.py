import io
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIGURES, MINI, trees
from nucparse.treebank import (ConllError, DepTree, Sentence, Token, format_sentence, load, read_conllu,
                               universal, validate_tree, write_conllu)


def roundtrip(sents):
    buf = io.StringIO()
    write_conllu(sents, buf)
    return read_conllu(io.StringIO(buf.getvalue()))


def test_fig1_reads_expected_tree(fig1):
    assert len(fig1) == 8
    assert list(fig1.tree.heads) == [2, 3, 0, 5, 3, 8, 8, 3]
    assert list(fig1.tree.labels) == ["det", "nsubj", "root", "det", "obj", "case", "det", "obl"]
    assert fig1.forms == "the dog chased the cat from the room".split()


def test_empty_stream_and_empty_list():
    assert read_conllu(io.StringIO("")) == []
    buf = io.StringIO()
    write_conllu([], buf)
    assert buf.getvalue() == ""


def test_fig1_written_lines_reproduce_head_and_deprel(fig1):
    lines = [l for l in format_sentence(fig1).splitlines() if l and not l.startswith("#")]
    assert all(len(l.split("\t")) == 10 for l in lines)
    assert [int(l.split("\t")[6]) for l in lines] == list(fig1.tree.heads)
    assert [l.split("\t")[7] for l in lines] == list(fig1.tree.labels)


@pytest.mark.parametrize("path", [FIGURES / "fig1.conllu", FIGURES / "fig3.conllu", MINI / "dev.conllu"])
def test_file_round_trip_is_idempotent(path):
    once = load(path)
    assert roundtrip(once) == once
    assert all(validate_tree(s.tree) == [] for s in once)


def test_file_round_trip_is_byte_exact():
    text = (MINI / "dev.conllu").read_text(encoding="utf-8")
    buf = io.StringIO()
    write_conllu(read_conllu(io.StringIO(text)), buf)
    assert buf.getvalue() == text


field_text = st.text(st.characters(blacklist_categories=("Cc", "Cs", "Zs", "Zl", "Zp")), min_size=1, max_size=6)


@settings(max_examples=150, deadline=None)
@given(trees(max_size=10), st.data())
def test_random_sentences_round_trip(tree, data):
    toks = []
    for i, (h, l) in enumerate(zip(tree.heads, tree.labels), start=1):
        form, lemma, feats, misc = (data.draw(field_text) for _ in range(4))
        toks.append(Token(i, form, lemma, "NOUN", "_", feats, h, l, "_", misc))
    comments = ("# sent_id = s1", f"# text = {' '.join(t.form for t in toks)}")
    sent = Sentence(tuple(toks), comments)
    assert roundtrip([sent]) == [sent]


MWT = """# sent_id = mwt
# text = vámonos al mar
1-2\tvámonos\t_\t_\t_\t_\t_\t_\t_\t_
1\tvamos\tir\tVERB\t_\t_\t0\troot\t_\t_
2\tnos\tnosotros\tPRON\t_\t_\t1\tobj\t_\t_
3-4\tal\t_\t_\t_\t_\t_\t_\t_\t_
3\ta\ta\tADP\t_\t_\t5\tcase\t_\t_
4\tel\tel\tDET\t_\t_\t5\tdet\t_\t_
4.1\tllegó\tllegar\tVERB\t_\t_\t_\t_\t1:conj\t_
5\tmar\tmar\tNOUN\t_\t_\t1\tobl:arg\t_\t_

"""


def test_multiword_ranges_and_empty_nodes(caplog):
    with caplog.at_level(logging.WARNING):
        (sent,) = read_conllu(io.StringIO(MWT))
    assert [t.id for t in sent.tokens] == [1, 2, 3, 4, 5]
    assert [(a, b) for a, b, _ in sent.multiword_ranges] == [(1, 2), (3, 4)]
    assert "empty node" in caplog.text
    assert sent.tokens[4].deprel == "obl:arg" and sent.tree.labels[4] == "obl"
    written = format_sentence(sent)
    assert written == MWT.replace("4.1\tllegó\tllegar\tVERB\t_\t_\t_\t_\t1:conj\t_\n", "").rstrip("\n") + "\n"


def test_column_count_error_names_line():
    text = "1\tthe\t_\t_\t_\t_\t0\troot\t_\t_\n2\tdog\t_\t_\n"
    with pytest.raises(ConllError) as err:
        read_conllu(io.StringIO(text))
    assert err.value.line == 2


def test_non_contiguous_ids_name_the_sentence():
    text = "# sent_id = gap\n1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n3\tb\t_\t_\t_\t_\t1\tobj\t_\t_\n"
    with pytest.raises(ConllError, match="gap"):
        read_conllu(io.StringIO(text))


def test_duplicate_ids_rejected():
    text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n1\tb\t_\t_\t_\t_\t1\tobj\t_\t_\n"
    with pytest.raises(ConllError):
        read_conllu(io.StringIO(text))


def test_invalid_tree_dropped_with_warning(caplog):
    bad = "# sent_id = bad\n1\ta\t_\t_\t_\t_\t2\tdet\t_\t_\n2\tb\t_\t_\t_\t_\t1\tobj\t_\t_\n\n"
    good = "1\tc\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
    with caplog.at_level(logging.WARNING):
        sents = read_conllu(io.StringIO(bad + good))
    assert [s.forms for s in sents] == [["c"]]
    assert "bad" in caplog.text
    with pytest.raises(ConllError):
        read_conllu(io.StringIO(bad), drop_invalid=False)


def test_gold_free_input_accepted():
    (sent,) = read_conllu(io.StringIO("1\ta\t_\t_\t_\t_\t_\t_\t_\t_\n2\tb\t_\t_\t_\t_\t_\t_\t_\t_\n"))
    assert not sent.has_tree and sent.forms == ["a", "b"]
    assert roundtrip([sent]) == [sent]


def test_universal_part():
    assert universal("aux:pass") == "aux"
    assert universal("nsubj") == "nsubj"
    assert Token(1, "x", head=0, deprel="nmod:poss").deprel_universal == "nmod"


def test_token_invariants():
    with pytest.raises(ValueError):
        Token(0, "x")
    with pytest.raises(ValueError):
        Token(2, "x", head=2)
    with pytest.raises(ValueError):
        Token(1, "x", head=-1)


def test_validate_examples():
    assert validate_tree(DepTree([0], ["root"])) == []
    assert validate_tree(DepTree([2, 0], ["det", "root"])) == []
    problems = validate_tree(DepTree([2, 1], ["obj", "obj"]))
    assert any("no root" in p for p in problems)
    assert any("cycle" in p and "[1, 2]" in p for p in problems)
    assert any("multiple roots" in p for p in validate_tree(DepTree([0, 0], ["root", "root"])))
    assert any("out of range" in p for p in validate_tree(DepTree([0, 5], ["root", "obj"])))
    assert any("itself" in p for p in validate_tree(DepTree([0, 2], ["root", "obj"])))


@settings(max_examples=200, deadline=None)
@given(trees(max_size=15))
def test_generated_trees_validate(tree):
    assert validate_tree(tree) == []
    kids = tree.children
    assert all(list(k) == sorted(k) for k in kids)
    assert sum(len(k) for k in kids) == len(tree)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=8))
def test_validate_agrees_with_reachability(heads):
    n = len(heads)
    tree = DepTree(heads, ["x"] * n)
    in_range = all(0 <= h <= n and h != d for d, h in enumerate(heads, start=1))
    single_root = heads.count(0) == 1
    reaches_root = in_range and all(_reaches_root(heads, i) for i in range(1, n + 1))
    assert (validate_tree(tree) == []) == (in_range and single_root and reaches_root)


def _reaches_root(heads, i):
    seen = set()
    while i != 0:
        if i in seen:
            return False
        seen.add(i)
        i = heads[i - 1]
    return True


def test_with_tree_keeps_matching_subtype():
    sent = Sentence((Token(1, "x", head=0, deprel="root"), Token(2, "y", head=1, deprel="aux:pass")))
    out = sent.with_tree(DepTree([0, 1], ["root", "aux"]))
    assert out.tokens[1].deprel == "aux:pass"
    out = sent.with_tree(DepTree([0, 1], ["root", "obj"]))
    assert out.tokens[1].deprel == "obj"
