"""Generate the bundled UD-format mini-treebank from a seeded English-like grammar.

    python scripts/make_minitreebank.py --seed 13 --train 400 --dev 100 --out data/mini

The grammar covers all seven functional relations (clf through measure words, as in
"a piece of bread"), coordination, relative/complement/adverbial clauses, copulas,
auxiliary chains, punctuation and a share of non-projective extraposed relative clauses.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

from nucparse.treebank import Sentence, Token, save, validate_tree

NOUNS = """dog cat room man woman child teacher city house book letter car garden river student
doctor friend farmer king queen bird horse boat village road window table door story song
soldier painter baker driver lawyer nurse sailor tree forest hill bridge market school church
office station island lake mountain valley apple bottle chair coat hat key lamp map picture
ring shirt stone wall box bag cup knife plate clock phone camera computer letter paper wheel""".split()
PLURAL_IRREGULAR = {"man": "men", "woman": "women", "child": "children", "knife": "knives"}
PROPN = """Anna Boris Carla David Elena Frank Greta Hugo Irene Jonas Karin Lukas Maria Nils Olga
Peter Rosa Simon Tina Viktor""".split()
ADJ = """old young big small red green happy sad tall short quiet loud dark bright cold warm
rich poor famous strange heavy empty angry clever brave lazy""".split()
ADV = "quickly slowly often never always soon yesterday today carefully suddenly".split()
NUM = "two three four five six ten".split()
DET_SG = "the a this that every no some".split()
DET_PL = "the these those some many no".split()
POSS = "his her their our my".split()

# (base, past, participle, ing)
TRANSITIVE = [
    ("chase", "chased", "chased", "chasing"), ("see", "saw", "seen", "seeing"),
    ("find", "found", "found", "finding"), ("read", "read", "read", "reading"),
    ("write", "wrote", "written", "writing"), ("buy", "bought", "bought", "buying"),
    ("paint", "painted", "painted", "painting"), ("open", "opened", "opened", "opening"),
    ("carry", "carried", "carried", "carrying"), ("build", "built", "built", "building"),
    ("visit", "visited", "visited", "visiting"), ("like", "liked", "liked", "liking"),
    ("watch", "watched", "watched", "watching"), ("follow", "followed", "followed", "following"),
    ("break", "broke", "broken", "breaking"), ("clean", "cleaned", "cleaned", "cleaning"),
    ("sell", "sold", "sold", "selling"), ("hide", "hid", "hidden", "hiding"),
    ("catch", "caught", "caught", "catching"), ("cause", "caused", "caused", "causing"),
]
INTRANSITIVE = [
    ("sleep", "slept", "slept", "sleeping"), ("arrive", "arrived", "arrived", "arriving"),
    ("laugh", "laughed", "laughed", "laughing"), ("run", "ran", "run", "running"),
    ("smile", "smiled", "smiled", "smiling"), ("wait", "waited", "waited", "waiting"),
    ("sing", "sang", "sung", "singing"), ("fall", "fell", "fallen", "falling"),
    ("work", "worked", "worked", "working"), ("come", "came", "come", "coming"),
]
DITRANSITIVE = [
    ("give", "gave", "given", "giving"), ("send", "sent", "sent", "sending"),
    ("show", "showed", "shown", "showing"), ("offer", "offered", "offered", "offering"),
]
SAY = [("say", "said", "said", "saying"), ("think", "thought", "thought", "thinking"),
       ("know", "knew", "known", "knowing"), ("hope", "hoped", "hoped", "hoping")]
WANT = [("want", "wanted", "wanted", "wanting"), ("try", "tried", "tried", "trying"),
        ("decide", "decided", "decided", "deciding"), ("plan", "planned", "planned", "planning")]
PREP_NMOD = ["of", "with", "from", "near"]
PREP_OBL = ["in", "on", "from", "with", "near", "under", "after", "before", "for", "to"]
ADVCL_MARK = ["because", "when", "if", "while", "although"]
MEASURE = ["piece", "cup", "bottle", "box"]  # "a piece of X": X is the head, measure word as clf
MASS = ["bread", "water", "wine", "cake", "tea", "paper"]


class Node:
    __slots__ = ("form", "lemma", "upos", "feats", "head", "deprel")

    def __init__(self, form, upos, lemma=None, feats="_"):
        self.form, self.upos, self.lemma, self.feats = form, upos, lemma or form.lower(), feats
        self.head = None
        self.deprel = None


def attach(dep: Node, head: Node | None, rel: str) -> Node:
    dep.head, dep.deprel = head, rel
    return dep


class Grammar:
    def __init__(self, rng: random.Random):
        self.r = rng

    def chance(self, p):
        return self.r.random() < p

    def pick(self, xs):
        return self.r.choice(xs)

    # noun phrases -------------------------------------------------------
    def noun(self, plural=False):
        lemma = self.pick(NOUNS)
        form = PLURAL_IRREGULAR.get(lemma, lemma + ("es" if lemma.endswith(("s", "x", "ch")) else "s")) if plural else lemma
        return Node(form, "NOUN", lemma, "Number=Plur" if plural else "Number=Sing")

    def np(self, role="obj", depth=0, allow_rel=True, pronoun_ok=True):
        """Return (linear nodes, head)."""
        roll = self.r.random()
        if pronoun_ok and roll < 0.12:
            forms = {"nsubj": ["he", "she", "they", "we", "it", "I", "you"],
                     "iobj": ["him", "her", "them", "us", "me"]}.get(role, ["him", "her", "them", "us", "it", "me"])
            head = Node(self.pick(forms), "PRON")
            return [head], head
        if roll < 0.24:
            head = Node(self.pick(PROPN), "PROPN")
            out = [head]
        elif depth == 0 and roll < 0.28:
            # a piece of bread: measure word as classifier-like function word
            det = Node(self.pick(["a", "one"]), "DET")
            meas = Node(self.pick(MEASURE), "NOUN")
            of = Node("of", "ADP")
            head = Node(self.pick(MASS), "NOUN", feats="Number=Sing")
            attach(det, head, "det"), attach(meas, head, "clf"), attach(of, head, "case")
            out = [det, meas, of, head]
        else:
            plural = self.chance(0.3)
            head = self.noun(plural)
            pre = []
            if self.chance(0.8):
                if self.chance(0.15):
                    d = Node(self.pick(POSS), "PRON", feats="Poss=Yes")
                    pre.append(attach(d, head, "nmod:poss"))
                else:
                    d = Node(self.pick(DET_PL if plural else DET_SG), "DET")
                    pre.append(attach(d, head, "det"))
            if plural and self.chance(0.2):
                pre.append(attach(Node(self.pick(NUM), "NUM"), head, "nummod"))
            for _ in range(self.r.choice([0, 0, 0, 1, 1, 2])):
                adj = Node(self.pick(ADJ), "ADJ")
                if self.chance(0.1):
                    pre.append(attach(Node("very", "ADV"), adj, "advmod"))
                pre.append(attach(adj, head, "amod"))
            out = pre + [head]
        if depth < 2 and self.chance(0.2):
            pp, pph = self.pp(PREP_NMOD, depth + 1)
            attach(pph, head, "nmod")
            out += pp
        if allow_rel and depth == 0 and self.chance(0.1):
            rel, relh = self.relative(head)
            out += rel
        if depth == 0 and role != "iobj" and self.chance(0.07):
            cc = Node(self.pick(["and", "or"]), "CCONJ")
            conj_nodes, conj_head = self.np(role, depth + 1, allow_rel=False, pronoun_ok=False)
            attach(cc, conj_head, "cc")
            attach(conj_head, head, "conj")
            out += [cc] + conj_nodes
        return out, head

    def pp(self, preps, depth=1):
        case = Node(self.pick(preps), "ADP")
        nodes, head = self.np("obl", depth, allow_rel=False, pronoun_ok=self.chance(0.3))
        attach(case, head, "case")
        return [case] + nodes, head

    def relative(self, antecedent):
        """who/that relative clause; returns (nodes, verb head) already attached as acl:relcl."""
        pron = Node(self.pick(["who", "that"]), "PRON")
        if self.chance(0.5):
            # subject relative: who chased the cat / who was happy
            if self.chance(0.35):
                cop = Node(self.pick(["was", "is"]), "AUX", "be")
                pred = Node(self.pick(ADJ), "ADJ")
                attach(pron, pred, "nsubj"), attach(cop, pred, "cop")
                nodes, head = [pron, cop, pred], pred
            else:
                verb_nodes, verb = self.verb_group(self.pick(TRANSITIVE))
                obj, objh = self.np("obj", 1, allow_rel=False)
                attach(objh, verb, "obj")
                attach(pron, verb, "nsubj")
                nodes, head = [pron] + verb_nodes + obj, verb
        else:
            # object relative: that the dog chased
            subj, subjh = self.np("nsubj", 1, allow_rel=False)
            verb_nodes, verb = self.verb_group(self.pick(TRANSITIVE))
            attach(subjh, verb, "nsubj"), attach(pron, verb, "obj")
            nodes, head = [pron] + subj + verb_nodes, verb
        attach(head, antecedent, "acl:relcl")
        return nodes, head

    # verbs -----------------------------------------------------------------
    def verb_group(self, lex, finite=True):
        base, past, part, ing = lex
        roll = self.r.random()
        auxes = []
        if not finite:
            verb = Node(base, "VERB", base)
        elif roll < 0.45:
            verb = Node(past, "VERB", base, "Tense=Past")
        elif roll < 0.6:
            verb = Node(base, "VERB", base)
            auxes = [Node(self.pick(["will", "can", "must", "should", "would", "might"]), "AUX")]
        elif roll < 0.75:
            verb = Node(part, "VERB", base, "VerbForm=Part")
            auxes = [Node(self.pick(["has", "had", "have"]), "AUX", "have")]
        elif roll < 0.9:
            verb = Node(ing, "VERB", base, "VerbForm=Ger")
            auxes = [Node(self.pick(["is", "was", "are", "were"]), "AUX", "be")]
        else:
            verb = Node(ing, "VERB", base, "VerbForm=Ger")
            auxes = [Node(self.pick(["will", "might", "must"]), "AUX"), Node("be", "AUX", "be")]
        for a in auxes:
            attach(a, verb, "aux")
        out = list(auxes)
        if auxes and self.chance(0.12):
            out.append(attach(Node(self.pick(["not", "never"]), "PART"), verb, "advmod"))
        out.append(verb)
        return out, verb

    def clause(self, depth=0, subject=True, finite=True):
        """Return (nodes, predicate head, subject head or None, trailing slot insertion index)."""
        r = self.r.random()
        subj_nodes, subjh = ([], None)
        if subject:
            subj_nodes, subjh = self.np("nsubj", 0 if depth == 0 else 1, allow_rel=depth == 0)
        if r < 0.14:
            # copula: the dog is happy / the man was a teacher
            cop = Node(self.pick(["is", "was", "are", "were"] if finite else ["be"]), "AUX", "be")
            if self.chance(0.6):
                pred = Node(self.pick(ADJ), "ADJ")
                pre = []
                if self.chance(0.2):
                    pre = [attach(Node("very", "ADV"), pred, "advmod")]
                pred_nodes = pre + [pred]
            else:
                pred_nodes, pred = self.np("obj", 1, allow_rel=False, pronoun_ok=False)
            attach(cop, pred, "cop")
            if not finite:
                to = Node("to", "PART")
                attach(to, pred, "mark")
                nodes = [to, cop] + pred_nodes
            else:
                nodes = [cop] + pred_nodes
            head = pred
        else:
            if not finite:
                to = Node("to", "PART")
            kind = self.r.random()
            if kind < 0.4:
                lex = self.pick(TRANSITIVE)
            elif kind < 0.6:
                lex = self.pick(INTRANSITIVE)
            elif kind < 0.72:
                lex = self.pick(DITRANSITIVE)
            elif kind < 0.86 and depth < 2:
                lex = self.pick(SAY)
            elif depth < 2:
                lex = self.pick(WANT)
            else:
                lex = self.pick(INTRANSITIVE)
            verb_nodes, verb = self.verb_group(lex, finite)
            head = verb
            nodes = list(verb_nodes)
            if not finite:
                attach(to, verb, "mark")
                nodes = [to] + nodes
            if self.chance(0.1):
                nodes.insert(len(nodes) - 1, attach(Node(self.pick(ADV[:4]), "ADV"), verb, "advmod"))
            if lex in TRANSITIVE:
                obj, objh = self.np("obj")
                nodes += obj
                attach(objh, verb, "obj")
            elif lex in DITRANSITIVE:
                io, ioh = self.np("iobj", 1, allow_rel=False)
                obj, objh = self.np("obj")
                attach(ioh, verb, "iobj"), attach(objh, verb, "obj")
                nodes += io + obj
            elif lex in SAY:
                comp, comph, _ = self.clause(depth + 1)
                if self.chance(0.7):
                    mark = Node("that", "SCONJ")
                    attach(mark, comph, "mark")
                    comp = [mark] + comp
                attach(comph, verb, "ccomp")
                nodes += comp
            elif lex in WANT:
                comp, comph, _ = self.clause(depth + 1, subject=False, finite=False)
                attach(comph, verb, "xcomp")
                nodes += comp
            for _ in range(self.r.choice([0, 0, 1, 1, 2]) if depth < 2 else 0):
                pp, pph = self.pp(PREP_OBL)
                attach(pph, verb, "obl")
                nodes += pp
            if self.chance(0.12):
                nodes.append(attach(Node(self.pick(ADV), "ADV"), verb, "advmod"))
        if subjh is not None:
            attach(subjh, head, "nsubj")
            nodes = subj_nodes + nodes
        return nodes, head, subjh

    def sentence(self):
        nodes, head, subjh = self.clause()
        attach(head, None, "root")
        # extraposed relative clause: "a man arrived yesterday who was tall" (non-projective)
        if subjh is not None and subjh.upos == "NOUN" and self.chance(0.12):
            rel, _ = self.relative(subjh)
            nodes = nodes + rel
        if self.chance(0.1):
            cc = Node(self.pick(["and", "but"]), "CCONJ")
            conj_nodes, conj, _ = self.clause(1)
            attach(cc, conj, "cc"), attach(conj, head, "conj")
            nodes += [cc] + conj_nodes
        if self.chance(0.18):
            mark = Node(self.pick(ADVCL_MARK), "SCONJ")
            sub, subh, _ = self.clause(1)
            attach(mark, subh, "mark"), attach(subh, head, "advcl")
            if self.chance(0.5):
                comma = attach(Node(",", "PUNCT"), subh, "punct")
                nodes = [mark] + sub + [comma] + nodes
            else:
                nodes = nodes + [mark] + sub
        if self.chance(0.9):
            nodes.append(attach(Node(self.pick([".", ".", ".", "!"]), "PUNCT"), head, "punct"))
        return nodes


def to_sentence(nodes, sent_id: str) -> Sentence:
    index = {id(n): i for i, n in enumerate(nodes, start=1)}
    first = nodes[0].form
    words = [n.form for n in nodes]
    words[0] = first[0].upper() + first[1:] if first not in PROPN else first
    toks = []
    for i, (n, form) in enumerate(zip(nodes, words), start=1):
        head = 0 if n.head is None else index[id(n.head)]
        misc = "_" if i == len(nodes) or nodes[i].upos != "PUNCT" else "SpaceAfter=No"
        toks.append(Token(i, form, n.lemma, n.upos, "_", n.feats, head, n.deprel, "_", misc))
    text = ""
    for t in toks:
        text += t.form + ("" if t.misc == "SpaceAfter=No" else " ")
    return Sentence(tuple(toks), (f"# sent_id = {sent_id}", f"# text = {text.strip()}"))


def generate(count: int, rng: random.Random, prefix: str, max_len: int = 24) -> list[Sentence]:
    g = Grammar(rng)
    out = []
    while len(out) < count:
        nodes = g.sentence()
        if len(nodes) > max_len:
            continue
        sent = to_sentence(nodes, f"{prefix}-{len(out) + 1:04d}")
        assert not validate_tree(sent.tree)
        out.append(sent)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=13)
    ap.add_argument("--train", type=int, default=400)
    ap.add_argument("--dev", type=int, default=100)
    ap.add_argument("--out", type=Path, default=Path("data/mini"))
    args = ap.parse_args()
    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    save(generate(args.train, rng, "train"), args.out / "train.conllu")
    save(generate(args.dev, rng, "dev"), args.out / "dev.conllu")


if __name__ == "__main__":
    main()
