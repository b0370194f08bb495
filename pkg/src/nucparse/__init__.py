"""Nucleus-aware transition-based dependency parsing for UD treebanks."""

__version__ = "0.1.0"

from .treebank import DepTree, Sentence, Token, read_conllu, validate_tree, write_conllu  # noqa: E402
from .nucleus import FUNCTIONAL_RELATIONS, Nucleus, extract_nuclei, nucleus_statistics, oracle_transform  # noqa: E402
from .evaluation import clas, evaluate, las, per_relation_f1, significance, weighted_deltas  # noqa: E402
