"""Randomization tests for named entity recognition corpora.

Erase name regularity, mention coverage or context diversity from a
span-annotated corpus, train baseline taggers on the result and score them
with dictionary-stratified span micro-F1.
"""

from .corpus import (ColumnConfig, Corpus, CoverageStats, Dictionary, Mention, Sentence,
                     build_dictionary, coverage, parse_conll, project_outermost, read_conll,
                     write_conll)
from .evaluation import EvalReport, diff_percent, drop_percent, reference_score, score
from .perturb import (NgramPool, ReplacementMap, TransformSpec, apply_transform, build_pool,
                      context_reduction, mention_permutation, mention_reduction,
                      name_permutation, sentence_reduction)
from .synthgen import SyntheticSpec, generate

__version__ = "0.1.0"
