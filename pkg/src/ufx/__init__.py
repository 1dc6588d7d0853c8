"""Ultrafilter extensions of first-order models, with finite and symbolic checkers."""

from .beta import (
    BetaModel, FiniteUltrafilter, LiftReport, beta_extend, enumerate_ultrafilters, lift, lift_check,
    natural_embedding, principal, pushforward,
)
from .formula import Assignment, evaluate, parse_formula, to_text
from .model import (
    MapWitness, Model, Vocabulary, classify_map, parse_model, serialize_model, validate_model,
)
from .papersuite import (
    build_m1, compute_G, cut_segments, formula_phi, formula_psi, lemma3_finite, lemma3_symbolic, run_suite,
)
from .symbolic import (
    EPSet, FrechetOn, Kleene, ParamFamily, Principal, epset_algebra, epset_cut, eval_two_level, measure,
    pair_image_membership, parse_epset,
)

__version__ = "0.1.0"
