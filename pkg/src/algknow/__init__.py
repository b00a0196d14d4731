"""Model checking for probabilistic algorithmic knowledge and evidence.

Submodules: :mod:`syntax` (formulas, messages, parser), :mod:`model`
(structures and model files), :mod:`semantics` (truth and probability),
:mod:`evidence` (weights of evidence), :mod:`reliability` (reliability and
evidence-bound audits), :mod:`dolevyao` (message deduction adversaries),
:mod:`scenarios` (worked examples and random structures), :mod:`cli`.
"""

from . import syntax, model, dolevyao, semantics, evidence, reliability, scenarios  # noqa: F401
from .syntax import parse_formula, parse_message
from .model import Answer, ProbabilisticStructure, load_structure, read_structure, dump_structure
from .semantics import holds, probability, answer_distribution, valid_in
from .evidence import build_evidence_space, ev_value, weight, weight_set, lower_weight, upper_weight
from .reliability import reliability as reliability_report, audit_evidence_bounds

__version__ = "0.1.0"
