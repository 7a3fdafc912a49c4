"""Salvaging weighted averages of marginal effects that carry negative weights.

An estimand ``beta = integral of omega(x) g'(x) dx`` with a weight ``omega``
that is negative somewhere can have the wrong sign even when ``g'`` is
positive everywhere.  This package finds the negative-weight region,
builds nonnegative weights with the same estimand (through a link
function or through measure dominance), and constructs sign-flip
witnesses when salvage is impossible.
"""

from .adversary import BumpSpec, Infeasible, SignFlip, find_sign_flip
from .config import DEFAULT, Tolerances
from .dominance import (
    BinMeasures,
    DominanceReport,
    ValueBins,
    bin_values,
    check_dominance,
    induced_measures,
    refine,
    salvage_dominance,
    transform_weights_dominance,
)
from .errors import (
    ConfigError,
    EvaluationError,
    InversionError,
    LinkError,
    OutOfDomainError,
    ParseError,
    QuadratureError,
    SalvageError,
)
from .funcspec import RealFn, differentiate, evaluate, parse
from .intervals import Interval, IntervalSet
from .link import ConditionReport, LinkFn, beta, check_link, make_link, transform_weights_link, verify_preservation
from .numerics import (
    MonotoneSegment,
    QuadratureResult,
    integrate,
    invert_on_segment,
    isolate_roots,
    monotone_segments,
)
from .partition import SignPartition, match_set, partition_signs
from .problem import ProblemSpec, gallery, load_problem, problem_from_dict
from .weights import PiecewiseWeight, WeightPiece

__version__ = "0.1.0"
