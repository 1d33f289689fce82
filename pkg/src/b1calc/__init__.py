"""Executable calculus for Baire-class-one functions."""
from .continuous import (
    Domain, SampledSet, Const, Var, Expr, eval_cont, clamp_expr, blowup_term, urysohn_separator,
    dist_to_set, dist_to_interval,
)
from .sequences import (
    BaireSeq, ConvergenceReport, from_sequence, from_expr, const_seq, eval_limit, eval_limit_many,
    add, sub, mul, neg, absolute, join, meet, reciprocal_positive, compose_continuous, truncate,
    series_sum, uniform_limit,
)

__version__ = "0.1.0"
