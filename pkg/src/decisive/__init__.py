"""Decisiveness of probabilistic counter machines and reachability probabilities.

The most used entry points are re-exported here; the submodules hold the rest.
"""

from .chain import (BOTTOM, EffectiveChain, FiniteChain, ProbInterval, invariant_distribution,
                    materialize, recast_chain, solve_reach_exact)
from .crp import Incomplete, comp_prob, frame_reachability
from .deciders import (Answer, Verdict, decide, decide_one_counter, gambler_exact, phm_decide,
                       regular_ppn_decide, walk_reach_prob)
from .dsl import format_model, parse_model
from .errors import (BudgetExhausted, DecisiveError, DomainError, InputError,
                     InvariantViolation, ModelError, ParseError)
from .model import (Configuration, CounterMachine, FiniteTarget, Transition, UpwardTarget,
                    ZeroTarget, ZeroTransition, classify, semantics)
from .numeric import Polynomial, parse_polynomial
from .reach import auto_oracle, bounded_oracle, compute_rq, coverability_oracle, one_counter_oracle
from .sim import estimate_reach

__version__ = "0.1.0"
