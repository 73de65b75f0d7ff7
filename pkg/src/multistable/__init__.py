"""Distributed-consensus model of multistable perception.

Exact discrete information structures, blackboard protocols whose histories
are hyperrectangles, consensus and equilibrium checks, Gestalt complexity,
switching costs, protocol optimization and an LMSR market.
"""

from .errors import (
    GuardExceeded,
    MultistableError,
    PolicyError,
    PreconditionError,
    StructureError,
    ZeroMassError,
)
from .structure import (
    Hyperrectangle,
    InformationStructure,
    cond_mutual_info_signal,
    from_arrays,
    posterior_global,
    posterior_ground_truth,
    posterior_local,
    rect_cond_prob,
    rect_prob,
    regret,
    validate_structure,
)
from .consensus import b_of_epsilon, enumerate_consensus_rectangles, is_beta_equilibrium, is_epsilon_consensus
from .complexity import (
    detect_multistability,
    certify_stimulus,
    direct_sum,
    gestalt_history,
    gestalt_stimulus,
    gestalt_structure,
    monostability_certificate,
)
from .switching import min_switching_cost, switch_divergence_bound
from .protocol import Policy, Protocol, Transcript, count_disagreements, run, run_all, step
from .optimization import local_search, objective, protocol_from_partition
from .market import MarketState, Strategy, execute_trade, net_reward, price, run_market_session
from .scenarios import duckrabbit3x3, xor2

__version__ = "0.1.0"
