"""Learning-automata quantity bidding in a Cournot electricity market.

Suppliers bid quantities into a DC-network market cleared by welfare
maximization; each supplier can learn its bid through a Gaussian
continuous-action learning automaton, and brute-force best-response oracles
provide the equilibrium benchmarks.
"""
from ._kernel import KERNEL_NAME
from .dispatch import (
    ClosedFormInvalidError,
    DispatchResult,
    InfeasibleDispatchError,
    clear_market,
    closed_form_uncongested,
    kkt_check,
)
from .learner import LearnerParams, LearnerState, learning_step, select_action, update_distribution
from .model import (
    BidProfile,
    ConsumerParams,
    LearnerConfig,
    Line,
    ModelError,
    Network,
    Scenario,
    SupplierParams,
    cost_of,
    load_scenario,
    profit_of,
    threebus,
    utility_of,
)
from .oracle import (
    BestResponseResult,
    NashResult,
    best_response,
    cournot_first_order_point,
    iterate_nash,
    percentage_error,
)
from .ptdf import compute_ptdf

__version__ = "0.1.0"
