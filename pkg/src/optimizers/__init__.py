from .asha import ASHAOptimizer, NewConfig, Promote, RungLadder, asha_next_action
from .base import LedgerOptimizer, repeated_mean
from .bayes_opt import BayesOptOptimizer
from .factory import METHODS, create_optimizer, method_spec
from .random_search import RandomSearchOptimizer
