"""Sequential posted-price mechanisms for K-unit Bayesian auctions."""

from .errors import BudgetExceededError, InvalidInstanceError
from .model import (
    SKIP,
    AspmNode,
    AspmTree,
    BuyerDistribution,
    Instance,
    SpmSchedule,
    discretize,
    random_instance,
    tail_probability,
)

__version__ = "0.1.0"
