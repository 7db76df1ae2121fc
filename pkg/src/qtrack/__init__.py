"""Transaction tracking through queues from arrival and departure timestamps."""
__version__ = "0.1.0"

from . import stochastics
from .accuracy import (AccuracyEstimate, TrackingAccuracyEstimator, accuracy_by_size, estimate_accuracies,
                       estimate_accuracy, unit_batch_prob)
from .allocation import (AllocationProblem, AllocationResult, InstrumentationAllocator, load_factor_allocation,
                         optimal_allocation, overlap_fraction, random_allocation, unit_batch_allocation)
from .exceptions import (BusyPeriodTooLargeError, ConfigError, DensityUndefinedError, DimensionMismatchError,
                         InstabilityWarning, MissingAccuraciesError, QTrackError)
from .matching import (biadjacency, count_valid_matchings, fifo_match, is_valid, ml_match, permanent,
                       random_match)
from .ordering import (OrderVerdict, busy_period_order_check, certify_heuristic_optimality, cx_dominated,
                       spread_samples, st_dominates)
from .queue_sim import (BusyPeriod, QueueSpec, Trace, busy_periods, simulate, simulate_infinite_server,
                        simulate_processor_sharing)
from .stochastics import DistributionSpec, deterministic, exponential, uniform, weibull

__all__ = [
    "AccuracyEstimate", "AllocationProblem", "AllocationResult", "BusyPeriod", "BusyPeriodTooLargeError",
    "ConfigError", "DensityUndefinedError", "DimensionMismatchError", "DistributionSpec", "InstabilityWarning",
    "InstrumentationAllocator", "MissingAccuraciesError", "OrderVerdict", "QTrackError", "QueueSpec", "Trace",
    "TrackingAccuracyEstimator", "accuracy_by_size", "biadjacency", "busy_period_order_check", "busy_periods",
    "certify_heuristic_optimality", "count_valid_matchings", "cx_dominated", "deterministic", "estimate_accuracies",
    "estimate_accuracy", "exponential", "fifo_match", "is_valid", "load_factor_allocation", "ml_match",
    "optimal_allocation", "overlap_fraction", "permanent", "random_allocation", "random_match", "simulate",
    "simulate_infinite_server", "simulate_processor_sharing", "spread_samples", "st_dominates", "stochastics",
    "uniform", "unit_batch_allocation", "unit_batch_prob", "weibull",
]
