"""Monte Carlo estimators and the constants of the renormalization argument."""
from .constants import (ConstantsBundle, ConstantsError, constants, log_bridge,
                        log_bridge_bound, seed_probability)
from .observables import (CATALOG, EstimationError, decay_probe, estimate_pi_k, estimate_theta,
                          fkg_check, giant_stats, parse_event)
from .records import EstimateRecord, records_to_csv, wilson
from .threshold import BracketError, crossing_indicators, estimate_lambda_c, slab_curve

__all__ = [
    "ConstantsBundle", "ConstantsError", "constants", "log_bridge", "log_bridge_bound",
    "seed_probability",
    "CATALOG", "EstimationError", "decay_probe", "estimate_pi_k", "estimate_theta",
    "fkg_check", "giant_stats", "parse_event", "EstimateRecord", "records_to_csv", "wilson",
    "BracketError", "crossing_indicators", "estimate_lambda_c", "slab_curve",
]
