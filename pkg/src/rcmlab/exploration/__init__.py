"""Exploration of clusters: growth procedures, lattice sets and the stage machine."""
from .growth import ExplorationState, grow_cubewise, grow_sequential
from .oriented import oriented_site_percolation
from .renormalization import (InvariantViolation, RenormalizationError, RenormResult, StageRecord,
                              ToyConstants, run_renormalization, stage_order)
from .sets import block_index, bridge_event, k_set, subcube_centres, u_set, v_set

__all__ = [
    "ExplorationState", "grow_cubewise", "grow_sequential", "oriented_site_percolation",
    "InvariantViolation", "RenormalizationError", "RenormResult", "StageRecord", "ToyConstants",
    "run_renormalization", "stage_order", "block_index", "bridge_event", "k_set",
    "subcube_centres", "u_set", "v_set",
]
