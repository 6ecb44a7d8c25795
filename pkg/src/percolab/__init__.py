"""Monte Carlo study of directed bond percolation with correlated arrow triples.

Two lattice families are simulated: Model A (layered, one vertical
placement per site) and Model B (square lattice, four oriented placements
per site), each in a classical form where a placement opens one bond and
an entanglement-assisted (EA) form where it opens a converging triple.
"""

from .critical import (BracketError, CriticalLine, Phase, bisect_threshold, classify_phase,
                       trace_critical_line)
from .engine import (GrowthLimits, InsufficientDataError, cluster_on_configuration, grow_cluster,
                     grow_cluster_A, measure_cone_half_angle, reach_cluster_B, run_realizations)
from .models import (DirectedBond, ModelKind, ModelSpec, ParameterError, activated_bonds,
                     sample_configuration, with_probability)
from .oracle import compare_mc_to_oracle, engine_mismatches, enumerate_exact
from .stats import (DomainError, SurvivalCurve, beta_from_scaling, estimate_beta_direct,
                    estimate_f_infinity, estimate_gamma, estimate_survival, estimate_tau,
                    mean_cluster_size, measure_exponents)

__version__ = "0.1.0"

__all__ = [
    "BracketError", "CriticalLine", "Phase", "bisect_threshold", "classify_phase",
    "trace_critical_line", "GrowthLimits", "InsufficientDataError", "cluster_on_configuration",
    "grow_cluster", "grow_cluster_A", "measure_cone_half_angle", "reach_cluster_B",
    "run_realizations", "DirectedBond", "ModelKind", "ModelSpec", "ParameterError",
    "activated_bonds", "sample_configuration", "with_probability", "compare_mc_to_oracle",
    "engine_mismatches", "enumerate_exact", "DomainError", "SurvivalCurve", "beta_from_scaling",
    "estimate_beta_direct", "estimate_f_infinity", "estimate_gamma", "estimate_survival",
    "estimate_tau", "mean_cluster_size", "measure_exponents",
]
