"""Design subgraphs that minimise s-t effective resistance under an edge budget."""

from .cp import (FractionalSolution, OptimalityCertificate, SolverConfig, extract_certificate,
                 solve_cp, solve_dcp)
from .electrical import (ElectricalFlow, effective_resistance, electrical_flow, energy,
                         potentials, reff_gradient)
from .errors import ReffError
from .flows import PathDecomposition, ShortPathConfig, decompose, short_path_filter
from .generators import (ThreeDMInstance, gen_3dm, gen_gap_cost, gen_gap_resistance, gen_random,
                         gen_random_sp, gen_two_paths)
from .graph import Edge, Instance, parse_instance, read_instance, validate, write_instance
from .oracle import OracleResult, oracle_dual, oracle_primal
from .rounding import RoundingOutcome, approximate, dual_round, path_round, short_path_round
from .sp import SPTree, recognize_sp, sp_exact, sp_fptas

__version__ = "0.1.0"
