"""Minimum quartet tree cost (MQTC) solvers.

Exact enumeration over all tree shapes and leaf assignments for small
instances, randomized hill climbing for larger ones.
"""

__version__ = "0.1.0"

from .errors import InputFormatError, InputSizeError, InvalidTreeError, MQTCError, ResourceLimitError
from .exact import SolverResult, count_labeled_trees, enumerate_assignments, solve_exact
from .hill import SearchConfig, neighbors, random_tree, solve_hill_climbing
from .io import RunReport, format_distance_matrix, input_digest, parse_distance_matrix
from .quartet import (
    DistanceMatrix,
    QuartetTopology,
    coefficient_matrix,
    consistent_topology,
    cost_bounds,
    normalized_score,
    quartet_cost,
    tree_cost,
    tree_cost_bruteforce,
)
from .shapes import (
    InvariantSignature,
    TopologyShape,
    canonical_code,
    generate_shapes,
    initial_caterpillar,
    invariant_signature,
)
from .tree import (
    CompleteMatrix,
    LabeledTree,
    ValidationReport,
    from_complete_matrix,
    leaf_path,
    parse_newick,
    to_complete_matrix,
    to_newick,
    validate_tree,
)
