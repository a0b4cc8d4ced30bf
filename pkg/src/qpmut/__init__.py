"""qpmut: a symbolic engine for graded quivers with potentials.

Exact-rational mutation and reduction, degree obstruction certificates,
graded Jacobian dimension tables, and bounded mutation-class search, with a
CLI and an HTTP service on top.
"""

from .core import (
    Arrow,
    DEFAULT_LENGTH_CAP,
    Grading,
    Potential,
    QPError,
    QPState,
    Quiver,
    Vertex,
    canonical_cycle,
    cyclic_derivative,
    is_homogeneous,
    make_potential,
    path_degree,
    substitute,
)
from .generators import (
    McKaySpec,
    PreprojectiveSpec,
    deformed_preprojective,
    eliminate_loops,
    gcd_condition,
    mckay_cyclic,
    parse_spec,
    validate_lambda,
)
from .jacobian import DimensionTable, graded_dims, hh0_dims
from .mutation import (
    MutationReport,
    ObstructionCertificate,
    degree_obstruction,
    mutate,
    premutate,
    reduce,
)
from .search import SearchReport, canonical_key, explore, replay
from .serialize import loads_qp, qp_from_json, qp_to_json

__version__ = "0.1.0"
