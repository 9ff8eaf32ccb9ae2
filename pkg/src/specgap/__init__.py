"""Spectral gaps of the interchange, exclusion and random-walk processes on finite graphs."""

from .errors import (
    BudgetExceeded,
    ConvergenceError,
    DisconnectedError,
    DisconnectedPrefixError,
    GraphError,
    LumpabilityError,
    ReducibleChainError,
    SpecgapError,
)
from .graphcore import (
    BuildSequence,
    Graph,
    add_edge,
    boundary_graph,
    cartesian_product,
    emit_graph6,
    enumerate_connected,
    induced_subgraph,
    intermediate_sequence,
    make_box,
    make_complete,
    make_cycle,
    make_path,
    make_star,
    parse_graph6,
    remove_pendant_edge,
)
from .operators import (
    FormValues,
    Generator,
    StateIndexer,
    class_forms,
    exclusion_generator,
    interchange_generator,
    rayleigh_quotient,
    rw_generator,
    suppressed_generator,
)
from .spectral import SpectrumResult, check_eigenpair, full_spectrum, spectral_gap
from .lumping import LumpingMap, QuotientChain, build_quotient, occupancy_map, position_map, project_eigenvector

__version__ = "0.1.0"
