"""sigmado: sigma-separation, sigma-do-calculus identification, and
SC-hedge certificates for cluster-level causal graphs over cyclic directed
mixed graphs, with a linear cyclic SCM simulator for numerical validation."""

from .graphs import (
    ALLOW_CLUSTER_LEVEL,
    FORBID_ALL,
    ClusterGraph,
    ClusterPartition,
    GraphError,
    MixedGraph,
    Step,
    VertexId,
    Walk,
    maximal_compatible,
    quotient,
    underlying,
)
from .graphio import ParseError, graph_from_dict, graph_to_dict, parse_graph, serialize_graph, to_dot
from .separation import (
    SeparationQuery,
    WalkState,
    d_separated,
    find_active_walk,
    sigma_blocked,
    sigma_separated,
    sigma_separated_oracle,
)
from .probexpr import (
    ExprError,
    Product,
    Quotient,
    Sum,
    Sym,
    Term,
    canonicalize,
    canonical_key,
    equal_canonical,
    from_ast,
    parse_formula,
    render_formula,
    to_ast,
)
from .docalc import (
    IdentifyResult,
    RuleNotApplicable,
    apply_rule,
    expand_total_probability,
    identify,
    rule_applies,
)
from .hedges import (
    EdgeSubgraph,
    HedgeCertificate,
    c_components,
    find_hedge,
    find_sc_hedge,
    is_c_forest,
    sc_projection,
    verify_certificate,
)
from .simulate import (
    Dataset,
    LinearIoScm,
    SimulationError,
    partial_correlation_test,
    random_linear_ioscm,
    sample,
)

__version__ = "0.1.0"
