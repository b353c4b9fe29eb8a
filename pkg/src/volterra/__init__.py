"""Infinite-dimensional Volterra quadratic operators on the l1 simplex."""
from .simplex import (
    EmptySupport,
    InvalidPoint,
    SimplexPoint,
    ZeroMass,
    l1_distance,
    max_support,
    min_support,
    parse_point,
    renormalize,
    rho_distance,
    support,
)
from .matrix import (
    DescriptorError,
    InvalidRange,
    MatrixClass,
    NotSkew,
    SkewMatrix,
    Tag,
    classify,
    from_descriptor,
    make_constant,
    make_random,
    make_table,
    make_tilde,
)
from .operator import (
    MassDrift,
    NegativeCoordinate,
    NotTilde,
    Trajectory,
    VolterraOperator,
    apply,
    cascade_partial_sum_oracle,
    decompose_tilde,
    iterate,
)
from .lyapunov import (
    LinearFunctional,
    admissibility,
    make_bm,
    make_bn_harmonic,
    make_increasing,
    monotonicity_report,
    phi,
)
from .analysis import (
    Budget,
    ErgodicBudget,
    PointOnSphere,
    Undecided,
    VertexLimit,
    ZeroLimit,
    cesaro,
    check_corollary_support,
    ergodicity_verdict,
    estimate_omega,
    logistic_map,
    truncation_sweep,
)

__version__ = "0.1.0"
