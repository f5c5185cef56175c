"""Generalized Hilbert metrics on convex domains in Grassmannian charts.

Chart points are q-by-p matrices; convex bodies are membership oracles;
distances come from cross ratios along rank-one lines and chains thereof.
"""

from .domains import (
    AffineImage,
    ConvexBody,
    ExtremeSearchBudget,
    FullChart,
    OperatorNormBall,
    Polytope,
    PositiveHalfCone,
    RProperBudget,
    RProperVerdict,
    SegmentHit,
    TangentConeBody,
    body_from_descriptor,
    boundary_adjacent,
    boundary_hits,
    certify_boundary,
    delta_along,
    extreme_point_test,
    hausdorff_distance_clipped,
    is_r_proper,
    tangent_cone,
    z_hypersurface_contains,
)
from .errors import (
    BallNotContained,
    ChartEscape,
    ConvergenceNotReached,
    DegenerateConfiguration,
    DescriptorError,
    EmptyClip,
    GeometryError,
    NonDiagonalizableBeyondTolerance,
    NotBoundary,
    NotOrthogonal,
    PointOutside,
    ProbeOutside,
    WitnessNotFound,
)
from .lingeom import (
    DominantSpectrum,
    ProjectiveTransform,
    RankOneDirection,
    RankOneLine,
    compound,
    cross_ratio,
    dominant_spectrum,
    intersection_dim,
    plucker_embed,
    rank_one_line,
)
from .metric import (
    Chain,
    MetricBudget,
    MetricEstimate,
    RhoValue,
    hilbert_classical,
    hilbert_lower_bound,
    k_estimate,
    rho,
    rho_lower_bound_ball,
    svd_chain,
)
from .rescaling import (
    ConvergenceReport,
    ExtremeSuiteRow,
    extreme_equivalence_suite,
    face_relation_probe,
    nested_body_metric_convergence,
    pnotq_failure_demo,
    tangent_cone_convergence,
)
from .symmetry import (
    DegenerateLimit,
    IndefiniteGenerator,
    OneParameterGroup,
    boost_degenerate_limit,
    cayley,
    homothety_group,
    random_so_pp,
    rescaling_group,
    unipotent_translation,
    verify_ball_preserved,
)

__version__ = "0.1.0"
