"""Numerical laboratory for equivariant Laplacians on circle bundles over flat tori.

Builds gauge-covariant discretizations of the weight-m horizontal operators
of a Kaluza-Klein metric on a principal circle bundle with prescribed integer
flux, computes their low eigenpairs, lifts eigensections to the total space,
and measures the topology of the nodal sets (domain counts, nodal-set
connectivity, fiber covering degree, zero winding).  A perturbation lab
validates first-order eigenvalue shifts against finite differences, and a
sphere module realizes the non-free rotation action on S^2 where the
two-domain law fails.
"""

from .geometry import (
    BaseGrid,
    Connection,
    Section,
    gauge_transform,
    gradient_edge_integrals,
    make_base_grid,
    make_connection,
    midpoint_edge_integrals,
    one_form_edge_integrals,
    scalar_field_callable,
)
from .operators import (
    OperatorPair,
    apply_operator,
    assemble_forms,
    edge_weight,
    rayleigh_quotient,
    total_eigenvalue,
)
from .spectral import (
    ClusterReport,
    EigenPair,
    SolverConvergenceError,
    cross_weight_disjointness,
    detect_clusters,
    lowest_eigenpairs,
)
from .nodal import (
    LiftedField,
    NodalReport,
    analyze_nodal,
    covering_survey,
    fiber_zero_count,
    lift,
    nodal_domains,
    nodal_set_components,
    regularity_margin,
    section_zero_winding,
)
from .perturbation import (
    ConnectionVariation,
    DegenerateEigenvalueError,
    MetricVariation,
    SplitReport,
    cluster_shift_matrix,
    conformal_identity_shift,
    connection_first_order_shift,
    continuum_shift_quadrature,
    finite_difference_report,
    finite_difference_shift,
    metric_first_order_shift,
    perturbed_operator,
    shift_comparison_report,
    splitting_experiment,
)
from .sphere import (
    SphereHarmonic,
    SphereNodalReport,
    fixed_point_vanishing_check,
    legendre_p,
    sphere_harmonic_field,
    sphere_nodal_counts,
)

__version__ = "0.1.0"
