"""Two-step homogeneous geodesics on homogeneous spaces of compact matrix groups.

Curves ``pi(exp tX exp tY)`` on ``G/K`` equipped with metrics
``lambda_1 B|m_1 + ... + lambda_s B|m_s``, together with the example
families they live on and numerical checks that they are geodesics.
"""

__version__ = "0.1.0"

from .catalog import (
    PRESETS,
    RootDatum,
    build_preset,
    flag_su,
    group_as_space,
    hopf_sphere,
    k_symmetric_su,
    root_parity_split,
    su2_berger,
    wallach_su3,
)
from .decomposition import (
    HomogeneousSpace,
    Subspace,
    bracket_inclusion_residual,
    check_ad_K_invariance,
    check_natural_reductivity,
    check_split_orthogonality,
    deformed_inner,
    nomizu_U,
    orthocomplement,
)
from .geodesic import (
    TwoStepCurve,
    body_velocity,
    coset_distance,
    curve_point,
    geodesic_defect,
    integrate_geodesic,
    koszul_terms,
    verify_two_step,
)
from .lie import MatrixLieAlgebra, build_algebra, expm
from .report import CheckResult, VerificationReport

__all__ = [
    "PRESETS", "RootDatum", "build_preset", "flag_su", "group_as_space", "hopf_sphere", "k_symmetric_su",
    "root_parity_split", "su2_berger", "wallach_su3", "HomogeneousSpace", "Subspace",
    "bracket_inclusion_residual", "check_ad_K_invariance", "check_natural_reductivity",
    "check_split_orthogonality", "deformed_inner", "nomizu_U", "orthocomplement", "TwoStepCurve",
    "body_velocity", "coset_distance", "curve_point", "geodesic_defect", "integrate_geodesic",
    "koszul_terms", "verify_two_step", "MatrixLieAlgebra", "build_algebra", "expm", "CheckResult",
    "VerificationReport",
]
