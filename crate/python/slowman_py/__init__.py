"""Slow-manifold analysis of slow-fast dynamical systems.

Thin Python face of the Rust `slowman` library: built-in benchmark
systems (Van der Pol, cubic Chua, Lorenz, Volterra-Gause) and a small
text model format, RK4/RK45 integration with dense output, curvature/
torsion slow-manifold conditions with level-set extraction, the
tangent-linear eigenvalue route, and the seeded verification suite.

States and matrices are plain lists; labels are the same strings the
CLI uses ("curvature", "torsion", "exact", "unit_gradient", ...).
"""

from ._native import (
    Grid,
    LevelSet,
    Model,
    Trajectory,
    attractivity,
    builtin_names,
    catalog,
    classify_domain,
    conjugate_product_check,
    default_band,
    deploy,
    eigen,
    extract,
    filter_attractive,
    integrate,
    kinematics_at,
    phi,
    poincare_crossings,
    polynomial_phi_2d,
    polynomial_phi_3d,
    run_verify,
    singular_manifold,
    vanderpol_singular_curve,
    vanderpol_slow_curve,
)

__all__ = [
    "Grid",
    "LevelSet",
    "Model",
    "Trajectory",
    "attractivity",
    "builtin_names",
    "catalog",
    "classify_domain",
    "conjugate_product_check",
    "default_band",
    "deploy",
    "eigen",
    "extract",
    "filter_attractive",
    "integrate",
    "kinematics_at",
    "phi",
    "poincare_crossings",
    "polynomial_phi_2d",
    "polynomial_phi_3d",
    "run_verify",
    "singular_manifold",
    "vanderpol_singular_curve",
    "vanderpol_slow_curve",
]
