"""Mean curvature flow laboratory.

Evolves closed discrete hypersurfaces (polygon curves, triangle meshes)
by mean curvature flow up to the first curvature blow-up, monitors the
spacetime curvature functionals that distinguish bounded from divergent
behavior there, applies exact parabolic rescaling, and numerically
verifies the supporting geometric inequalities and iteration constants.
Closed-form shrinking spheres and circles serve as ground truth
throughout.
"""

__version__ = "0.1.0"

from .errors import McflowError
from .surface import (
    DiscreteHypersurface,
    build_surface,
    curvatures,
    dirichlet_energy,
    gradient_l1,
    integrate,
    lp_norm,
)
from .shapes import (
    bumpy_sphere,
    ellipsoid,
    icosphere,
    random_positive_field,
    regular_polygon,
    torus,
    wavy_polygon,
)
from .flow import (
    FlowConfig,
    FlowTrajectory,
    RemeshPolicy,
    estimate_singular_time,
    moment_key,
    run,
    step,
)
from .oracle import SphereSolution, compare, sampled_trajectory, sphere_functional
from .monitors import (
    MonitorReport,
    criticality,
    critical_power,
    growth_rate_fit,
    keybound_check,
    mixed_norm,
    mixed_norm_report,
    subcritical_log,
    sup_a_report,
    supercritical,
)
from .rescale import (
    RescaleSpec,
    bracket_c0,
    invariance_report,
    normalizing_factor,
    prop41_check,
    rescale_trajectory,
    unit_time_factor,
)
from .analysis import (
    MoserConstants,
    SobolevExponents,
    c1_from_c0_bound,
    harnack_check,
    interpolation_gap,
    lemma21_gap,
    michael_simon_ratio,
    moser_constants,
    parabolic_sobolev_gap,
)
from .gronwall import (
    GronwallState,
    extension_verdict,
    h_bound,
    psi,
    psi_tilde,
    psi_tilde_inverse,
)
from .fileio import load_surface, read_obj, save_surface, write_obj
from .persist import load_trajectory, save_trajectory

__all__ = [
    "__version__",
    "McflowError",
    "DiscreteHypersurface",
    "build_surface",
    "curvatures",
    "dirichlet_energy",
    "gradient_l1",
    "integrate",
    "lp_norm",
    "bumpy_sphere",
    "ellipsoid",
    "icosphere",
    "random_positive_field",
    "regular_polygon",
    "torus",
    "wavy_polygon",
    "FlowConfig",
    "FlowTrajectory",
    "RemeshPolicy",
    "estimate_singular_time",
    "moment_key",
    "run",
    "step",
    "SphereSolution",
    "compare",
    "sampled_trajectory",
    "sphere_functional",
    "MonitorReport",
    "criticality",
    "critical_power",
    "growth_rate_fit",
    "keybound_check",
    "mixed_norm",
    "mixed_norm_report",
    "subcritical_log",
    "sup_a_report",
    "supercritical",
    "RescaleSpec",
    "bracket_c0",
    "invariance_report",
    "normalizing_factor",
    "prop41_check",
    "rescale_trajectory",
    "unit_time_factor",
    "MoserConstants",
    "SobolevExponents",
    "c1_from_c0_bound",
    "harnack_check",
    "interpolation_gap",
    "lemma21_gap",
    "michael_simon_ratio",
    "moser_constants",
    "parabolic_sobolev_gap",
    "GronwallState",
    "extension_verdict",
    "h_bound",
    "psi",
    "psi_tilde",
    "psi_tilde_inverse",
    "load_surface",
    "read_obj",
    "save_surface",
    "write_obj",
    "load_trajectory",
    "save_trajectory",
]
