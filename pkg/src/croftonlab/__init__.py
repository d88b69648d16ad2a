"""croftonlab: numerical integral geometry.

Gram volumes and ellipsoid densities, mixed volumes of ellipsoids with
independent cross-checking routes, Crofton-formula verification by Monte
Carlo intersection counting (Euclidean spaces, spheres and their
products), and average zero counts of random function systems.
"""
from .geomcore import (
    ContractViolation,
    Ellipsoid,
    Frame,
    QuadForm,
    ellipsoid_of_form,
    gram_volume,
    restrict_form,
    support,
)
from .mixvol import (
    MixedVolumeResult,
    OracleFailure,
    ellipsoid_volume,
    eval_d_m,
    gaussian_absdet_mean,
    mixed_area_2d,
    mixed_volume,
    mixed_volume_gauss,
    mixed_volume_oracle,
    unit_ball_volume,
)
from .densities import (
    Chart,
    EllipsoidDensity,
    FinslerField,
    ParamManifold,
    ProductManifold,
    QuadratureResult,
    circle,
    eval_vol1,
    flat_box,
    graph_surface,
    great_circle,
    integrate_density,
    latitude_circle,
    mixed_riemannian_density,
    product_manifold,
    product_of_circles_on_spheres,
    pullback_field,
    ring_product_eval,
    sphere2,
    torus_embedded,
    vol1_density,
)
from .croftonsim import (
    CountingFailure,
    CroftonData,
    DegenerateSample,
    EstimateReport,
    UnsupportedPrediction,
    count_curve_hyperplane,
    count_surface_system,
    estimate_crofton,
    euclid_data,
    kappa,
    kappa_mc,
    predict_product,
    product_data,
    sample_euclid_hyperplane,
    sample_great_subsphere,
    sphere_data,
)
from .zeros import (
    EvalMap,
    FunctionSpace,
    build_eval_map,
    circle_manifold,
    empirical_zeros,
    fourier_space,
    linear_coords_space,
    predict_zeros,
    torus_manifold,
)

__version__ = "0.1.0"
