from .spec import (
    EnsembleSpec,
    Gaussian,
    MCStat,
    MultiPenner,
    PolynomialCouplings,
    PotentialSpec,
    SampleBatch,
)
from .sampler import sample_gbeta, tridiag_draws
from .quadrature import ensemble_average, power_sum_moment
from .identities import (
    IdentityResidual,
    bpz_ode_residual,
    confluent_bpz_residual,
    loop_identity_residual,
    virasoro_quadrature_residual,
    virasoro_residual,
)

__all__ = [
    "EnsembleSpec",
    "Gaussian",
    "MCStat",
    "MultiPenner",
    "PolynomialCouplings",
    "PotentialSpec",
    "SampleBatch",
    "sample_gbeta",
    "tridiag_draws",
    "ensemble_average",
    "power_sum_moment",
    "virasoro_residual",
    "virasoro_quadrature_residual",
    "loop_identity_residual",
    "IdentityResidual",
    "bpz_ode_residual",
    "confluent_bpz_residual",
]
