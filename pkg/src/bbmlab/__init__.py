"""bbmlab: a numerical laboratory for nonlocal difference-quotient functionals
on weighted intervals and planar grids, with exact fat-Cantor constructions and
empirical audits of the structural kernel conditions."""

from .space import (
    Space,
    ResolutionError,
    build_weighted_interval,
    build_lebesgue_interval,
    build_planar_grid,
    ball_measure,
    neighbors_within,
    audit_doubling,
    audit_upper_mass_bound,
    audit_ahlfors,
    MassBoundFit,
)
from .funcspace import (
    SampledFunction,
    EnergyValue,
    sample_function,
    energy,
    weight_envelope,
    coarea_tv,
    lip_field,
    restricted_maximal,
    audit_telescope,
)
from .mollifier import MollifierSpec, make_mollifier, kernel_value, audit_minorize, dyadic_majorant
from .phi import PhiSpec, make_phi, phi_eval, audit_phi
from .functional import FunctionalValue, eval_I, eval_Psi, eval_Phi, eval_Lambda, kernel_pair_mass
from .approx import Cover, PartitionOfUnity, build_cover, build_pou, discrete_convolution, lip_chain_report
from .cantor import (
    CantorModel,
    build_cantor_model,
    cantor_space,
    cantor_function,
    bump_f0,
    audit_cantor,
    limit_tv_report,
)
from .harness import (
    ConvergenceSeries,
    BoundCheck,
    run_sweep,
    estimate_limit,
    check_bounds,
    emit_report,
    PRESETS,
)

__version__ = "0.1.0"
