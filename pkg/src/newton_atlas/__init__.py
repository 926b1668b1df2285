"""Newton maps of entire functions ``p * exp(q)``: recognition, fixed points,
basins of attraction and invariant accesses to infinity."""
from .dynamics import (
    UNDECIDED,
    AccessCensus,
    AccessTrace,
    BasinCensus,
    BasinRaster,
    ImmediateBasin,
    IterationParams,
    Region,
    Verdict,
    access_census,
    classify_point,
    classify_points,
    critical_points,
    forward_invariance_defect,
    immediate_basins,
    raster_basins,
    trace_dynamical_access,
)
from .errors import *  # noqa: F401,F403
from .newton import (
    NewtonCertificate,
    NotNewtonMap,
    classify_infinity,
    construct,
    detect,
    is_newton_map,
    petal_directions,
    validate_multipliers,
)
from .polycore import Polynomial, RootSet, gcd_approx, roots
from .ratmap import INFINITY, RationalMap, fixed_points, normalize

__version__ = "0.1.0"
