"""Exact simulation and analytic verification of extremal shot noise fields.

An extremal shot noise is the random field M(y) = sup { m * h(y - x) } over
the points (x, m) of a Poisson process with intensity lam * dx * G(dm). This
package evaluates its laws in closed/quadrature form, samples it exactly on
compact windows, and checks the heavy-tail limit behaviour against analytic
oracles.
"""

from .errors import (
    ContractViolation,
    DivergentIntegral,
    InexactSampleError,
    NotApplicableError,
    WindowTooSmallError,
)
from .shape import (
    Box,
    GaussianDiag,
    IndicatorBox,
    LogDecay,
    PathLossHard,
    PathLossSmooth,
    RegularityReport,
    ShapeSpec,
    shape_from_config,
)
from .weight import (
    Burr,
    Exponential,
    Pareto,
    PotterCheck,
    PowerMeasure,
    SumWeight,
    WeightSpec,
    potter_bound_check,
    weight_from_config,
)

__version__ = "0.1.0"
