"""Dispersion analysis of open multilayered coaxial waveguides.

The library models a stack of concentric conductive and dielectric
layers surrounded by an unbounded exterior. It finds the complex axial
wavenumbers of the leaky modes, the characteristic impedance, the split
of the conductor current into modal and branch-cut contributions, and
the shape of a voltage pulse after propagation.

Typical use::

    from opencoax import LayerStack, Layer, spectral_context, find_poles
    from opencoax.modes import SearchRegion

    stack = LayerStack(layers=[...], exterior_eps_r=1.0)
    ctx = spectral_context(stack, 150.0)
    poles = find_poles(ctx, SearchRegion(...))

The ``opencoax`` console script drives the same machinery from TOML run
configurations; see the README.
"""

from .bessel import eval_scaled, neumann_c_smooth, neumann_regular_parts, wronskian_defect
from .constants import CONSTANTS, C0, EPS0, ETA0, EULER_GAMMA, MU0
from .dispersion import (
    BranchCutCoefficients,
    branch_cut_coefficients,
    det_continued,
    det_dispersion,
    eval_F,
    eval_q,
    recurse_determinants,
    transfer_coefficients,
)
from .errors import (
    ConfigError,
    ContinuationBreakError,
    ContourError,
    ContourLeakError,
    ContourTooCloseError,
    CutCrossedError,
    DegenerateExcitationError,
    DomainError,
    GridMismatchError,
    IllConditionedError,
    ModelError,
    NoConvergenceError,
    NonFiniteError,
    NotSimpleZeroError,
    OpenCoaxError,
    PoleBetweenContoursError,
)
from .impedance import ImpedanceResult, characteristic_impedance, modal_field_coefficients
from .model import Layer, LayerStack, SpectralContext, spectral_context
from .modes import (
    ModeTrace,
    PoleResult,
    SearchRegion,
    count_zeros,
    find_poles,
    locate_pole,
    trace_mode,
)
from .spectral import (
    CalibrationResult,
    CurrentContribution,
    branch_asymptotic,
    branch_current,
    branch_upper_bound,
    calibrate,
    current_contributions,
    deformation_pole_count,
    modal_current,
    residue_strength,
    rest_term_bound,
)
from .sweep import SweepPlan, SweepResult, extrapolate_low_bins, run_sweep
from .timedomain import (
    FrequencyGrid,
    PulseResult,
    one_sided_window,
    raised_cosine_pulse,
    synthesize_pulse,
    transfer_voltage,
)

__version__ = "0.1.0"

__all__ = [
    "BranchCutCoefficients",
    "CONSTANTS",
    "C0",
    "CalibrationResult",
    "ConfigError",
    "ContinuationBreakError",
    "ContourError",
    "ContourLeakError",
    "ContourTooCloseError",
    "CurrentContribution",
    "CutCrossedError",
    "DegenerateExcitationError",
    "DomainError",
    "EPS0",
    "ETA0",
    "EULER_GAMMA",
    "FrequencyGrid",
    "GridMismatchError",
    "IllConditionedError",
    "ImpedanceResult",
    "Layer",
    "LayerStack",
    "MU0",
    "ModeTrace",
    "ModelError",
    "NoConvergenceError",
    "NonFiniteError",
    "NotSimpleZeroError",
    "OpenCoaxError",
    "PoleBetweenContoursError",
    "PoleResult",
    "PulseResult",
    "SearchRegion",
    "SpectralContext",
    "SweepPlan",
    "SweepResult",
    "branch_asymptotic",
    "branch_current",
    "branch_cut_coefficients",
    "branch_upper_bound",
    "calibrate",
    "characteristic_impedance",
    "count_zeros",
    "current_contributions",
    "deformation_pole_count",
    "det_continued",
    "det_dispersion",
    "eval_F",
    "eval_q",
    "eval_scaled",
    "extrapolate_low_bins",
    "find_poles",
    "locate_pole",
    "modal_current",
    "modal_field_coefficients",
    "neumann_c_smooth",
    "neumann_regular_parts",
    "one_sided_window",
    "raised_cosine_pulse",
    "recurse_determinants",
    "residue_strength",
    "rest_term_bound",
    "run_sweep",
    "spectral_context",
    "synthesize_pulse",
    "trace_mode",
    "transfer_coefficients",
    "transfer_voltage",
    "wronskian_defect",
]
