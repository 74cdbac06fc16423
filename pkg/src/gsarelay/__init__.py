"""Generalized signal alignment for arbitrary MIMO two-way relay channels."""

from .errors import (
    DegenerateChannelError,
    GsaError,
    InfeasibleAntennasError,
    InfeasibleRequestError,
    InvalidInputError,
    NotRepresentableError,
    SingularMatrixError,
)
from .matcore import DEFAULT_TOL, Tolerance
from .scenario import (
    ChannelSet,
    EffectiveScenario,
    Scenario,
    effective_antennas,
    preset,
    sample_channels,
    validate_switch_matrix,
)
from .dof import FeasibilityReport, analyze, min_relay_antennas, theorem1_threshold
from .gsa import GsaDesign, build_pair_plan, design, extend_symbols, verify_design
from .sim import SimConfig, SimResult, run_noiseless, run_noisy

__version__ = "0.1.0"
