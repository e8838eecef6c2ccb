"""Constants."""

import math

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum (Python 3.11)."""

        __str__ = str.__str__
        __format__ = str.__format__

DOMAIN = "telegraph_spin"

TWO_PI = 2.0 * math.pi
ONE_OVER_E = math.exp(-1.0)

# Time is in microseconds, angular frequencies in rad/us, hyperfine input in MHz.
NS_PER_US = 1.0e3
UNIT_SCALE_US = {
    "ns": 1.0e-3,
    "us": 1.0,
    "µs": 1.0,
    "ms": 1.0e3,
    "s": 1.0e6,
}

EQUILIBRIUM = "eq"

CONDITION_THRESHOLD = 1.0e6
MAX_EXPM_DIM = 128
MAX_CYCLES = 10**7
MC_BLOCK_SIZE = 4096
FREE_DECAY_SAMPLES = 8001
ENVELOPE_SPAN = 8.0
DISCARD_RATE_BOUND = 0.2
MAX_TRACE_ATTEMPTS_FACTOR = 1000
HERMITICITY_TOLERANCE = 1.0e-10
RESYMMETRIZE_WARN = 1.0e-8
FIT_MAX_STARTS = 100
FIT_REFINED_STARTS = 5
FIT_MAX_ITERATIONS = 200
FIT_XTOL = 1.0e-10
CONFIDENCE_LEVEL = 0.95
AMBIGUOUS_PEAK_RATIO = 0.5
FLOAT_FORMAT = "{:.17g}"

DEFAULT_COMMON_MODE = (0.5, 0.25)
DEFAULT_FIELD_GAUSS = 424.0
DEFAULT_ZFS_MHZ = 2870.0
ELECTRON_GYRO_MHZ_PER_G = 2.8025
N14_GYRO_MHZ_PER_G = 3.077e-4
DEFAULT_PULSE_WIDTH_NS = 44.0
DEFAULT_TRAJECTORIES = 10000
DEFAULT_TIMES = 201
TRACE_POINTS = 101

ENV_THREADS = "TELEGRAPH_SPIN_THREADS"

CONF_ANALYSIS = "analysis"
CONF_DRIVE = "drive"
CONF_ENGINE = "engine"
CONF_FIELD_GAUSS = "field_gauss"
CONF_FILE = "file"
CONF_FIT = "fit"
CONF_FORMAT = "format"
CONF_HORIZON_US = "horizon_us"
CONF_HYPERFINE_MHZ = "hyperfine_mhz"
CONF_INIT = "init"
CONF_LEVELS = "levels"
CONF_LINDBLAD = "lindblad"
CONF_MACRO = "macro"
CONF_MI_PAIR = "mi_pair"
CONF_MODEL = "model"
CONF_N_TIMES = "n_times"
CONF_NAME = "name"
CONF_N_TRACES = "n_traces"
CONF_OUTPUT = "output"
CONF_PATH = "path"
CONF_PULSES = "pulses"
CONF_PULSE_WIDTH_NS = "pulse_width_ns"
CONF_SE_TOLERANCE = "se_tolerance"
CONF_SEED = "seed"
CONF_SEQUENCE = "sequence"
CONF_STOCHASTIC = "stochastic"
CONF_T1_TARGET_US = "t1_target_us"
CONF_T1_US = "t1_us"
CONF_T_MAX_US = "t_max_us"
CONF_TAU_LIST_NS = "tau_list_ns"
CONF_TAU_NS = "tau_ns"
CONF_TEXT = "text"
CONF_TIMES = "times"
CONF_TOLERANCE = "tolerance"
CONF_TRACES = "traces"
CONF_TRAJ = "traj"
CONF_VALUES = "values"
CONF_T_P_NS = "t_p_ns"
CONF_ZFS_MHZ = "zfs_mhz"

ERROR_CONFIG = "Invalid configuration at '%s': %s"
ERROR_CORRUPT_FILE = "Corrupt file '%s' at line %s: %s"
ERROR_DEFECTIVE_BLOCK = "Per-cycle block is defective (condition number %.3g)"
ERROR_FIT_DEGENERATE = "Degenerate data for model '%s': %s"
ERROR_FIT_NO_CONVERGENCE = "No convergence for model '%s' after %s starts"
ERROR_INIT_STATE = "Initial state '%s' is not valid for a %s-level fluctuator"
ERROR_INVALID_DENSITY = "Invalid density matrix: %s"
ERROR_LEVELS = "Fluctuator levels must be 2 or 3, got %s"
ERROR_MATRIX = "Matrix exponential input rejected: %s"
ERROR_NO_CROSSING = "Coherence stays above 1/e up to %s"
ERROR_NON_HERMITIAN = "Register Hamiltonian is not Hermitian (deviation %.3g)"
ERROR_SCHEDULE_INFEASIBLE = "Schedule infeasible: %s"
ERROR_SCHEDULE_MISMATCH = "Schedule duration %s exceeds trace horizon %s"
ERROR_SYNTAX = "Syntax error at column %s: %s"
ERROR_TOLERANCE = "Engines '%s' and '%s' deviate by %.3g (tolerance %.3g)"
ERROR_TRACE_ATTEMPTS = "Could not retain %s traces after %s attempts"
ERROR_TRANSITION = "Transition '%s' is not defined for this register"

WARN_AMBIGUOUS_PEAK = "Ambiguous oscillation frequency: peaks at %.6g and %.6g rad/us"
WARN_DISCARD_RATE = "Engineered ensemble discard rate %.1f%% exceeds %.0f%%"
WARN_RESYMMETRIZED = "Density matrix re-symmetrized, deviation %.3g"
WARN_SKIPPED_ENTRY = "Invalid entry skipped in file %s: %s"


class Drive(StrEnum):
    """Target of a pi pulse."""

    QUBIT = "qubit"
    DQ = "dq"
    SQ_PLUS = "sq+"
    SQ_MINUS = "sq-"


class Basis(StrEnum):
    """Probability-vector basis."""

    TWO_LEVEL = "two_level"
    THREE_LEVEL = "three_level"


class Engine(StrEnum):
    """Coherence engines."""

    ANALYTIC = "analytic"
    MC = "mc"
    LINDBLAD = "lindblad"
    ALL = "all"


class OutputFormat(StrEnum):
    """Output table formats."""

    CSV = "csv"
    JSON = "json"


class FitModel(StrEnum):
    """Fit models."""

    NONE = "none"
    EXPONENTIAL = "exp"
    OSCILLATING = "osc"
    ONE_OVER_E = "1/e"


class Severity(StrEnum):
    """Validation finding severity."""

    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


# Fluctuator levels swapped by a pi pulse; QUBIT pulses toggle the phase sign instead.
DRIVE_SWAPS = {
    Drive.DQ: (-1, 1),
    Drive.SQ_PLUS: (0, 1),
    Drive.SQ_MINUS: (0, -1),
}

LEVEL_SETS = {
    2: (-1, 1),
    3: (-1, 0, 1),
}
ENGINEERED_LEVELS = (-1, 0)

AXIS_DEGREES = {
    "x": 0,
    "y": 90,
    "-x": 180,
    "-y": 270,
}
MACROS = ("CPMG", "KDD", "KDDXY16")
XY16_AXES = ("x", "y", "x", "y", "y", "x", "y", "x")
