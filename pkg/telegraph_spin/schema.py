"""Schema for telegraph_spin run configurations."""

import voluptuous as vol

from .const import (
    CONF_ANALYSIS,
    CONF_DRIVE,
    CONF_ENGINE,
    CONF_FIELD_GAUSS,
    CONF_FILE,
    CONF_FIT,
    CONF_FORMAT,
    CONF_HORIZON_US,
    CONF_HYPERFINE_MHZ,
    CONF_INIT,
    CONF_LEVELS,
    CONF_LINDBLAD,
    CONF_MACRO,
    CONF_MI_PAIR,
    CONF_MODEL,
    CONF_N_TIMES,
    CONF_NAME,
    CONF_N_TRACES,
    CONF_OUTPUT,
    CONF_PATH,
    CONF_PULSE_WIDTH_NS,
    CONF_PULSES,
    CONF_SE_TOLERANCE,
    CONF_SEED,
    CONF_SEQUENCE,
    CONF_STOCHASTIC,
    CONF_T1_TARGET_US,
    CONF_T1_US,
    CONF_T_MAX_US,
    CONF_T_P_NS,
    CONF_TAU_LIST_NS,
    CONF_TAU_NS,
    CONF_TEXT,
    CONF_TIMES,
    CONF_TOLERANCE,
    CONF_TRACES,
    CONF_TRAJ,
    CONF_VALUES,
    CONF_ZFS_MHZ,
    DEFAULT_FIELD_GAUSS,
    DEFAULT_PULSE_WIDTH_NS,
    DEFAULT_TIMES,
    DEFAULT_TRAJECTORIES,
    DEFAULT_ZFS_MHZ,
    EQUILIBRIUM,
    MACROS,
    Drive,
    Engine,
    FitModel,
    OutputFormat,
)


def init_state(value):
    """Validate an initial fluctuator state: a level in -1, 0, +1 or 'eq'."""
    if isinstance(value, str):
        value = value.strip()
        if value == EQUILIBRIUM:
            return value
        try:
            value = int(value)
        except ValueError as err:
            raise vol.Invalid(f"expected -1, 0, +1 or '{EQUILIBRIUM}'") from err
    if isinstance(value, bool) or not isinstance(value, int) or value not in (-1, 0, 1):
        raise vol.Invalid(f"expected -1, 0, +1 or '{EQUILIBRIUM}'")
    return value


def increasing(values):
    """Validate a non-empty, strictly increasing list of non-negative times."""
    if not values:
        raise vol.Invalid("time grid is empty")
    if values[0] < 0:
        raise vol.Invalid("times must be >= 0")
    if any(later <= earlier for earlier, later in zip(values, values[1:], strict=False)):
        raise vol.Invalid("times must be strictly increasing")
    return values


def mi_pair(values):
    """Validate two distinct nuclear levels."""
    if len(values) != 2 or values[0] == values[1]:
        raise vol.Invalid("expected two distinct nuclear levels")
    return values


_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
_NON_NEGATIVE = vol.All(vol.Coerce(float), vol.Range(min=0))

MODEL_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_LEVELS, default=2): vol.All(vol.Coerce(int), vol.In([2, 3])),
        vol.Optional(CONF_T1_US, default=10.0): _POSITIVE,
        vol.Optional(CONF_HYPERFINE_MHZ, default=2.16): _NON_NEGATIVE,
        vol.Optional(CONF_INIT, default=-1): init_state,
    }
)

SEQUENCE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TEXT, default=None): vol.Any(None, str),
        vol.Optional(CONF_MACRO, default="CPMG"): vol.In(MACROS),
        vol.Optional(CONF_PULSES, default=0): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_TAU_NS, default=200.0): _POSITIVE,
        vol.Optional(CONF_TAU_LIST_NS, default=list): [_POSITIVE],
        vol.Optional(CONF_PULSE_WIDTH_NS, default=0.0): _NON_NEGATIVE,
        vol.Optional(CONF_DRIVE, default=str(Drive.QUBIT)): vol.All(
            vol.Coerce(Drive), vol.Coerce(str)
        ),
    }
)

STOCHASTIC_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TRAJ, default=DEFAULT_TRAJECTORIES): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_SEED, default=None): vol.Any(
            None, vol.All(vol.Coerce(int), vol.Range(min=0))
        ),
    }
)

LINDBLAD_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ZFS_MHZ, default=DEFAULT_ZFS_MHZ): vol.Coerce(float),
        vol.Optional(CONF_FIELD_GAUSS, default=DEFAULT_FIELD_GAUSS): vol.Coerce(float),
        vol.Optional(CONF_MI_PAIR, default=lambda: [0, 1]): vol.All(
            [vol.All(vol.Coerce(int), vol.In([-1, 0, 1]))], mi_pair
        ),
    }
)

ANALYSIS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_FIT, default=str(FitModel.NONE)): vol.All(
            vol.Coerce(FitModel), vol.Coerce(str)
        ),
        vol.Optional(CONF_TOLERANCE, default=1.0e-3): _POSITIVE,
        vol.Optional(CONF_SE_TOLERANCE, default=3.0): _POSITIVE,
    }
)

OUTPUT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PATH, default=None): vol.Any(None, str),
        vol.Optional(CONF_FORMAT, default=str(OutputFormat.CSV)): vol.All(
            vol.Coerce(OutputFormat), vol.Coerce(str)
        ),
    }
)

TIMES_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_T_MAX_US, default=None): vol.Any(None, _POSITIVE),
        vol.Optional(CONF_N_TIMES, default=DEFAULT_TIMES): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional(CONF_VALUES, default=None): vol.Any(
            None, vol.All([_NON_NEGATIVE], increasing)
        ),
    }
)

TRACES_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_T1_TARGET_US, default=10.0): _POSITIVE,
        vol.Optional(CONF_N_TRACES, default=200): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_HORIZON_US, default=60.0): _POSITIVE,
        vol.Optional(CONF_T_P_NS, default=DEFAULT_PULSE_WIDTH_NS): _NON_NEGATIVE,
        vol.Optional(CONF_FILE, default=None): vol.Any(None, str),
    }
)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ENGINE, default=str(Engine.ANALYTIC)): vol.All(
            vol.Coerce(Engine), vol.Coerce(str)
        ),
        vol.Optional(CONF_MODEL, default=dict): MODEL_SCHEMA,
        vol.Optional(CONF_SEQUENCE, default=dict): SEQUENCE_SCHEMA,
        vol.Optional(CONF_STOCHASTIC, default=dict): STOCHASTIC_SCHEMA,
        vol.Optional(CONF_LINDBLAD, default=dict): LINDBLAD_SCHEMA,
        vol.Optional(CONF_ANALYSIS, default=dict): ANALYSIS_SCHEMA,
        vol.Optional(CONF_OUTPUT, default=dict): OUTPUT_SCHEMA,
        vol.Optional(CONF_TIMES, default=dict): TIMES_SCHEMA,
        vol.Optional(CONF_TRACES, default=dict): TRACES_SCHEMA,
    }
)

CURVE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_NAME): vol.All(str, vol.Length(min=1)),
        vol.Optional(CONF_LEVELS, default=2): vol.All(vol.Coerce(int), vol.In([2, 3])),
        vol.Optional(CONF_DRIVE, default=str(Drive.QUBIT)): vol.All(
            vol.Coerce(Drive), vol.Coerce(str)
        ),
        vol.Optional(CONF_T1_US, default=None): vol.Any(None, _POSITIVE),
        vol.Optional(CONF_HYPERFINE_MHZ, default=None): vol.Any(None, _NON_NEGATIVE),
    }
)
