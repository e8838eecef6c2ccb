"""Command line: decay, sweep, traces, compare, fit and parse-seq."""

import argparse
import logging
import math
import sys

import numpy as np

from . import VERSION
from .analysis.compare import engine_deviations, joint_model_compare, standard_error_ratio
from .analysis.fitting import (
    fit_curve,
    fit_exponential,
    fit_osc_exponential,
    one_over_e_time,
)
from .classes.config import ALL_ENGINES, RunConfig
from .classes.results import DecayCurve, FitResult
from .classes.schedule import PulseSchedule
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
    CONF_N_TRACES,
    CONF_NAME,
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
    EQUILIBRIUM,
    ERROR_CONFIG,
    ERROR_TOLERANCE,
    LEVEL_SETS,
    NS_PER_US,
    TRACE_POINTS,
    Drive,
    Engine,
    FitModel,
    OutputFormat,
)
from .engines.analytic import (
    free_decay_curve,
    free_t2star,
    schedule_decay_curve,
    sweep_t2_vs_tau,
)
from .engines.lindblad import (
    build_liouvillian,
    initial_density,
    lindblad_dd,
    lindblad_free,
    register_hamiltonian,
)
from .engines.model import make_params
from .engines.stochastic import (
    engineered_traces,
    ensemble_hash,
    ensemble_population_difference,
    mc_coherence,
)
from .exceptions import (
    ConfigValidationError,
    FitConvergenceError,
    NoCrossingError,
    TelegraphSpinError,
)
from .helpers.config import resolve_config
from .helpers.filemgmt import (
    engine_path,
    fit_report_text,
    load_yaml_file,
    read_table,
    read_traces,
    table_text,
    write_fit_report,
    write_schedule,
    write_table,
    write_traces,
)
from .helpers.utils import crossing_time
from .schema import CURVE_SCHEMA
from .sequence.expand import expand, validate
from .sequence.parser import parse, print_ast

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_TOLERANCE = 3

DEFAULT_CURVES = (
    {CONF_NAME: "2lf", CONF_LEVELS: 2, CONF_DRIVE: str(Drive.QUBIT)},
    {CONF_NAME: "3lf_dq", CONF_LEVELS: 3, CONF_DRIVE: str(Drive.DQ)},
    {CONF_NAME: "3lf_sq", CONF_LEVELS: 3, CONF_DRIVE: str(Drive.SQ_PLUS)},
)
MACRO_TEXT = {
    "CPMG": "CPMG({})",
    "KDD": "KDD(0)^{}",
    "KDDXY16": "KDDXY16({})",
}
DEFAULT_T_MAX_FACTOR = 3.0


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from err


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration or a previous output")
    common.add_argument("--engine", choices=[str(item) for item in Engine])
    common.add_argument("--levels", type=int, choices=sorted(LEVEL_SETS))
    common.add_argument("--t1", type=float, help="fluctuator T1 (us)")
    common.add_argument("--hyperfine-mhz", type=float)
    common.add_argument("--init", help="initial level: -1, 0, +1 or eq")
    common.add_argument("--tau-ns", type=float)
    common.add_argument("--pulses", type=int, help="macro count: CPMG pulses, KDD blocks")
    common.add_argument("--macro", choices=list(MACRO_TEXT))
    common.add_argument("--pulse-width-ns", type=float)
    common.add_argument("--drive", choices=[str(item) for item in Drive])
    common.add_argument("--seq", help="sequence text, e.g. 'KDD(0)^4'")
    common.add_argument("--traj", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--t-max-us", type=float)
    common.add_argument("--n-times", type=int)
    common.add_argument("--fit", choices=[str(item) for item in FitModel])
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=[str(item) for item in OutputFormat])
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="telegraph_spin", description="RTN decoherence of a nuclear-spin qubit."
    )
    parser.add_argument("--version", action="version", version=VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    decay = commands.add_parser("decay", parents=[common], help="coherence decay curves")
    decay.set_defaults(handler=cmd_decay)

    sweep = commands.add_parser("sweep", parents=[common], help="effective T2 versus tau")
    sweep.add_argument("--tau-list-ns", type=_float_list)
    sweep.add_argument("--curves", help="YAML list of curves to sweep")
    sweep.set_defaults(handler=cmd_sweep)

    traces = commands.add_parser("traces", parents=[common], help="engineered T1 traces")
    traces.add_argument("--traces-file", help="JSON-lines ensemble file")
    traces.add_argument("--replay", action="store_true", help="load instead of generating")
    traces.add_argument("--t1-target-us", type=float)
    traces.add_argument("--n-traces", type=int)
    traces.add_argument("--horizon-us", type=float)
    traces.add_argument("--t-p-ns", type=float)
    traces.set_defaults(handler=cmd_traces)

    compare = commands.add_parser("compare", parents=[common], help="cross-engine check")
    compare.add_argument("--engines", help="comma-separated engines (default: all)")
    compare.add_argument("--tolerance", type=float)
    compare.set_defaults(handler=cmd_compare)

    fit = commands.add_parser("fit", parents=[common], help="fit a decay table")
    fit.add_argument("table", help="CSV or JSON table with a t_us column")
    fit.add_argument("--model", default=str(FitModel.EXPONENTIAL))
    fit.add_argument("--column", help="value column (default: abs, or re for osc)")
    fit.add_argument("--t2-table", help="second table for the joint T1/T2* comparison")
    fit.set_defaults(handler=cmd_fit)

    parse_seq = commands.add_parser("parse-seq", parents=[common], help="parse a sequence")
    parse_seq.add_argument("text", nargs="?", help="sequence text (default: --seq)")
    parse_seq.add_argument("--export", help="write the expanded schedule to this path")
    parse_seq.set_defaults(handler=cmd_parse_seq)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    """Return the flag values as configuration sections."""

    def value(name):
        return getattr(args, name, None)

    return {
        CONF_ENGINE: value("engine"),
        CONF_MODEL: {
            CONF_LEVELS: value("levels"),
            CONF_T1_US: value("t1"),
            CONF_HYPERFINE_MHZ: value("hyperfine_mhz"),
            CONF_INIT: value("init"),
        },
        CONF_SEQUENCE: {
            CONF_TEXT: value("seq"),
            CONF_MACRO: value("macro"),
            CONF_PULSES: value("pulses"),
            CONF_TAU_NS: value("tau_ns"),
            CONF_TAU_LIST_NS: value("tau_list_ns"),
            CONF_PULSE_WIDTH_NS: value("pulse_width_ns"),
            CONF_DRIVE: value("drive"),
        },
        CONF_STOCHASTIC: {CONF_TRAJ: value("traj"), CONF_SEED: value("seed")},
        CONF_ANALYSIS: {CONF_FIT: value("fit"), CONF_TOLERANCE: value("tolerance")},
        CONF_OUTPUT: {CONF_PATH: value("out"), CONF_FORMAT: value("format")},
        CONF_TIMES: {CONF_T_MAX_US: value("t_max_us"), CONF_N_TIMES: value("n_times")},
        CONF_TRACES: {
            CONF_FILE: value("traces_file"),
            CONF_T1_TARGET_US: value("t1_target_us"),
            CONF_N_TRACES: value("n_traces"),
            CONF_HORIZON_US: value("horizon_us"),
            CONF_T_P_NS: value("t_p_ns"),
        },
    }


def _params(config: RunConfig):
    return make_params(config.levels, config.t1, config.hyperfine_mhz)


def _sequence_text(config: RunConfig) -> str | None:
    sequence = config.section(CONF_SEQUENCE)
    if sequence[CONF_TEXT]:
        return sequence[CONF_TEXT]
    if sequence[CONF_PULSES]:
        return MACRO_TEXT[sequence[CONF_MACRO]].format(sequence[CONF_PULSES])
    return None


def _schedule(config: RunConfig, text: str | None = None) -> PulseSchedule | None:
    text = text or _sequence_text(config)
    if text is None:
        return None
    sequence = config.section(CONF_SEQUENCE)
    return expand(
        parse(text),
        sequence[CONF_TAU_NS] / NS_PER_US,
        sequence[CONF_PULSE_WIDTH_NS] / NS_PER_US,
        sequence[CONF_DRIVE],
    )


def _times(config: RunConfig, params, schedule: PulseSchedule | None) -> np.ndarray:
    section = config.section(CONF_TIMES)
    if section[CONF_VALUES] is not None:
        return np.array(section[CONF_VALUES], dtype=float)
    if schedule is not None and schedule.n_pulses:
        return np.concatenate(([0.0], schedule.cycle_ends()))
    t_max = section[CONF_T_MAX_US]
    if t_max is None:
        try:
            t_max = DEFAULT_T_MAX_FACTOR * free_t2star(params, config.init_state)
        except NoCrossingError:
            t_max = DEFAULT_T_MAX_FACTOR * config.levels * config.t1
    return np.linspace(0.0, t_max, section[CONF_N_TIMES])


def engine_curve(
    engine: Engine, config: RunConfig, schedule: PulseSchedule | None, times
) -> DecayCurve:
    """Return the decay curve of one engine on the given time grid."""
    params = _params(config)
    init = config.init_state
    if engine == Engine.ANALYTIC:
        if schedule is None:
            return free_decay_curve(params, init, times)
        return schedule_decay_curve(params, init, schedule, times)
    if engine == Engine.MC:
        stochastic = config.section(CONF_STOCHASTIC)
        result = mc_coherence(
            params,
            init,
            schedule or PulseSchedule.free(float(times[-1])),
            stochastic[CONF_TRAJ],
            stochastic[CONF_SEED],
            times,
        )
        return result.curve({"levels": params.levels, "gamma": params.gamma, "v": params.v})
    lindblad = config.section(CONF_LINDBLAD)
    register = register_hamiltonian(
        config.levels,
        config.hyperfine_mhz,
        lindblad[CONF_ZFS_MHZ],
        lindblad[CONF_FIELD_GAUSS],
    )
    liouvillian = build_liouvillian(register, config.t1)
    pair = tuple(lindblad[CONF_MI_PAIR])
    rho0 = initial_density(register, init, pair)
    if schedule is None:
        return lindblad_free(liouvillian, rho0, times, pair)
    return lindblad_dd(liouvillian, rho0, schedule, pair, times)


def _meta(config: RunConfig, command: str, **extra) -> dict:
    return {"version": VERSION, "config": config.as_dict(), "command": command, **extra}


def _emit(config: RunConfig, table: dict, meta: dict, path=None):
    output = config.section(CONF_OUTPUT)
    path = path or output[CONF_PATH]
    if path is None:
        sys.stdout.write(table_text(table, meta, output[CONF_FORMAT]))
    else:
        write_table(path, table, meta, output[CONF_FORMAT])


def _attach_fit(curve: DecayCurve, model: str) -> DecayCurve:
    if FitModel(model) == FitModel.NONE:
        return curve
    try:
        return curve.with_fit(fit_curve(curve, model))
    except (FitConvergenceError, NoCrossingError) as err:
        _LOGGER.warning("Fit '%s' failed for engine %s: %s", model, curve.engine, err)
        return curve


def cmd_decay(args, parser, config: RunConfig) -> int:
    """Write one decay table per selected engine."""
    schedule = _schedule(config)
    times = _times(config, _params(config), schedule)
    engines = config.engines
    path = config.section(CONF_OUTPUT)[CONF_PATH]
    for engine in engines:
        curve = _attach_fit(
            engine_curve(engine, config, schedule, times),
            config.section(CONF_ANALYSIS)[CONF_FIT],
        )
        meta = _meta(
            config,
            "decay",
            engine=str(engine),
            fits=[fit.as_dict() for fit in curve.fits],
        )
        target = engine_path(path, engine) if path and len(engines) > 1 else path
        _emit(config, curve.table(), meta, target)
    return EXIT_OK


def _curve_init(config: RunConfig, levels: int):
    init = config.init_state
    if init == EQUILIBRIUM or init in LEVEL_SETS[levels]:
        return init
    return -1


def _mc_t2(config: RunConfig, params, drive: str, init, tau: float, t2: float) -> float | None:
    """Return the Monte Carlo T2 under CPMG at tau, sampled at every cycle end."""
    n_pulses = max(1, math.ceil(DEFAULT_T_MAX_FACTOR * t2 / tau))
    schedule = expand(parse(f"CPMG({n_pulses})"), tau, 0.0, drive)
    times = np.concatenate(([0.0], schedule.cycle_ends()))
    result = mc_coherence(
        params, init, schedule, config.section(CONF_STOCHASTIC)[CONF_TRAJ], config.seed, times
    )
    try:
        return crossing_time(times, np.abs(result.mean))
    except NoCrossingError:
        return None


def cmd_sweep(args, parser, config: RunConfig) -> int:
    """Write effective T2 versus tau for each theory curve."""
    sequence = config.section(CONF_SEQUENCE)
    tau_list_ns = sequence[CONF_TAU_LIST_NS] or [sequence[CONF_TAU_NS]]
    taus = [tau / NS_PER_US for tau in tau_list_ns]
    curves = load_yaml_file(args.curves, CURVE_SCHEMA) if args.curves else []
    curves = curves or [CURVE_SCHEMA(dict(curve)) for curve in DEFAULT_CURVES]
    table = {"tau_ns": np.array(tau_list_ns, dtype=float)}
    free = {}
    for curve in curves:
        levels = curve[CONF_LEVELS]
        params = make_params(
            levels,
            curve[CONF_T1_US] or config.t1,
            curve[CONF_HYPERFINE_MHZ]
            if curve[CONF_HYPERFINE_MHZ] is not None
            else config.hyperfine_mhz,
        )
        init = _curve_init(config, levels)
        rows = sweep_t2_vs_tau(params, curve[CONF_DRIVE], taus, init)
        table[f"{curve[CONF_NAME]}_t2_us"] = [row.t2 for row in rows]
        table[f"{curve[CONF_NAME]}_flag"] = [row.flag for row in rows]
        if Engine.MC in config.engines:
            table[f"{curve[CONF_NAME]}_mc_t2_us"] = [
                None
                if row.t2 is None
                else _mc_t2(config, params, curve[CONF_DRIVE], init, row.tau, row.t2)
                for row in rows
            ]
        try:
            free[curve[CONF_NAME]] = free_t2star(params, init)
        except NoCrossingError:
            free[curve[CONF_NAME]] = None
    _emit(config, table, _meta(config, "sweep", free_t2star_us=free))
    return EXIT_OK


def cmd_traces(args, parser, config: RunConfig) -> int:
    """Generate or replay an engineered ensemble and fit its T1."""
    traces = config.section(CONF_TRACES)
    path = traces[CONF_FILE]
    if args.replay:
        if path is None:
            parser.error("--replay needs --traces-file")
        ensemble = read_traces(path)
    else:
        if config.seed is None:
            raise ConfigValidationError(f"{CONF_STOCHASTIC}.{CONF_SEED}", "traces need a seed")
        ensemble = engineered_traces(
            traces[CONF_T1_TARGET_US],
            traces[CONF_N_TRACES],
            traces[CONF_HORIZON_US],
            traces[CONF_T_P_NS] / NS_PER_US,
            _schedule(config),
            config.seed,
        )
        if path is not None:
            write_traces(path, ensemble)
    times = np.linspace(0.0, ensemble.horizon, TRACE_POINTS)
    difference = ensemble_population_difference(ensemble, times)
    fits = []
    try:
        fits.append(fit_exponential((times, difference)))
    except FitConvergenceError as err:
        _LOGGER.warning("T1 fit failed: %s", err)
    _LOGGER.info(
        "Ensemble %s: %s traces, %s discarded, %s merged",
        path or "<memory>",
        ensemble.n_traces,
        ensemble.n_discarded,
        ensemble.n_merged,
    )
    meta = _meta(
        config,
        "traces",
        ensemble=ensemble.header(),
        hash=ensemble_hash(ensemble),
        discard_rate=ensemble.discard_rate,
        fits=[fit.as_dict() for fit in fits],
    )
    _emit(config, {"t_us": times, "population_difference": difference}, meta)
    return EXIT_OK


def _compare_engines(args, parser, config: RunConfig) -> tuple[Engine, ...]:
    if args.engines:
        engines = []
        for name in args.engines.split(","):
            try:
                engine = Engine(name.strip())
            except ValueError:
                parser.error(f"unknown engine '{name}'")
            engines.extend(ALL_ENGINES if engine == Engine.ALL else (engine,))
        engines = tuple(dict.fromkeys(engines))
    elif config.engine == Engine.ANALYTIC and not args.engine:
        engines = ALL_ENGINES
    else:
        engines = config.engines
    if len(engines) < 2:
        parser.error("compare needs at least two engines")
    if Engine.MC in engines and config.seed is None:
        parser.error("the mc engine needs --seed")
    return engines


def cmd_compare(args, parser, config: RunConfig) -> int:
    """Report the max deviation between engine curves."""
    engines = _compare_engines(args, parser, config)
    schedule = _schedule(config)
    times = _times(config, _params(config), schedule)
    curves, failures = {}, {}
    for engine in engines:
        try:
            curves[str(engine)] = engine_curve(engine, config, schedule, times)
        except TelegraphSpinError as err:
            _LOGGER.error("Engine %s failed: %s", engine, err)
            failures[str(engine)] = str(err)
    analysis = config.section(CONF_ANALYSIS)
    pairs, deviations, se_ratios, status = [], [], [], []
    exceeded = False
    if len(curves) >= 2:
        for (first, second), deviation in engine_deviations(curves).items():
            ratio = None
            if Engine.MC in (first, second):
                reference, estimate = (
                    (curves[second], curves[first])
                    if first == Engine.MC
                    else (curves[first], curves[second])
                )
                # mc agreement is judged in standard errors
                ratio = standard_error_ratio(reference, estimate)
                ok = ratio <= analysis[CONF_SE_TOLERANCE]
                measured, limit = ratio, analysis[CONF_SE_TOLERANCE]
            else:
                ok = deviation <= analysis[CONF_TOLERANCE]
                measured, limit = deviation, analysis[CONF_TOLERANCE]
            if not ok:
                exceeded = True
                _LOGGER.error(ERROR_TOLERANCE, first, second, measured, limit)
            pairs.append(f"{first}-{second}")
            deviations.append(deviation)
            se_ratios.append(ratio)
            status.append("ok" if ok else "exceeded")
    for engine, message in failures.items():
        pairs.append(engine)
        deviations.append(None)
        se_ratios.append(None)
        status.append(f"error: {message}")
    table = {
        "pair": pairs,
        "max_abs_dev": deviations,
        "se_ratio": se_ratios,
        "status": status,
    }
    _emit(config, table, _meta(config, "compare", engines=[str(e) for e in engines]))
    if failures:
        return EXIT_ERROR
    return EXIT_TOLERANCE if exceeded else EXIT_OK


def _column(columns: dict, name: str, path) -> np.ndarray:
    if name not in columns:
        raise ConfigValidationError(str(path), f"no column '{name}'")
    return np.array(columns[name], dtype=float)


def cmd_fit(args, parser, config: RunConfig) -> int:
    """Fit a decay table, or two tables with the joint T1/T2* models."""
    _, columns = read_table(args.table)
    times = _column(columns, "t_us", args.table)
    if args.t2_table:
        _, second = read_table(args.t2_table)
        rows = joint_model_compare(
            (times, _column(columns, args.column or "population_difference", args.table)),
            (_column(second, "t_us", args.t2_table), _column(second, "abs", args.t2_table)),
        )
        table = {
            "model": [row.model_id for row in rows],
            "ratio": [row.ratio for row in rows],
            "fitted_ratio": [row.fitted_ratio for row in rows],
            "ratio_ci": [row.ratio_ci for row in rows],
            "t1_us": [row.t1 for row in rows],
            "t1_ci": [row.t1_ci for row in rows],
            "sigma_t1": [row.sigma_t1 for row in rows],
            "mse": [row.mse for row in rows],
            "converged": [row.converged for row in rows],
        }
        _emit(config, table, _meta(config, "fit", tables=[args.table, args.t2_table]))
        return EXIT_OK
    try:
        model = FitModel(args.model)
    except ValueError:
        parser.error(f"unknown model '{args.model}'")
    if model == FitModel.NONE:
        parser.error("choose a fit model")
    default_column = "re" if model == FitModel.OSCILLATING else "abs"
    values = _column(columns, args.column or default_column, args.table)
    points = (times, values)
    if model == FitModel.EXPONENTIAL:
        fit = fit_exponential(points)
    elif model == FitModel.OSCILLATING:
        fit = fit_osc_exponential(points)
    else:
        fit = FitResult(
            model=str(model),
            params={"t": one_over_e_time(points)},
            ci={},
            mse=0.0,
            converged=True,
            n_points=int(times.size),
        )
    path = config.section(CONF_OUTPUT)[CONF_PATH]
    if path is None:
        sys.stdout.write(fit_report_text([fit]))
    else:
        write_fit_report(path, [fit])
    return EXIT_OK


def cmd_parse_seq(args, parser, config: RunConfig) -> int:
    """Print the canonical form, pulse count and validation findings."""
    text = args.text or config.section(CONF_SEQUENCE)[CONF_TEXT]
    if not text:
        parser.error("give a sequence as an argument or with --seq")
    ast = parse(text)
    schedule = _schedule(config, text)
    report = validate(schedule, config.hyperfine_mhz)
    lines = [
        f"canonical: {print_ast(ast)}",
        f"pulses: {schedule.n_pulses}",
        f"cycle_pulses: {schedule.cycle_pulses}",
        f"duration_us: {schedule.total_duration!r}",
    ]
    lines.extend(f"{item.severity}: {item.code}: {item.message}" for item in report.findings)
    sys.stdout.write("\n".join(lines) + "\n")
    if args.export:
        write_schedule(args.export, schedule)
    return EXIT_OK if report.ok else EXIT_ERROR


def main(argv=None) -> int:
    """Run the command line."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = resolve_config(args.config, _overrides(args))
        return args.handler(args, parser, config)
    except ConfigValidationError as err:
        print(ERROR_CONFIG % (err.path, err.message), file=sys.stderr)
    except TelegraphSpinError as err:
        print(f"error: {err}", file=sys.stderr)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_ERROR
