"""Command-line experiment runner.

Each subcommand writes CSV artifacts plus ``manifest.json`` into ``--out``.
Numbers are written with 17 significant digits so they round-trip exactly,
and nothing run-dependent (timestamps, paths, worker counts) enters any
artifact, so reruns with the same inputs are byte-identical.

Exit status: 0 success, 1 configuration error, 2 numeric or infeasibility
error, 3 validation failure (some ``|z| > 3``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .acqstats import acq_time_cdf, expected_time
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FsoAcqError,
    GeometricInfeasibilityError,
    NoFeasiblePointError,
    NonTerminationError,
    ParameterError,
)
from .model import NormalizationMode, SystemParams, load_config, params_to_config
from .optimizer import (
    default_alpha_grid,
    optimize_alpha_cdf,
    optimize_alpha_mean_time,
    optimize_n0,
    sweep_alpha,
)
from .simulator import RNG_METADATA, SimFidelity, run_trials

PROG = "fso-acq"
Z_LIMIT = 3.0
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3


class Command(str, Enum):
    SWEEP_ALPHA = "sweep-alpha"
    SWEEP_N0 = "sweep-n0"
    CDF = "cdf"
    OPTIMIZE = "optimize"
    SIMULATE = "simulate"
    VALIDATE = "validate"


@dataclass(frozen=True)
class ExperimentSpec:
    command: Command
    output_dir: Path
    config_path: Path | None = None
    overrides: tuple[str, ...] = ()
    seed: int = 42
    trials: int = 100_000
    grid_size: int = 200
    n0: tuple[int, ...] = ()
    alpha: tuple[float, ...] = ()
    t: tuple[float, ...] = ()
    mode: NormalizationMode | None = None
    fidelity: SimFidelity = SimFidelity.FAITHFUL
    bracket: tuple[float, float] = (0.001, 0.999)
    n0_range: tuple[int, int] = (2, 50)
    tol: float = 1e-4


# --- formatting -----------------------------------------------------------------


def fmt(value: Any) -> str:
    """CSV cell text: floats with 17 significant digits, ``None`` as empty."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(v: Any) -> Any:
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, Path):
        return None
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def write_manifest(spec: ExperimentSpec, params: SystemParams, artifacts: Sequence[str]) -> None:
    doc = {
        "command": spec.command.value,
        "version": __version__,
        "seed": spec.seed,
        "trials": spec.trials,
        "grid_size": spec.grid_size,
        "n0": list(spec.n0),
        "alpha": list(spec.alpha),
        "t_s": list(spec.t),
        "bracket": list(spec.bracket),
        "n0_range": list(spec.n0_range),
        "tol": spec.tol,
        "normalization_mode": params.normalization_mode.value,
        "fidelity": spec.fidelity.value,
        "overrides": list(spec.overrides),
        "params": params_to_config(params),
        "rng": dict(RNG_METADATA),
        "artifacts": sorted(artifacts),
    }
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    (spec.output_dir / "manifest.json").write_text(text + "\n")


PLOT_TEMPLATE = '''"""Plot {csv_name}. Requires matplotlib."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
series = defaultdict(lambda: ([], []))
with open(here / "{csv_name}") as fh:
    for row in csv.DictReader(fh):
        xs, ys = series[row.get("{group}", "")]
        xs.append(float(row["{x}"]))
        ys.append(float(row["{y}"]))

fig, ax = plt.subplots()
for key, (xs, ys) in sorted(series.items(), key=lambda kv: float(kv[0] or 0)):
    ax.plot(xs, ys, label="{group}=" + key if key else None)
ax.set_xlabel("{xlabel}")
ax.set_ylabel("{ylabel}")
if len(series) > 1:
    ax.legend()
fig.savefig(here / "{png_name}", dpi=150)
'''


def write_plot_script(out: Path, csv_name: str, x: str, y: str, group: str, xlabel: str, ylabel: str) -> str:
    name = "plot_" + csv_name.replace(".csv", ".py")
    (out / name).write_text(
        PLOT_TEMPLATE.format(
            csv_name=csv_name,
            png_name=csv_name.replace(".csv", ".png"),
            x=x,
            y=y,
            group=group,
            xlabel=xlabel,
            ylabel=ylabel,
        )
    )
    return name


# --- commands -------------------------------------------------------------------


def _n0_values(spec: ExperimentSpec, params: SystemParams) -> tuple[int, ...]:
    return spec.n0 or (params.max_pulses,)


def _cmd_sweep_alpha(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    grid = default_alpha_grid(spec.grid_size)
    rows = []
    for n0 in _n0_values(spec, params):
        for pt in sweep_alpha(params.replace(max_pulses=n0), grid):
            rows.append((pt.n0, pt.alpha, pt.objective, pt.p_pulse, pt.p_attempt))
    name = "sweep_alpha.csv"
    write_csv(spec.output_dir / name, ("n0", "alpha", "expected_time_s", "p_pulse", "p_attempt"), rows)
    plot = write_plot_script(spec.output_dir, name, "alpha", "expected_time_s", "n0", "alpha", "E[T] (s)")
    print(f"wrote {len(rows)} rows to {name}")
    return EXIT_OK, [name, plot]


def _cmd_sweep_n0(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    lo, hi = spec.n0_range
    n0s = spec.n0 or tuple(range(lo, hi + 1))
    alphas = spec.alpha or (0.6,)
    rows = []
    for a in alphas:
        for n0 in n0s:
            m = expected_time(params.replace(max_pulses=n0), a)
            rows.append((a, n0, m.expected_time, m.p_pulse, m.p_attempt))
    name = "sweep_n0.csv"
    write_csv(spec.output_dir / name, ("alpha", "n0", "expected_time_s", "p_pulse", "p_attempt"), rows)
    plot = write_plot_script(spec.output_dir, name, "n0", "expected_time_s", "alpha", "N0", "E[T] (s)")
    print(f"wrote {len(rows)} rows to {name}")
    return EXIT_OK, [name, plot]


def _single(values: tuple, what: str):
    if len(values) > 1:
        raise ConfigError(f"this command takes a single {what} value, got {len(values)}")
    return values[0] if values else None


def _cmd_cdf(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    t = _single(spec.t, "--t")
    t = 12.0 if t is None else t
    n0 = _single(spec.n0, "--n0")
    if n0 is not None:
        params = params.replace(max_pulses=n0)
    rows = [(a, acq_time_cdf(params, a, t)) for a in default_alpha_grid(spec.grid_size)]
    name = "cdf.csv"
    write_csv(spec.output_dir / name, ("alpha", "cdf"), rows)
    plot = write_plot_script(spec.output_dir, name, "alpha", "cdf", "", "alpha", f"P(T <= {t:g} s)")
    print(f"wrote {len(rows)} rows to {name}")
    return EXIT_OK, [name, plot]


def _cmd_optimize(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    rows = []
    ts = spec.t or (12.0,)
    for n0 in _n0_values(spec, params):
        p = params.replace(max_pulses=n0)
        r = optimize_alpha_mean_time(p, spec.bracket, spec.tol)
        rows.append(("alpha_mean_time", n0, None, None, r.argopt, r.objective_value, r.refinement_iterations))
        for t in ts:
            r = optimize_alpha_cdf(p, spec.bracket, spec.tol, t)
            rows.append(("alpha_cdf", n0, None, t, r.argopt, r.objective_value, r.refinement_iterations))
    lo, hi = spec.n0_range
    for a in spec.alpha or (0.6,):
        r = optimize_n0(params, lo, hi, a)
        rows.append(("n0_mean_time", None, a, None, r.argopt, r.objective_value, r.refinement_iterations))
    name = "optimize.csv"
    header = ("problem", "n0", "alpha", "t_s", "argopt", "objective_value", "refinement_iterations")
    write_csv(spec.output_dir / name, header, rows)
    for row in rows:
        print("  ".join(f"{h}={fmt(v)}" for h, v in zip(header, row) if v is not None))
    return EXIT_OK, [name]


def _simulate(spec: ExperimentSpec, params: SystemParams, alphas, ts):
    return [
        run_trials(params, a, spec.fidelity, spec.trials, spec.seed, cdf_grid=ts)
        for a in alphas
    ]


def _cmd_simulate(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    alphas = spec.alpha or (0.5,)
    ts = spec.t or (6.0, 12.0, 24.0)
    sums = _simulate(spec, params, alphas, ts)
    rows, cdf_rows = [], []
    for s in sums:
        rows.append(
            (s.alpha, s.trials, s.seed, s.fidelity, s.mean_time, s.mean_time_stderr,
             s.empirical_p_pulse, s.empirical_p_pulse_stderr, s.mean_attempts,
             s.mean_pulses_final_attempt)
        )
        cdf_rows += [(s.alpha, c.t, c.probability, c.stderr) for c in s.empirical_cdf]
    write_csv(
        spec.output_dir / "simulate.csv",
        ("alpha", "trials", "seed", "fidelity", "mean_time_s", "mean_time_stderr_s",
         "p_pulse", "p_pulse_stderr", "mean_attempts", "mean_pulses_final_attempt"),
        rows,
    )
    write_csv(spec.output_dir / "simulate_cdf.csv", ("alpha", "t_s", "cdf", "stderr"), cdf_rows)
    for r in rows:
        print(f"alpha={fmt(r[0])}  mean_time_s={fmt(r[4])}  stderr={fmt(r[5])}")
    return EXIT_OK, ["simulate.csv", "simulate_cdf.csv"]


def z_score(analytic: float, empirical: float, stderr: float) -> float:
    """``(empirical - analytic) / stderr``; a zero standard error gives 0 on exact agreement."""
    diff = empirical - analytic
    if stderr > 0:
        return diff / stderr
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def _cmd_validate(spec: ExperimentSpec, params: SystemParams) -> tuple[int, list[str]]:
    alphas = spec.alpha or (0.3, 0.5, 0.7)
    ts = spec.t or (6.0, 12.0, 24.0)
    rows = []
    for s in _simulate(spec, params, alphas, ts):
        model = expected_time(params, s.alpha)
        rows.append((s.alpha, "mean_time", None, model.expected_time, s.mean_time, s.mean_time_stderr))
        rows.append((s.alpha, "p_pulse", None, model.p_pulse, s.empirical_p_pulse, s.empirical_p_pulse_stderr))
        for c in s.empirical_cdf:
            f = model.cdf(c.t)
            # an all-0 or all-1 sample has zero spread; fall back to the binomial SE at F
            se = max(c.stderr, math.sqrt(max(f * (1.0 - f), 0.0) / s.trials))
            rows.append((s.alpha, "cdf", c.t, f, c.probability, se))
    rows = [r + (z_score(r[3], r[4], r[5]),) for r in rows]
    name = "validate.csv"
    write_csv(
        spec.output_dir / name,
        ("alpha", "quantity", "t_s", "analytic", "empirical", "stderr", "z"),
        rows,
    )
    worst = max(abs(r[-1]) for r in rows)
    failed = [r for r in rows if not abs(r[-1]) <= Z_LIMIT]
    for r in rows:
        flag = "FAIL" if r in failed else "ok"
        t = "" if r[2] is None else f" t={fmt(r[2])}"
        print(f"{flag:4s} alpha={fmt(r[0])} {r[1]}{t} z={r[6]:+.3f}")
    print(f"max |z| = {worst:.3f}")
    return (EXIT_VALIDATION if failed else EXIT_OK), [name]


COMMANDS = {
    Command.SWEEP_ALPHA: _cmd_sweep_alpha,
    Command.SWEEP_N0: _cmd_sweep_n0,
    Command.CDF: _cmd_cdf,
    Command.OPTIMIZE: _cmd_optimize,
    Command.SIMULATE: _cmd_simulate,
    Command.VALIDATE: _cmd_validate,
}


def resolve_params(spec: ExperimentSpec) -> SystemParams:
    overrides = list(spec.overrides)
    if spec.mode is not None:
        overrides.append(f"normalization_mode={spec.mode.value}")
    return load_config(spec.config_path, overrides)


def run(spec: ExperimentSpec) -> int:
    """Execute one experiment; returns the process exit status."""
    params = resolve_params(spec)
    try:
        spec.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {spec.output_dir}: {exc}") from exc
    status, artifacts = COMMANDS[spec.command](spec, params)
    write_manifest(spec, params, artifacts)
    return status


# --- argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


def _list_of(kind, what: str):
    def parse(text: str):
        try:
            vals = tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {what} list: {text!r}") from None
        if not vals:
            raise argparse.ArgumentTypeError(f"empty {what} list")
        return vals

    return parse


def _pair(kind):
    def parse(text: str):
        parts = text.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
        try:
            return kind(parts[0]), kind(parts[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid range {text!r}") from None

    return parse


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value parameter file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--seed", type=_u64, default=42)
    common.add_argument("--trials", type=_positive_int, default=100_000)
    common.add_argument("--grid", type=_positive_int, default=200, help="alpha grid size")
    common.add_argument("--n0", type=_list_of(int, "N0"), default=(), metavar="LIST")
    common.add_argument("--alpha", type=_list_of(float, "alpha"), default=(), metavar="LIST")
    common.add_argument("--t", type=_list_of(float, "time"), default=(), metavar="SECONDS",
                        help="time threshold(s) in seconds, comma separated")
    common.add_argument("--mode", choices=[m.value for m in NormalizationMode])
    common.add_argument("--fidelity", choices=[f.value for f in SimFidelity], default="faithful")
    common.add_argument("--bracket", type=_pair(float), default=(0.001, 0.999), metavar="LO,HI",
                        help="alpha search interval for optimize")
    common.add_argument("--n0-range", type=_pair(int), default=(2, 50), metavar="LO,HI",
                        help="N0 scan range for sweep-n0 and optimize")
    common.add_argument("--tol", type=float, default=1e-4, help="golden-section tolerance")

    parser = _Parser(prog=PROG, description="Lidar-assisted FSO acquisition experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        Command.SWEEP_ALPHA: "E[T] versus alpha for one or more N0",
        Command.SWEEP_N0: "E[T] versus N0 at fixed alpha",
        Command.CDF: "P(T <= t) versus alpha",
        Command.OPTIMIZE: "optimal alpha (mean time and CDF) and optimal N0",
        Command.SIMULATE: "Monte Carlo acquisition trials",
        Command.VALIDATE: "analytic versus Monte Carlo z-scores",
    }
    for cmd, text in helps.items():
        sub.add_parser(cmd.value, parents=[common], help=text, description=text)
    return parser


def spec_from_args(ns: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        command=Command(ns.command),
        output_dir=ns.out,
        config_path=ns.config,
        overrides=tuple(ns.set),
        seed=ns.seed,
        trials=ns.trials,
        grid_size=ns.grid,
        n0=ns.n0,
        alpha=ns.alpha,
        t=ns.t,
        mode=None if ns.mode is None else NormalizationMode(ns.mode),
        fidelity=SimFidelity(ns.fidelity),
        bracket=ns.bracket,
        n0_range=ns.n0_range,
        tol=ns.tol,
    )


def main(argv: Sequence[str] | None = None) -> int:
    try:
        spec = spec_from_args(build_parser().parse_args(argv))
        return run(spec)
    except GeometricInfeasibilityError as exc:
        print(f"{PROG}: infeasible: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ParameterError) as exc:
        print(f"{PROG}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, NoFeasiblePointError, NonTerminationError, ConvergenceError) as exc:
        print(f"{PROG}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FsoAcqError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
