"""Command-line experiment runner.

``nestpol <command> [--key value]...`` builds a scenario, runs the measured
versus bound comparison and writes CSV.  The first line is
``# nestpol v1 seed=<s> cmd=<name>``, the second the column header.  Floats
use 17 significant digits so runs can be diffed byte for byte.

Exit codes: 0 success, 2 invalid configuration, 3 a bound or hypothesis
violation was detected.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chain import (
    BoundParams,
    decay_slope,
    derivative_error_experiment,
    dyadic_chain,
    measure_error_first,
    measure_stability_first,
    measure_variable_order,
    random_dyadic_chain,
)
from .chebyshev import convergence_study
from .errors import AuditError, ConfigurationError, DomainError, HypothesisError, NestpolError
from .fastsum import (
    Kernel,
    OrderSchedule,
    SummationConfig,
    direct_summation,
    interleaved_points,
    relative_error,
    summation,
)
from .functions import FAMILIES, Pole, make_function
from .geometry import Interval
from .oscillatory import (
    DirectionalChain,
    compute_C_os,
    constant_directions,
    measure_oscillatory,
    min_oscillatory_order,
    nearest_directions,
    oscillatory_sup_stability_check,
    random_directions,
    zero_directions,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
FORMAT_VERSION = "v1"
AUTO = "auto"


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _optional(kind: Callable) -> Callable:
    def parse(text: str):
        return None if text == AUTO else kind(text)
    parse.__name__ = kind.__name__
    return parse


def _choice(*options: str) -> Callable:
    def parse(text: str) -> str:
        if text not in options:
            raise ConfigurationError(f"expected one of {options}, got {text!r}")
        return text
    return parse


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


@dataclass(frozen=True)
class Key:
    default: str
    parse: Callable
    help: str


KEYS = {
    "seed": Key("42", int, "seed for random chains, directions and masses"),
    "output": Key("-", str, "output path, '-' for stdout"),
    "rho0": Key("2.0", float, "Bernstein radius of the base discs"),
    "delta0": Key("0.5", float, "maximal length ratio of neighbouring levels"),
    "sigma": Key(AUTO, _optional(float), "nesting factor; auto takes the largest admissible"),
    "q": Key(AUTO, _optional(float), "approximation-first rate; auto = sigma^-1/2"),
    "theta1": Key("0.5", float, "split of the nesting factor, theta2 = 1 - theta1"),
    "q1": Key(AUTO, _optional(float), "stability-first rate; auto = sigma^(-theta1/2)"),
    "p": Key(AUTO, _optional(float), "oscillatory stability rate; auto = sqrt(q)"),
    "Lambda": Key("1.0", float, "Lebesgue growth constant"),
    "lambda": Key("1.0", float, "Lebesgue growth exponent"),
    "delta1": Key("0.5", float, "minimal length ratio of neighbouring levels"),
    "omega": Key("2.0", float, "direction budget per level"),
    "fn": Key("pole", _choice(*FAMILIES), "test function family"),
    "pole": Key("3", _complex, "pole location of the pole family"),
    "kappa": Key("40.0", float, "wave number"),
    "y0": Key("1.5", float, "source point of the helmholtz family"),
    "teeth": Key("7", int, "periods of the sawtooth family"),
    "a": Key("-1.0", float, "left end of the root interval"),
    "b": Key("1.0", float, "right end of the root interval"),
    "rho": Key(AUTO, _optional(float), "radius of the bound disc; auto stays inside the singularity"),
    "rho_hat": Key("1.0", float, "radius of the measured disc"),
    "m_min": Key("2", int, "smallest order"),
    "m_max": Key("25", int, "largest order"),
    "mode": Key("error_first", _choice("error_first", "stability_first", "varorder", "derivative"),
                "chain experiment"),
    "L": Key("4", int, "number of levels below the root"),
    "alpha": Key(AUTO, _optional(int), "order (constant) or base order (variable)"),
    "beta": Key("1", int, "order increment per level of the variable schedule"),
    "m": Key(AUTO, _optional(int), "interpolation order"),
    "anchor": Key("center", _choice("left", "center", "right"), "position of each child in its parent"),
    "layout": Key("dyadic", _choice("dyadic", "random"), "chain layout"),
    "directions": Key("nearest", str, "zero, constant, nearest, random or a comma list"),
    "n": Key("1024,2048", _int_list, "problem sizes, comma separated"),
    "kernel": Key("inverse", _choice("inverse", "log", "helmholtz"), "summation kernel"),
    "order": Key("constant", _choice("constant", "variable"), "order schedule"),
    "eta": Key("1.0", float, "admissibility parameter"),
    "leaf": Key("16", int, "leaf capacity of the cluster trees"),
}

_BOUND = ("seed", "output", "rho0", "delta0", "sigma", "q", "theta1", "q1", "p", "Lambda", "lambda")
_FUNCTION = ("fn", "pole", "kappa", "y0", "teeth", "a", "b")

COMMAND_KEYS = {
    "geom": _BOUND + ("delta1", "omega"),
    "converge": _BOUND + _FUNCTION + ("rho", "rho_hat", "m_min", "m_max"),
    "chain": _BOUND + _FUNCTION + ("mode", "L", "alpha", "beta", "anchor", "layout", "delta1"),
    "osc": _BOUND + _FUNCTION + ("L", "m", "omega", "directions", "anchor", "layout"),
    "fastsum": ("seed", "output", "n", "kernel", "kappa", "order", "m", "alpha", "beta", "eta", "leaf"),
}

HEADERS = {
    "geom": ("quantity", "value", "formula"),
    "converge": ("m", "lebesgue", "measured", "bound"),
    "chain": ("mode", "kind", "L", "i", "j", "m_min", "m_max", "stab_measured", "stab_bound",
              "err_measured", "err_bound", "closed_bound"),
    "osc": ("kind", "L", "i", "j", "m", "stab_measured", "stab_bound", "err_measured", "err_bound"),
    "fastsum": ("n", "m", "err_rel", "op_count"),
}


@dataclass
class Scenario:
    """A command plus its explicitly set parameters; everything else takes the default."""

    command: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMAND_KEYS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        allowed = COMMAND_KEYS[self.command]
        for key in self.params:
            if key not in allowed:
                raise ConfigurationError(f"key {key!r} does not apply to {self.command}")

    def raw(self, key: str) -> str:
        return str(self.params.get(key, KEYS[key].default))

    def get(self, key: str):
        try:
            return KEYS[key].parse(self.raw(key))
        except NestpolError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value for {key}: {self.raw(key)!r}") from exc

    def validate(self) -> None:
        """Parse every key of the command so bad values fail before any work starts."""
        for key in COMMAND_KEYS[self.command]:
            self.get(key)

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        lines += [f"{key} = {self.raw(key)}" for key in COMMAND_KEYS[self.command]]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: Optional[str] = None) -> "Scenario":
        values = parse_config(text)
        name = values.pop("command", None) or command
        if command is not None and name != command:
            raise ConfigurationError(f"config is for {name!r}, not {command!r}")
        return cls(name, values)


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"config line {number}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def render(scenario: Scenario, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# nestpol {FORMAT_VERSION} seed={scenario.get('seed')} cmd={scenario.command}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADERS[scenario.command])
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# scenario helpers
# --------------------------------------------------------------------------


def bound_params(sc: Scenario) -> BoundParams:
    return BoundParams.derive(
        sc.get("rho0"), sc.get("delta0"), sigma=sc.get("sigma"), q=sc.get("q"),
        theta1=sc.get("theta1"), q1=sc.get("q1"), p=sc.get("p"),
        Lambda=sc.get("Lambda"), lambda_=sc.get("lambda"))


def root_interval(sc: Scenario) -> Interval:
    return Interval(sc.get("a"), sc.get("b"))


def test_function(sc: Scenario, interval: Interval):
    return make_function(sc.get("fn"), pole=sc.get("pole"), kappa=sc.get("kappa"),
                         y0=sc.get("y0"), interval=interval, teeth=sc.get("teeth"))


def build_chain(sc: Scenario, params: BoundParams, orders, delta1=None):
    root = root_interval(sc)
    L = sc.get("L")
    if L < 1:
        raise ConfigurationError(f"L must be at least 1, got {L}")
    if sc.get("layout") == "random":
        chain = random_dyadic_chain(np.random.default_rng(sc.get("seed")), root, L, orders, delta1)
    else:
        chain = dyadic_chain(root, L, orders, sc.get("anchor"), delta1)
    if chain.delta0 > params.delta0 * (1 + 1e-12):
        raise ConfigurationError(f"dyadic chains need delta0 >= {chain.delta0}")
    return chain


def _pairs(L: int):
    return [(i, j) for i in range(L + 1) for j in range(i + 1, L + 1)]


# --------------------------------------------------------------------------
# commands; each returns (rows, violation)
# --------------------------------------------------------------------------


def cmd_geom(sc: Scenario):
    params = bound_params(sc)
    omega = sc.get("omega")
    delta1 = sc.get("delta1")
    rows = [
        ("sigma", params.sigma, "sigma_hat(rho0 delta0) unless given"),
        ("q", params.q, "sigma^(-1/2) unless given"),
        ("q1", params.q1, "sigma^(-theta1/2) unless given"),
        ("q2", params.q2, "sigma^(-theta2)"),
        ("p", params.p, "sqrt(q) unless given"),
        ("C_in", params.C_in, "sup_m 2(1+Lambda(1+m)^lambda)/(sigma-1) (sigma q)^-m"),
        ("C_in_sf", params.C_in_sf, "C_in with sigma^theta1 and q1"),
        ("C_ca", params.C_ca, "4 rho0/(rho0-1)^2"),
        (f"C_os(omega={fmt(omega)})", compute_C_os(omega, params.delta0, params.sigma * params.rho0),
         "exp(omega/(1-delta0) (r-1/r)/4) at r = sigma rho0"),
        ("alpha0", params.alpha0, "min a with (1 + C_in_sf q1^a) q2^a <= 1/2"),
        (f"alpha0(delta1={fmt(delta1)})", params.derivative_alpha0(delta1),
         "min a with (q2^a / delta1) (1 + C_in_sf q1^a) <= 1/2"),
        ("C_ap", params.C_ap, "2 C_in_sf"),
    ]
    return sorted(rows, key=lambda r: r[0]), False


def cmd_converge(sc: Scenario):
    interval = root_interval(sc)
    f = test_function(sc, interval)
    rho = sc.get("rho")
    if rho is None:
        if sc.get("fn") == "sawtooth":
            raise ConfigurationError("the sawtooth family is not holomorphic; choose another fn")
        radius = f.radius(interval)
        rho = 2.0 if math.isinf(radius) else 1.0 + 0.95 * (radius - 1.0)
    m_min, m_max = sc.get("m_min"), sc.get("m_max")
    if not 0 <= m_min <= m_max:
        raise ConfigurationError(f"need 0 <= m_min <= m_max, got {m_min}, {m_max}")
    study = convergence_study(f, interval, rho, sc.get("rho_hat"), range(m_min, m_max + 1))
    rows = [(r.m, r.lebesgue, r.measured, r.bound) for r in study]
    return rows, any(r.violates for r in study)


def _chain_rows(sc: Scenario, params: BoundParams, f):
    mode = sc.get("mode")
    alpha = sc.get("alpha")
    rows = []
    violation = False
    if mode in ("error_first", "stability_first"):
        alpha = params.alpha0 if alpha is None else alpha
        chain = build_chain(sc, params, alpha)
        measure = measure_error_first if mode == "error_first" else measure_stability_first
        for i, j in _pairs(chain.L):
            res = measure(chain, params, f, i, j)
            violation |= not res.ok
            rows.append((mode, "pair", chain.L, i, j, alpha, alpha, res.stab_measured, res.stab_bound,
                         res.err_measured, res.err_bound, math.nan))
    elif mode == "derivative":
        delta1 = sc.get("delta1")
        alpha0 = params.derivative_alpha0(delta1)
        alpha = alpha0 if alpha is None else alpha
        if alpha < alpha0:
            raise HypothesisError(f"alpha={alpha} is below the derivative threshold {alpha0}")
        chain = build_chain(sc, params, alpha, delta1)
        for i, j in _pairs(chain.L):
            res = derivative_error_experiment(chain, params, f, i, j)
            violation |= res.measured > res.bound
            rows.append((mode, "pair", chain.L, i, j, alpha, alpha, math.nan, math.nan,
                         res.measured, res.bound, math.nan))
    else:
        alpha = 1 if alpha is None else alpha
        beta = sc.get("beta")
        L = sc.get("L")
        if L < 2:
            raise ConfigurationError("varorder needs L >= 2 for a slope")
        levels, errors = [], []
        for level in range(1, L + 1):
            res = measure_variable_order(params, f, alpha, beta, level, root_interval(sc), sc.get("anchor"))
            violation |= res.err_measured > res.sum_bound or res.err_measured > res.err_bound
            violation |= res.stab_measured > res.stab_bound
            rows.append((mode, "level", level, 0, level, alpha, alpha + beta * level,
                         res.stab_measured, res.stab_bound, res.err_measured, res.sum_bound, res.err_bound))
            levels.append(level)
            errors.append(res.err_measured)
        floor = 100.0 * np.finfo(float).eps * max(errors[0], 1.0)
        slope, used = decay_slope(levels, errors, floor)
        predicted = math.log(params.q) * min(alpha, beta)
        # the decay must reach at least 80% of the predicted rate
        violation |= not (used >= 2 and slope <= 0.8 * predicted)
        rows.append((mode, "slope", L, 0, L, alpha, alpha + beta * L, math.nan, math.nan,
                     slope, 0.8 * predicted, predicted))
    return rows, violation


def cmd_chain(sc: Scenario):
    params = bound_params(sc)
    f = test_function(sc, root_interval(sc))
    rows, violation = _chain_rows(sc, params, f)
    return sorted(rows, key=lambda r: (r[1], r[2], r[3], r[4])), violation


def _direction_schedule(sc: Scenario, chain, f, omega: float) -> tuple:
    spec = sc.raw("directions")
    target = getattr(f, "direction", -sc.get("kappa"))
    if spec == "zero":
        return zero_directions(chain)
    if spec == "constant":
        return constant_directions(chain, target)
    if spec == "nearest":
        return nearest_directions(chain, target, omega)
    if spec == "random":
        return random_directions(np.random.default_rng(sc.get("seed")), chain, omega)
    try:
        return tuple(float(x) for x in spec.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad directions {spec!r}") from exc


def cmd_osc(sc: Scenario):
    params = bound_params(sc)
    root = root_interval(sc)
    f = test_function(sc, root)
    L = sc.get("L")
    if L < 1:
        raise ConfigurationError(f"L must be at least 1, got {L}")
    alpha0 = min_oscillatory_order(L, params.q, params.p)
    m = sc.get("m")
    m = alpha0 if m is None else m
    base = build_chain(sc, params, m)
    omega = sc.get("omega")
    chain = DirectionalChain(base, _direction_schedule(sc, base, f, omega), omega)
    rows = []
    violation = False
    for i, j in _pairs(L):
        res = measure_oscillatory(chain, params, f, i, j)
        violation |= not res.ok
        rows.append(("pair", L, i, j, m, res.stab_measured, res.stab_bound, res.err_measured, res.err_bound))
    if m >= alpha0:
        for i, j in _pairs(L):
            res = oscillatory_sup_stability_check(chain, params, f, i, j)
            violation |= res.measured > res.bound
            rows.append(("sup", L, i, j, m, res.measured, res.bound, math.nan, math.nan))
    return sorted(rows, key=lambda r: (r[0], r[2], r[3])), violation


def cmd_fastsum(sc: Scenario):
    kernel = Kernel(sc.get("kernel"), sc.get("kappa"))
    if sc.get("order") == "constant":
        m = sc.get("m")
        m = 8 if m is None else m
        schedule = OrderSchedule.constant(m)
    else:
        alpha = sc.get("alpha")
        m = 4 if alpha is None else alpha
        schedule = OrderSchedule.variable(m, sc.get("beta"))
    config = SummationConfig(sc.get("eta"), sc.get("leaf"), schedule)
    sizes = sc.get("n")
    if not sizes or min(sizes) < 1:
        raise ConfigurationError("n must list positive sizes")
    rows = []
    for n in sorted(set(sizes)):
        src, tgt = interleaved_points(n)
        masses = np.random.default_rng(sc.get("seed")).uniform(-1.0, 1.0, n)
        phi, ops = summation(src, masses, tgt, kernel, config)
        exact = direct_summation(src, masses, tgt, kernel)
        rows.append((n, m, relative_error(phi, exact), ops))
    return rows, False


COMMANDS = {
    "geom": cmd_geom,
    "converge": cmd_converge,
    "chain": cmd_chain,
    "osc": cmd_osc,
    "fastsum": cmd_fastsum,
}


def run(scenario: Scenario) -> tuple:
    """Validate and execute; returns ``(csv_text, violation)``."""
    scenario.validate()
    rows, violation = COMMANDS[scenario.command](scenario)
    return render(scenario, rows), violation


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nestpol", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMAND_KEYS.items():
        cmd = sub.add_parser(name, help=(COMMANDS[name].__doc__ or name).strip().split("\n")[0])
        cmd.add_argument("--config", help="key = value file; flags override it")
        for key in keys:
            flags = ["--" + key]
            if "_" in key:
                flags.append("--" + key.replace("_", "-"))
            cmd.add_argument(*flags, dest=key, default=None,
                             help=f"{KEYS[key].help} (default {KEYS[key].default})")
    return parser


def scenario_from_args(args: argparse.Namespace) -> Scenario:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values = parse_config(fh.read())
        name = values.pop("command", args.command)
        if name != args.command:
            raise ConfigurationError(f"config is for {name!r}, not {args.command!r}")
    for key in COMMAND_KEYS[args.command]:
        value = getattr(args, key)
        if value is not None:
            values[key] = value
    return Scenario(args.command, values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = scenario_from_args(args)
        text, violation = run(scenario)
    except (HypothesisError, AuditError) as exc:
        print(f"nestpol: violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ConfigurationError, DomainError, OSError) as exc:
        print(f"nestpol: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = scenario.raw("output")
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if violation:
        print("nestpol: measured value above its bound", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
