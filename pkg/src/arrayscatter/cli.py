"""Command-line front end: parameter sweeps written as CSV or JSON.

Configuration is a YAML file with the sections ``array``, ``tolerances``,
``sweep``, ``params`` and ``output`` (run ``arrayscatter <cmd> --schema`` for
the full description). Command-line flags override file values. Output is
assembled in sweep order, so a run is byte-reproducible for a fixed config.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import ast
import csv
import io
import itertools
import json
import operator
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__
from .cross_section import IncomingConfig, cross_sections
from .errors import (ConfigError, CriticalEnergyProximity, DarkMomentum, NumericalFailure,
                     OutsideD2)
from .lattice import K0, ArrayConfig, dispersion, is_bright
from .oracle import run_suite
from .propagator import local_propagator, pair_delta
from .single_excitation import atomic_amplitude, transmission
from .two_excitation import on_shell_smatrix, two_photon_grid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("dispersion", "propagator", "smatrix", "cross-section", "two-photon-wf",
            "transmission", "oracle")
SECTIONS = ("array", "tolerances", "sweep", "params", "output", "threads")


# config ------------------------------------------------------------------------------
_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def evaluate(expr, names):
    """Evaluate an arithmetic expression such as ``"2/3*pi/d"``.

    Only numbers, the names in ``names`` and ``+ - * / **`` are allowed.
    """
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return float(expr)
    if not isinstance(expr, str):
        raise ConfigError(f"expected a number or expression, got {expr!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in names:
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"unsupported expression {expr!r}")

    try:
        return ev(ast.parse(expr, mode="eval"))
    except SyntaxError:
        raise ConfigError(f"cannot parse expression {expr!r}") from None


@dataclass
class Axis:
    """One sweep axis: ``count`` points from ``start`` to ``stop`` inclusive."""
    variable: str
    start: float
    stop: float
    count: int = 1
    spacing: str = "linear"

    def values(self):
        if self.count == 1:
            return np.array([self.start])
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def as_dict(self):
        return {"variable": self.variable, "start": self.start, "stop": self.stop,
                "count": self.count, "spacing": self.spacing}


@dataclass
class RunConfig:
    """Fully resolved run description; embedded in every output header."""
    command: str
    array: ArrayConfig
    rtol: float = None
    sweep: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    out: str = None
    format: str = "csv"
    precision: int = 17
    threads: int = 1

    def as_dict(self):
        return {"command": self.command, "array": self.array.as_dict(),
                "tolerances": {"rtol": self.rtol},
                "sweep": [a.as_dict() for a in self.sweep],
                "params": dict(sorted(self.params.items())),
                "output": {"format": self.format, "precision": self.precision},
                "threads": self.threads}


def _names(cfg):
    return {"pi": np.pi, "d": cfg.spacing, "k0": K0, "b": cfg.zone_edge}


def _parse_axis(spec, names):
    if not isinstance(spec, dict):
        raise ConfigError(f"sweep entries must be mappings, got {spec!r}")
    unknown = set(spec) - {"variable", "start", "stop", "count", "spacing", "value"}
    if unknown:
        raise ConfigError(f"unknown sweep keys {sorted(unknown)}")
    if "variable" not in spec:
        raise ConfigError("sweep entry without 'variable'")
    if "value" in spec:
        v = evaluate(spec["value"], names)
        return Axis(str(spec["variable"]), v, v, 1)
    start = evaluate(spec.get("start"), names)
    stop = evaluate(spec.get("stop", spec.get("start")), names)
    count = spec.get("count", 1)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ConfigError(f"sweep count must be an integer >= 1, got {count!r}")
    spacing = spec.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError(f"sweep spacing must be 'linear' or 'log', got {spacing!r}")
    if spacing == "log" and count > 1 and not start * stop > 0:
        raise ConfigError("log spacing needs start and stop of the same sign")
    return Axis(str(spec["variable"]), start, stop, count, spacing)


def _set_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted}: {k} is not a section")
    node[keys[-1]] = value


def load_document(path=None, overrides=()):
    """Read the YAML config (or start empty) and apply ``key.path=value`` overrides."""
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        k, v = item.split("=", 1)
        _set_path(doc, k.strip(), yaml.safe_load(v))
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return doc


def resolve(command, doc, args=None):
    """Build a :class:`RunConfig` from a config document plus flag overrides."""
    arr = doc.get("array") or {}
    if not isinstance(arr, dict):
        raise ConfigError("'array' must be a mapping")
    unknown = set(arr) - {"dimension", "spacing", "polarization", "quality_factor", "sum_tol"}
    if unknown:
        raise ConfigError(f"unknown array keys {sorted(unknown)}")
    try:
        cfg = ArrayConfig(**{k: (float(v) if k in ("spacing", "quality_factor", "sum_tol")
                                 else v) for k, v in arr.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    names = _names(cfg)
    tol = doc.get("tolerances") or {}
    rtol = tol.get("rtol")
    out = doc.get("output") or {}
    params = dict(doc.get("params") or {})
    run = RunConfig(command, cfg, None if rtol is None else float(rtol), [], params,
                    out.get("path"), out.get("format", "csv"), out.get("precision", 17),
                    int(doc.get("threads", 1)) if "threads" in doc else 1)
    if args is not None:
        if args.tol is not None:
            run.rtol = args.tol
        if args.out is not None:
            run.out = args.out
        if args.format is not None:
            run.format = args.format
        if args.precision is not None:
            run.precision = args.precision
        if args.threads is not None:
            run.threads = args.threads
    if run.rtol is not None and not run.rtol > 0:
        raise ConfigError("tolerances.rtol must be positive")
    if run.format not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got {run.format!r}")
    if not isinstance(run.precision, int) or not 6 <= run.precision <= 17:
        raise ConfigError(f"precision must be an integer in [6, 17], got {run.precision!r}")
    if run.threads < 1:
        raise ConfigError("threads must be >= 1")
    sweep = doc.get("sweep")
    if sweep is None:
        sweep = _default_sweep(command, cfg)
    if not isinstance(sweep, list):
        raise ConfigError("'sweep' must be a list of axes")
    run.sweep = [_parse_axis(s, names) for s in sweep]
    allowed = _variables(command, cfg)
    for a in run.sweep:
        if a.variable not in allowed:
            raise ConfigError(f"{command} cannot sweep {a.variable!r}; allowed: {sorted(allowed)}")
    for k in list(params):
        if k not in _PARAMS[command]:
            raise ConfigError(f"unknown parameter {k!r} for {command}")
    for k, default in _PARAMS[command].items():
        params.setdefault(k, default)
    return run


def _vec(name, dim):
    return [name] if dim == 1 else [name + "x", name + "y"]


def _variables(command, cfg):
    n = cfg.dim
    if command == "dispersion":
        return set(_vec("p", n))
    if command in ("propagator", "smatrix"):
        return {"E", *_vec("P", n), *_vec("q", n)}
    if command == "cross-section":
        return {"E1", "E2", *_vec("P", n), *_vec("q", n), *_vec("p1", n), *_vec("p2", n)}
    if command == "transmission":
        return {"E", *_vec("p", n)}
    return set()


_PARAMS = {
    "dispersion": {},
    "propagator": {"eta": 0.0, "side": "above"},
    "smatrix": {},
    "cross-section": {"channel": 0},
    "two-photon-wf": {"E": None, "q": "2/3*pi/d", "P": 0.0, "nq": 256, "nd": 256, "dmax": 3.0},
    "transmission": {},
    "oracle": {"seed": 0, "n_dispersion": 100, "N": 1000000, "samples": 10000000, "bins": 200},
}


def _default_sweep(command, cfg):
    b = cfg.zone_edge
    if command == "dispersion":
        if cfg.dim == 1:
            return [{"variable": "p", "start": -b, "stop": b, "count": 1024}]
        return [{"variable": v, "start": -b, "stop": b, "count": 64} for v in ("px", "py")]
    if command in ("propagator", "smatrix"):
        return [{"variable": "q", "value": "2/3*pi/d"}]
    if command == "cross-section":
        return [{"variable": "q", "value": "2/3*pi/d"}]
    if command == "transmission":
        return [{"variable": "p", "value": 0.0}, {"variable": "E", "start": -5, "stop": 5,
                                                  "count": 101}]
    return []


# output ----------------------------------------------------------------------------------
def format_number(x, precision):
    """Shortest representation that round-trips at ``precision`` significant digits.

    ``None`` (closed channel, undefined value) becomes the empty string.
    """
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if not np.isfinite(x):
        return "" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return np.format_float_scientific(x, precision=precision - 1, unique=True, trim="-") \
        if x != 0 and not 1e-4 <= abs(x) < 1e16 else \
        np.format_float_positional(x, precision=precision, unique=True, fractional=False,
                                   trim="-")


def _json_value(x, precision):
    s = format_number(x, precision)
    if s == "" or isinstance(x, str):
        return None if s == "" else x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    return json.loads(s) if s not in ("inf", "-inf") else s


def render(run, columns, rows):
    """Serialize rows with a header holding the resolved config and library version."""
    header = {"library": "arrayscatter", "version": __version__, "config": run.as_dict()}
    if run.format == "json":
        body = {"header": header, "columns": columns,
                "rows": [[_json_value(v, run.precision) for v in r] for r in rows]}
        return json.dumps(body, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_number(v, run.precision) for v in r])
    return buf.getvalue()


# sweeps ---------------------------------------------------------------------------------
def _points(run):
    axes = run.sweep
    if not axes:
        return [{}]
    return [dict(zip([a.variable for a in axes], combo))
            for combo in itertools.product(*(a.values() for a in axes))]


def _get(point, name, dim, default=0.0):
    if dim == 1:
        return float(point.get(name, default))
    return np.array([float(point.get(name + "x", default)), float(point.get(name + "y", default))])


def _flat(name, value, dim):
    if dim == 1:
        return [(name, float(value))]
    return [(name + "x", float(value[0])), (name + "y", float(value[1]))]


def _pair_energy(run, point):
    """``E`` from the point, else the dark-pair energy at ``(P, q)``."""
    cfg = run.array
    P, q = _get(point, "P", cfg.dim), _get(point, "q", cfg.dim)
    if "E" in point:
        return float(point["E"]), P, None
    has_q = any(k.startswith("q") for k in point)
    if not has_q:
        raise ConfigError("sweep needs E or a relative momentum q")
    return float(pair_delta(cfg, P, q)), P, q


def _row_dispersion(run, point):
    cfg = run.array
    p = _get(point, "p", cfg.dim)
    disp = dispersion(cfg)
    return [*(v for _, v in _flat("p", p, cfg.dim)), float(disp.delta(p)), float(disp.gamma(p)),
            "bright" if is_bright(p, cfg) else "dark"]


def _row_propagator(run, point):
    cfg = run.array
    E, P, _ = _pair_energy(run, point)
    eta = float(run.params["eta"])
    side = run.params["side"] if eta == 0 else None
    dec = local_propagator(cfg, E + 1j * eta, P, side=side, rtol=run.rtol)
    out = [E, *(v for _, v in _flat("P", P, cfg.dim)), eta]
    for L in (dec.L0, dec.L1, dec.L2, dec.L):
        out += [L.real, L.imag]
    return out + list(dec.rho) + [dec.near_critical]


def _row_smatrix(run, point):
    cfg = run.array
    E, P, _ = _pair_energy(run, point)
    sm = on_shell_smatrix(cfg, E, P, rtol=run.rtol)
    out = [E, *(v for _, v in _flat("P", P, cfg.dim))]
    for a in range(3):
        for b in range(3):
            v = sm.s[a, b]
            out += [None, None] if np.isnan(v) else [v.real, v.imag]
    out += list(sm.rho) + [a in sm.open_channels for a in range(3)]
    return out + [sm.unitarity_residual, sm.near_critical]


def _row_cross_section(run, point):
    cfg = run.array
    n = cfg.dim
    P, q = _get(point, "P", n), _get(point, "q", n)
    p1 = _get(point, "p1", n) if any(k.startswith("p1") for k in point) else 0.5 * P + q
    p2 = _get(point, "p2", n) if any(k.startswith("p2") for k in point) else 0.5 * P - q
    alpha = int(run.params["channel"])
    energies = [float(point[k]) for k in ("E1", "E2")[:alpha] if k in point]
    inc = IncomingConfig(cfg, alpha, p1, p2, tuple(energies))
    cs = cross_sections(inc, rtol=run.rtol)
    return [*(v for _, v in _flat("p1", p1, n)), *(v for _, v in _flat("p2", p2, n)),
            alpha, inc.E, cs.partial[0], cs.partial[1], cs.partial[2], cs.total, cs.units,
            cs.velocity, cs.near_critical]


def _row_transmission(run, point):
    cfg = run.array
    p, E = _get(point, "p", cfg.dim), float(point.get("E", 0.0))
    head = [*(v for _, v in _flat("p", p, cfg.dim)), E]
    try:
        t = transmission(p, E, cfg)
        a = atomic_amplitude(p, E, cfg)
    except DarkMomentum:
        return head + [None] * 5 + ["dark"]
    return head + [t.real, t.imag, abs(t), a.real, a.imag, "bright"]


def _columns(run):
    n = run.array.dim
    names = lambda s: [c for c, _ in _flat(s, np.zeros(n) if n == 2 else 0.0, n)]  # noqa: E731
    cmd = run.command
    if cmd == "dispersion":
        return names("p") + ["delta", "gamma", "classification"]
    if cmd == "propagator":
        return (["E"] + names("P") + ["eta"]
                + [f"{L}_{part}" for L in ("L0", "L1", "L2", "L") for part in ("re", "im")]
                + ["rho0", "rho1", "rho2", "near_critical"])
    if cmd == "smatrix":
        return (["E"] + names("P")
                + [f"s{a}{b}_{part}" for a in range(3) for b in range(3) for part in ("re", "im")]
                + ["rho0", "rho1", "rho2", "open0", "open1", "open2", "unitarity_residual",
                   "near_critical"])
    if cmd == "cross-section":
        return names("p1") + names("p2") + ["channel", "E", "sigma0", "sigma1", "sigma2",
                                            "sigma_total", "units", "velocity", "near_critical"]
    if cmd == "transmission":
        return names("p") + ["E", "t_re", "t_im", "t_abs", "a_re", "a_im", "classification"]
    if cmd == "two-photon-wf":
        return ["q_over_pi_d", "delta_ph", "modulus", "phase"]
    return ["quantity", "reference", "oracle", "discrepancy", "tolerance", "passed",
            "parameters"]


_ROWS = {"dispersion": _row_dispersion, "propagator": _row_propagator,
         "smatrix": _row_smatrix, "cross-section": _row_cross_section,
         "transmission": _row_transmission}


def _two_photon_rows(run):
    cfg = run.array
    if cfg.dim != 1:
        raise ConfigError("two-photon-wf is available for 1D arrays")
    p = run.params
    names = _names(cfg)
    P = evaluate(p["P"], names)
    E = evaluate(p["E"], names) if p["E"] is not None else float(
        pair_delta(cfg, P, evaluate(p["q"], names)))
    try:
        g = two_photon_grid(cfg, E, P, int(p["nq"]), int(p["nd"]), evaluate(p["dmax"], names))
    except OutsideD2 as exc:
        raise ConfigError(str(exc)) from None
    run.params["E_resolved"] = E
    unit = np.pi / cfg.spacing
    return [[q / unit, d, g["modulus"][i, j], g["phase"][i, j]]
            for i, q in enumerate(g["q"]) for j, d in enumerate(g["delta_ph"])]


def _oracle_rows(run):
    cfg = run.array
    p = run.params
    reps = run_suite(cfg, seed=int(p["seed"]), n_dispersion=int(p["n_dispersion"]),
                     N=int(p["N"]), samples=int(p["samples"]), bins=int(p["bins"]))
    rows = [[r.quantity, _scalar(r.reference), _scalar(r.oracle), r.discrepancy, r.tolerance,
             r.passed, json.dumps(r.to_dict()["parameters"], sort_keys=True)] for r in reps]
    return rows, all(r.passed for r in reps)


def _scalar(x):
    # complex values are reported by modulus in tables; JSON keeps the full report
    if isinstance(x, complex):
        return abs(x)
    return x


def execute(run):
    """Evaluate the sweep; returns ``(columns, rows, ok)``."""
    ok = True
    with warnings.catch_warnings():
        # proximity to critical energies is reported in the near_critical column
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        if run.command == "two-photon-wf":
            rows = _two_photon_rows(run)
        elif run.command == "oracle":
            rows, ok = _oracle_rows(run)
        else:
            fn = _ROWS[run.command]
            pts = _points(run)
            if run.threads > 1:
                with ThreadPoolExecutor(max_workers=run.threads) as pool:
                    rows = list(pool.map(lambda pt: fn(run, pt), pts))
            else:
                rows = [fn(run, pt) for pt in pts]
    return _columns(run), rows, ok


def schema(command):
    """Config and column documentation for ``command``."""
    return {
        "command": command,
        "config": {
            "array": {"dimension": "1 or 2", "spacing": "lattice constant in lambda0, (0, 0.5)",
                      "polarization": "parallel | perpendicular | circular (2D)",
                      "quality_factor": "omega_eg / gamma0 (default 1e6)",
                      "sum_tol": "2D lattice-sum tolerance"},
            "tolerances": {"rtol": "relative quadrature tolerance (default per dimension)"},
            "sweep": "list of {variable, start, stop, count, spacing: linear|log} or "
                     "{variable, value}; numbers may be expressions in pi, d, k0, b",
            "params": _PARAMS[command],
            "output": {"path": "output file (stdout if absent)", "format": "csv | json",
                       "precision": "significant digits, 6..17"},
        },
        "sweep_variables": sorted(_variables(command, ArrayConfig())),
        "columns": _columns(RunConfig(command, ArrayConfig())),
        "notes": "empty fields mark closed channels or undefined values; energies in gamma0, "
                 "lengths in lambda0; 2D momenta use x/y suffixed variables",
    }


def build_parser():
    parser = argparse.ArgumentParser(prog="arrayscatter",
                                     description="Two-excitation scattering off atomic arrays.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int)
        p.add_argument("--tol", type=float, help="relative quadrature tolerance")
        p.add_argument("--precision", type=int, help="significant digits (6..17)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. array.spacing=0.3")
        p.add_argument("--schema", action="store_true", help="print the config/column schema")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.schema:
        print(json.dumps(schema(args.command), indent=1, sort_keys=True))
        return EXIT_OK
    try:
        run = resolve(args.command, load_document(args.config, args.set), args)
        columns, rows, ok = execute(run)
        text = render(run, columns, rows)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if run.out:
        with open(run.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("oracle discrepancies above tolerance", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


__all__ = ["main", "RunConfig", "Axis", "resolve", "load_document", "execute", "render",
           "format_number", "evaluate", "schema"]
