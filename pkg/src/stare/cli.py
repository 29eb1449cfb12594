"""Command-line interface.

Every subcommand resolves its parameters from built-in defaults, then an
optional ``--config`` file (flat TOML, or the ``#`` JSON header of a file
this tool wrote), then explicit flags. The resolved set is echoed into the
output header, so feeding an output file back as ``--config`` reproduces it.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import (DimensionError, IntegrationError, InvalidStateError,
                     ParameterError, QuadratureError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
OUTPUT_ENV = "STARE_OUTPUT_DIR"

CORE_KEYS = ("a", "b", "di", "df")
PHYS_KEYS = ("g0", "omega_a", "kappa", "nbar", "x0", "ti", "tf")

DEFAULTS = {
    "evolve": {"kind": None, "schedule": "linear", "points": 101,
               "rtol": 1e-10, "atol": 1e-12, "rate_profile": "constant",
               "states": False},
    "scan": {"axis": [], "fixed": [], "protocols": "OptimalStare,Analytic",
             "workers": 1, "rtol": 1e-10, "atol": 1e-12, "record_timing": False},
    "schedule": {"kind": "linear", "points": 11},
    "analytic": {"target": None},
    "validity": {"g0": 1.0, "omega_a": 1.0, "kappa": 1.0, "nbar": 0.0,
                 "x0": 0.0, "schedule": "linear", "T": None, "ti": None, "tf": None},
    "x0sweep": {"g0": 1.0, "omega_a": 1.0, "kappa": 1.0, "nbar": 0.0,
                "ti": -20.0, "tf": 20.0, "x0_list": "0,0.5,1,2",
                "schedules": "linear,rc,os", "workers": 1, "rtol": 1e-10,
                "atol": 1e-12, "os_min_x0": 0.8},
}
COMPOSITE_DEFAULTS = {"g0": 1.0, "omega_a": 1.0, "kappa": 1.0, "nbar": 0.0,
                      "x0": 0.0, "ti": -20.0, "tf": 20.0}


class UsageError(Exception):
    pass


def _add(p, *names, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*names, **kw)


def _core_flags(p):
    _add(p, "--a", type=float, help="adiabaticity g0*T")
    _add(p, "--b", type=float, help="dephasing strength gamma*T")
    _add(p, "--di", type=float, help="initial sweep value d_i")
    _add(p, "--df", type=float, help="final sweep value d_f")


def _phys_flags(p):
    _add(p, "--g0", type=float)
    _add(p, "--omega-a", dest="omega_a", type=float)
    _add(p, "--kappa", type=float)
    _add(p, "--nbar", type=float)
    _add(p, "--x0", type=float)
    _add(p, "--ti", type=float)
    _add(p, "--tf", type=float)


def _common(p):
    _add(p, "--config", help="TOML file or a previous output file")
    _add(p, "--output", "-o", help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="stare", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="integrate one protocol and write the infidelity series")
    _common(p)
    _add(p, "--kind", choices=["unitary", "stare", "composite"])
    _add(p, "--schedule", choices=["linear", "rc", "os"])
    _core_flags(p)
    _phys_flags(p)
    _add(p, "--points", type=int, help="output grid size")
    _add(p, "--rtol", type=float)
    _add(p, "--atol", type=float)
    _add(p, "--rate-profile", dest="rate_profile", choices=["constant", "gap_squared"])
    _add(p, "--states", action="store_true", help="also dump density-matrix entries")

    p = sub.add_parser("scan", help="grid scan over (a, b, d_i, d_f)")
    _common(p)
    _add(p, "--axis", action="append",
         help="NAME:MIN:MAX:COUNT[:log], NAME in a,b,d_i,d_f,d_sym (repeatable)")
    _add(p, "--fixed", action="append", help="NAME=VALUE (repeatable)")
    _add(p, "--protocols", help="comma list of Linear,RolandCerf,OptimalStare,Analytic")
    _add(p, "--workers", type=int)
    _add(p, "--rtol", type=float)
    _add(p, "--atol", type=float)
    _add(p, "--record-timing", dest="record_timing", action="store_true")

    p = sub.add_parser("schedule", help="tabulate q and dq/dtau")
    _common(p)
    _add(p, "--kind", choices=["linear", "rc", "os"])
    _core_flags(p)
    _add(p, "--points", type=int)

    p = sub.add_parser("analytic", help="closed-form infidelity results")
    _common(p)
    _core_flags(p)
    _add(p, "--target", type=float, help="target infidelity for the minimum time")

    p = sub.add_parser("validity", help="Born-Markov validity ratios")
    _common(p)
    _phys_flags(p)
    _add(p, "--T", dest="T", type=float, help="total time; sets ti=-T/2, tf=T/2")
    _add(p, "--schedule", choices=["linear", "rc", "os"])

    p = sub.add_parser("x0sweep", help="final composite infidelity versus x0")
    _common(p)
    _phys_flags(p)
    _add(p, "--x0-list", dest="x0_list", help="comma list of x0 values")
    _add(p, "--schedules", help="comma list of linear,rc,os")
    _add(p, "--workers", type=int)
    _add(p, "--rtol", type=float)
    _add(p, "--atol", type=float)
    _add(p, "--os-min-x0", dest="os_min_x0", type=float)
    return parser


def load_config(path, command):
    """Flat mapping from a TOML file or an output header."""
    with open(path, "rb") as fh:
        head = fh.read(1)
    if head == b"#":
        with open(path) as fh:
            meta = json.loads(fh.readline()[1:])
        if meta.get("command") != command:
            raise UsageError(f"{path} was written by '{meta.get('command')}', not '{command}'")
        return dict(meta["config"])
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    if command in data and isinstance(data[command], dict):
        data = data[command]
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(command, ns):
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "output")}
    cfg = dict(DEFAULTS[command])
    if getattr(ns, "config", None):
        cfg.update(load_config(ns.config, command))
    cfg.update(flags)
    return cfg


def _output_path(ns):
    path = getattr(ns, "output", None)
    if path is None or path == "-":
        return None
    base = os.environ.get(OUTPUT_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    return path


def _emit(text, ns):
    path = _output_path(ns)
    if path is None:
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _header(command, cfg):
    meta = {"command": command, "config": cfg, "version": __version__}
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def _table(columns, rows):
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating))
                              else str(v) for v in r))
    return "\n".join(lines) + "\n"


def _need(cfg, keys, what):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{what} requires --{' --'.join(missing)}")


def _sweep(cfg, kind):
    from .schedules import SweepSpec

    _need(cfg, CORE_KEYS, "this command")
    return SweepSpec(cfg["a"], cfg["b"], cfg["di"], cfg["df"], kind)


def _composite(cfg, schedule):
    from .microscopic import CompositeParams

    full = dict(COMPOSITE_DEFAULTS)
    full.update({k: cfg[k] for k in PHYS_KEYS if cfg.get(k) is not None})
    return CompositeParams(g0=full["g0"], omega_a=full["omega_a"], kappa=full["kappa"],
                           nbar=full["nbar"], x0=full["x0"], t_i=full["ti"],
                           t_f=full["tf"], schedule=schedule)


def cmd_evolve(cfg, ns):
    from .integrator import IntegrationConfig, evolve, infidelity_series
    from .liouvillians import LiouvillianSpec
    from .microscopic import run_composite

    kind = cfg.get("kind")
    if kind is None:
        raise UsageError("evolve requires --kind")
    given_core = [k for k in CORE_KEYS if cfg.get(k) is not None]
    given_phys = [k for k in PHYS_KEYS if cfg.get(k) is not None]
    conf = IntegrationConfig(rtol=cfg["rtol"], atol=cfg["atol"], output_grid=int(cfg["points"]))
    if kind == "composite":
        if given_core:
            raise UsageError("composite runs take physical flags only, got "
                             + ", ".join(given_core))
        for k in PHYS_KEYS:
            cfg.setdefault(k, None)
            if cfg[k] is None:
                cfg[k] = COMPOSITE_DEFAULTS[k]
        params = _composite(cfg, cfg["schedule"])
        run = run_composite(params, conf)
        traj, series = run.reduced, run.infidelity
    else:
        if given_phys:
            raise UsageError(f"{kind} runs take dimensionless flags only, got "
                             + ", ".join(given_phys))
        sweep = _sweep(cfg, cfg["schedule"])
        if kind == "unitary":
            spec = LiouvillianSpec.unitary(sweep)
        else:
            spec = LiouvillianSpec.stare(sweep, rate_profile=cfg["rate_profile"])
        from .core import eigenframe

        traj = evolve(spec, eigenframe(0.0, sweep.a, sweep.d_i).p_minus, (0.0, 1.0), conf)
        series = infidelity_series(traj, sweep, spec.schedule)
    columns = ["time", "infidelity", "trace_deviation", "min_eigenvalue"]
    rows = [[t, i, dv, lo] for t, i, dv, lo in
            zip(traj.times, series, traj.trace_deviation, traj.min_eigenvalue)]
    if cfg["states"]:
        n = traj.states.shape[1]
        for i in range(n):
            for j in range(n):
                columns += [f"re_{i}{j}", f"im_{i}{j}"]
        for row, st in zip(rows, traj.states):
            for i in range(n):
                for j in range(n):
                    row += [st[i, j].real, st[i, j].imag]
    _emit(_header("evolve", cfg) + _table(columns, rows), ns)


def _parse_axis(text):
    from .scan import Axis

    if isinstance(text, dict):
        return Axis(**text)
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise UsageError(f"bad axis {text!r}; expected NAME:MIN:MAX:COUNT[:log]")
    try:
        return Axis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]),
                    parts[4] if len(parts) == 5 else "linear")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_fixed(items):
    if isinstance(items, dict):
        return {k: float(v) for k, v in items.items()}
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"bad fixed parameter {item!r}; expected NAME=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def _split(text):
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text).split(",") if t.strip()]


def cmd_scan(cfg, ns):
    from .scan import ScanSpec, run_scan

    axes = [_parse_axis(a) for a in cfg["axis"]]
    if not axes:
        raise UsageError("scan requires at least one --axis")
    spec = ScanSpec(axes=axes, protocols=_split(cfg["protocols"]),
                    fixed=_parse_fixed(cfg["fixed"]), workers=int(cfg["workers"]),
                    rtol=float(cfg["rtol"]), atol=float(cfg["atol"]),
                    record_timing=bool(cfg["record_timing"]))
    result = run_scan(spec)
    # echo in the same flat form the parser accepts
    result.metadata["config"] = {
        "axis": [":".join([a.name, repr(a.min), repr(a.max), str(a.count), a.spacing])
                 for a in spec.axes],
        "fixed": [f"{k}={v!r}" for k, v in sorted(spec.fixed.items())],
        "protocols": ",".join(p.value for p in spec.protocols),
        "workers": spec.workers, "rtol": spec.rtol, "atol": spec.atol,
        "record_timing": spec.record_timing}
    _emit(result.to_csv_text(), ns)
    return result


def cmd_schedule(cfg, ns):
    from .schedules import make_schedule

    sweep = _sweep(cfg, cfg["kind"])
    n = int(cfg["points"])
    if n < 2:
        raise UsageError("--points must be at least 2")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sched = make_schedule(sweep)
    tau = np.linspace(0.0, 1.0, n)
    q = np.atleast_1d(sched.q(tau)).astype(float)
    q[0], q[-1] = 0.0 if abs(q[0]) < 1e-10 else q[0], 1.0 if abs(q[-1] - 1) < 1e-10 else q[-1]
    qd = np.atleast_1d(sched.qdot(tau)) * np.ones_like(tau)
    rows = [[t, a, b] for t, a, b in zip(tau, q, qd)]
    _emit(_header("schedule", cfg) + _table(["tau", "q", "qdot"], rows), ns)


def cmd_analytic(cfg, ns):
    from . import analytics as an
    from .schedules import xi_constant

    sweep = _sweep(cfg, "os")
    if not sweep.b > 0:
        raise UsageError("analytic results need b > 0")
    imin = an.i_min(sweep)
    target = cfg.get("target") or imin
    out = {
        "mass_at_midpoint": float(an.mass_function(0.5, sweep)),
        "i_min": imin,
        "xi": xi_constant(sweep),
        "i_leading_os": an.infidelity_leading("os", sweep),
        "i_leading_rc": an.infidelity_leading("rc", sweep),
        "i_leading_linear": an.infidelity_leading("linear", sweep),
        "correction_os": an.correction_C("os", sweep),
        "t_min_g0_units": an.t_min(sweep.b / sweep.a, target, 1.0, sweep.d_i, sweep.d_f),
        "t_min_target": target,
    }
    try:
        out["correction_os_closed_form"] = an.correction_C_closed_form(sweep)
    except ParameterError:
        out["correction_os_closed_form"] = None
    a2 = sweep.a / (sweep.d_f - sweep.d_i)
    bb = sweep.b / sweep.a
    out["lz_formula"] = an.lz_asymptotics("lz", a2)
    out["linear_weak_dephasing"] = an.lz_asymptotics("weak", a2, bb)
    out["linear_strong_dephasing"] = an.lz_asymptotics("strong", a2, bb)
    rows = [[k, "" if v is None else v] for k, v in out.items()]
    _emit(_header("analytic", cfg) + _table(["quantity", "value"], rows), ns)
    return out


def cmd_validity(cfg, ns):
    from .microscopic import validity_report

    T = cfg.get("T")
    ti, tf = cfg.get("ti"), cfg.get("tf")
    if T is not None and ti is None and tf is None:
        ti, tf = -0.5 * T, 0.5 * T
    ti = -20.0 if ti is None else ti
    tf = 20.0 if tf is None else tf
    params = _composite(dict(cfg, ti=ti, tf=tf), cfg["schedule"])
    report = validity_report(params, T=T)
    rows = [[k, v] for k, v in report.as_dict().items()]
    _emit(_header("validity", cfg) + _table(["quantity", "value"], rows), ns)
    return report


def cmd_x0sweep(cfg, ns):
    from .scan import run_x0_sweep

    template = _composite(dict(cfg, x0=0.0), "linear")
    result = run_x0_sweep(template, [float(x) for x in _split(cfg["x0_list"])],
                          _split(cfg["schedules"]), workers=int(cfg["workers"]),
                          rtol=float(cfg["rtol"]), atol=float(cfg["atol"]),
                          os_min_x0=float(cfg["os_min_x0"]))
    result.metadata["config"] = cfg
    _emit(result.to_csv_text(), ns)
    return result


COMMANDS = {"evolve": cmd_evolve, "scan": cmd_scan, "schedule": cmd_schedule,
            "analytic": cmd_analytic, "validity": cmd_validity, "x0sweep": cmd_x0sweep}


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve(ns.command, ns)
        COMMANDS[ns.command](cfg, ns)
    except (UsageError, ParameterError, DimensionError, InvalidStateError,
            FileNotFoundError, KeyError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"stare {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, QuadratureError, FloatingPointError) as exc:
        print(f"stare {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
