"""Parameter-grid scans and x0 sweeps with deterministic CSV output.

Files start with one ``#``-prefixed JSON line holding the resolved
configuration, followed by a plain CSV table. Floats are written with
``repr`` so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import itertools
import json
import multiprocessing as mp
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analytics import i_min
from .errors import ParameterError
from .integrator import IntegrationConfig, run_protocol
from .microscopic import CompositeParams, run_composite
from .schedules import ScheduleKind, SweepSpec

AXIS_NAMES = ("a", "b", "d_i", "d_f", "d_sym")
SCAN_FIXED_DEFAULTS = {"a": 2.0, "b": 100.0, "d_i": -100.0, "d_f": 100.0}


class Protocol(str, enum.Enum):
    LINEAR = "Linear"
    ROLAND_CERF = "RolandCerf"
    OPTIMAL_STARE = "OptimalStare"
    ANALYTIC = "Analytic"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for p in cls:
            if p.value.lower() == key:
                return p
        alias = {"lz": cls.LINEAR, "rc": cls.ROLAND_CERF, "os": cls.OPTIMAL_STARE}
        if key in alias:
            return alias[key]
        raise ParameterError(f"unknown protocol {value!r}")


PROTOCOL_ORDER = {p: i for i, p in enumerate(Protocol)}


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ParameterError(f"unknown axis {self.name!r}; use one of {AXIS_NAMES}")
        if self.count < 1:
            raise ParameterError("axis count must be at least 1")
        if self.count > 1 and not self.min < self.max:
            raise ParameterError("axis min must be below max")
        if self.spacing not in ("linear", "log"):
            raise ParameterError("spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.min <= 0:
            raise ParameterError("log spacing needs positive bounds")

    def values(self):
        if self.count == 1:
            return np.array([self.min])
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class ScanSpec:
    axes: Sequence[Axis]
    protocols: Sequence[Protocol]
    fixed: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    workers: int = 1
    rtol: float = 1e-10
    atol: float = 1e-12
    record_timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(
            a if isinstance(a, Axis) else Axis(**a) for a in self.axes))
        object.__setattr__(self, "protocols", tuple(
            sorted({Protocol.parse(p) for p in self.protocols}, key=PROTOCOL_ORDER.get)))
        if not self.protocols:
            raise ParameterError("protocol list is empty")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ParameterError("duplicate axis names")
        for key in self.fixed:
            if key not in AXIS_NAMES:
                raise ParameterError(f"unknown fixed parameter {key!r}")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    def echo(self):
        return {
            "axes": [asdict(a) for a in self.axes],
            "protocols": [p.value for p in self.protocols],
            "fixed": dict(sorted(self.fixed.items())),
            "workers": self.workers, "rtol": self.rtol, "atol": self.atol,
            "record_timing": self.record_timing,
        }

    def points(self):
        """Grid points as dicts with keys a, b, d_i, d_f."""
        base = dict(SCAN_FIXED_DEFAULTS)
        for k, v in self.fixed.items():
            _assign(base, k, float(v))
        out = []
        for combo in itertools.product(*[a.values() for a in self.axes]):
            p = dict(base)
            for axis, v in zip(self.axes, combo):
                _assign(p, axis.name, float(v))
            out.append(p)
        return out


def _assign(p, name, value):
    if name == "d_sym":
        p["d_i"], p["d_f"] = -abs(value), abs(value)
    else:
        p[name] = value


@dataclass
class ScanResult:
    columns: List[str]
    rows: List[dict]
    metadata: dict

    def to_csv_text(self):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.metadata, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def select(self, **match):
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(path):
    """Parse a scan file back into (metadata, rows-as-strings)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ParameterError(f"{path} has no metadata header")
        meta = json.loads(first[1:])
        rows = list(csv.DictReader(fh))
    return meta, rows


def spec_hash(payload):
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _pool(workers):
    methods = mp.get_all_start_methods()
    ctx = mp.get_context("fork" if "fork" in methods else "spawn")
    return ProcessPoolExecutor(max_workers=workers, mp_context=ctx)


def _blocks(items, workers):
    """Static contiguous partition of ``items`` into ``workers`` blocks."""
    return [list(b) for b in np.array_split(np.arange(len(items)), workers) if len(b)]


def _map_static(fn, tasks, workers):
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    blocks = _blocks(tasks, workers)
    with _pool(len(blocks)) as ex:
        futures = [ex.submit(_run_block, fn, [tasks[i] for i in b]) for b in blocks]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out


def _run_block(fn, tasks):
    return [fn(t) for t in tasks]


def _scan_task(task):
    point, protocol, rtol, atol, timing = task
    row = {"a": point["a"], "b": point["b"], "d_i": point["d_i"],
           "d_f": point["d_f"], "protocol": protocol.value,
           "infidelity": None, "i_min": None, "delta_i": None,
           "status": "ok", "error": ""}
    start = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cfg = IntegrationConfig(rtol=rtol, atol=atol, output_grid=2)
            if protocol is Protocol.ANALYTIC:
                row["infidelity"] = i_min(SweepSpec(**point))
                row["i_min"] = row["infidelity"]
            elif protocol is Protocol.ROLAND_CERF:
                spec = SweepSpec(kind=ScheduleKind.ROLAND_CERF, **point)
                _, row["infidelity"] = run_protocol(spec, dephasing=False, config=cfg)
            elif protocol is Protocol.LINEAR:
                spec = SweepSpec(kind=ScheduleKind.LINEAR, **point)
                _, row["infidelity"] = run_protocol(spec, config=cfg)
            else:
                spec = SweepSpec(kind=ScheduleKind.OPTIMAL_STARE, **point)
                _, row["infidelity"] = run_protocol(spec, config=cfg)
                row["i_min"] = i_min(spec) if spec.b > 0 else None
    except Exception as exc:  # recorded, scan continues
        row.update(status="error", error=type(exc).__name__, infidelity=None)
    if timing:
        row["wall_time"] = time.perf_counter() - start
    return row


def _row_key(r):
    return (r["a"], r["b"], r["d_i"], r["d_f"], PROTOCOL_ORDER[Protocol.parse(r["protocol"])])


SCAN_COLUMNS = ["a", "b", "d_i", "d_f", "protocol", "infidelity", "i_min",
                "delta_i", "status", "error"]


def run_scan(spec: ScanSpec) -> ScanResult:
    """Evaluate every protocol on every grid point.

    delta_i = I(OptimalStare) - I(RolandCerf) is filled on OptimalStare rows
    when both protocols ran.
    """
    tasks = [(p, proto, spec.rtol, spec.atol, spec.record_timing)
             for p in spec.points() for proto in spec.protocols]
    rows = sorted(_map_static(_scan_task, tasks, spec.workers), key=_row_key)
    by_point = {}
    for r in rows:
        by_point.setdefault(_row_key(r)[:4], {})[r["protocol"]] = r
    for group in by_point.values():
        os_row = group.get(Protocol.OPTIMAL_STARE.value)
        rc_row = group.get(Protocol.ROLAND_CERF.value)
        if os_row and rc_row and os_row["infidelity"] is not None \
                and rc_row["infidelity"] is not None:
            os_row["delta_i"] = os_row["infidelity"] - rc_row["infidelity"]
    echo = spec.echo()
    meta = {"command": "scan", "config": echo, "version": __version__,
            "spec_hash": spec_hash(echo),
            "tolerances": {"rtol": spec.rtol, "atol": spec.atol}}
    columns = SCAN_COLUMNS + (["wall_time"] if spec.record_timing else [])
    result = ScanResult(columns, rows, meta)
    if spec.output:
        result.write(spec.output)
    return result


def _x0_task(task):
    template, x0, kind, rtol, atol, os_min_x0 = task
    row = {"x0": x0, "schedule": kind.value, "infidelity": None,
           "status": "ok", "error": ""}
    if kind is ScheduleKind.OPTIMAL_STARE and x0 < os_min_x0:
        row["status"] = "skipped"
        return row
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            params = template.with_(x0=x0, schedule=kind)
            run = run_composite(params, IntegrationConfig(rtol=rtol, atol=atol,
                                                          output_grid=2))
        row["infidelity"] = run.final_infidelity
    except Exception as exc:
        row.update(status="error", error=type(exc).__name__)
    return row


X0_COLUMNS = ["x0", "schedule", "infidelity", "status", "error"]
SCHEDULE_ORDER = {k: i for i, k in enumerate(ScheduleKind)}


def run_x0_sweep(template: CompositeParams, x0_list, schedules=("linear", "rc", "os"),
                 workers=1, rtol=1e-10, atol=1e-12, os_min_x0=0.8,
                 output=None) -> ScanResult:
    """Final composite infidelity for every (x0, schedule) pair.

    Optimal-schedule rows below ``os_min_x0`` are reported as ``skipped``:
    the schedule assumes a dephasing rate well above 1/T.
    """
    kinds = sorted({ScheduleKind.parse(s) for s in schedules}, key=SCHEDULE_ORDER.get)
    if not kinds:
        raise ParameterError("schedule list is empty")
    x0s = sorted(float(x) for x in x0_list)
    if not x0s:
        raise ParameterError("x0 list is empty")
    tasks = [(template, x0, k, rtol, atol, os_min_x0) for x0 in x0s for k in kinds]
    rows = _map_static(_x0_task, tasks, workers)
    rows.sort(key=lambda r: (r["x0"], SCHEDULE_ORDER[ScheduleKind.parse(r["schedule"])]))
    echo = {"template": composite_echo(template), "x0": x0s,
            "schedules": [k.value for k in kinds], "workers": workers,
            "rtol": rtol, "atol": atol, "os_min_x0": os_min_x0}
    meta = {"command": "x0sweep", "config": echo, "version": __version__,
            "spec_hash": spec_hash(echo),
            "tolerances": {"rtol": rtol, "atol": atol}}
    result = ScanResult(list(X0_COLUMNS), rows, meta)
    if output:
        result.write(output)
    return result


def composite_echo(p: CompositeParams):
    return {"g0": p.g0, "omega_a": p.omega_a, "kappa": p.kappa, "nbar": p.nbar,
            "x0": p.x0, "t_i": p.t_i, "t_f": p.t_f, "schedule": p.schedule.value,
            "s_i": p.s_i, "s_f": p.s_f, "schedule_b": p.schedule_b}
