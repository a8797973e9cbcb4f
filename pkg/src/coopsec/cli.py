"""Command-line front end.

Config files are flat ``key = value`` text; ``#`` starts a comment.  List
values are comma separated and integer lists accept ``a..b`` ranges.
Numeric values may carry a unit suffix (``m``, ``W``, ``mW``, ``dBm``,
``b/s/Hz``); powers given in dBm are converted to watts on input.

Exit status: 0 on success, 2 for config errors, 3 when every requested
result is infeasible, 1 for I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone

from . import __version__
from .channel import PRNG_ID, GeometryConfig, dbm_to_watts, sample_scenario
from .design import Objective, solve
from .errors import InvalidConfig, ParseError, SecrecyError, UnitError, UnknownKey
from .montecarlo import PRESETS, Strategy, SweepConfig, SweepResult, SweepRow, run_sweep
from .secrecy import Stage1Accounting

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

CSV_COLUMNS = ("n_nodes", "n_eavesdroppers", "strategy", "metric_name", "mean", "stderr", "infeasible", "trials")

# key -> unit kind
_KEYS = {
    "wavelength": "length",
    "cluster_radius": "length",
    "path_loss_exponent": "number",
    "noise_power": "power",
    "noise_power_dbm": "dbm",
    "dest_distance": "length",
    "eav_distance_min": "length",
    "eav_distance_max": "length",
    "phase_model": "word",
    "n_nodes": "intlist",
    "n_eavesdroppers": "intlist",
    "strategy": "wordlist",
    "target_secrecy": "rate",
    "transmit_power": "power",
    "transmit_power_dbm": "dbm",
    "trials": "int",
    "seed": "int",
    "csi_error_variance": "number",
    "stage1": "bool",
    "stage1_power": "power",
    "stage1_power_dbm": "dbm",
    "threshold": "power",
    "max_iter": "int",
}

_UNITS = {
    "length": {"m": 1.0},
    "power": {"W": 1.0, "mW": 1e-3},
    "rate": {"b/s/Hz": 1.0, "bps/Hz": 1.0},
}


@dataclass
class RunManifest:
    config_path: str | None
    config: dict
    base_seed: int
    prng: str = PRNG_ID
    version: str = __version__
    timestamp: str = ""
    outputs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.timestamp:
            epoch = os.environ.get("SOURCE_DATE_EPOCH")
            when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
            self.timestamp = when.isoformat(timespec="seconds")


def _number(raw: str, kind: str, line: int, col: int) -> float:
    parts = raw.split()
    if len(parts) > 2 or not parts:
        raise ParseError(f"cannot read {raw!r} as a number", line, col)
    try:
        value = float(parts[0])
    except ValueError:
        raise ParseError(f"cannot read {parts[0]!r} as a number", line, col) from None
    if not math.isfinite(value):
        raise ParseError("value must be finite", line, col)
    unit = parts[1] if len(parts) == 2 else None
    if kind == "dbm":
        if unit not in (None, "dBm"):
            raise UnitError(f"expected dBm, got {unit!r}", line, col)
        return dbm_to_watts(value)
    if unit is None:
        return value
    if kind == "power" and unit == "dBm":
        return dbm_to_watts(value)
    table = _UNITS.get(kind, {})
    if unit not in table:
        raise UnitError(f"unit {unit!r} is not valid here", line, col)
    return value * table[unit]


def _int(raw: str, line: int, col: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ParseError(f"cannot read {raw.strip()!r} as an integer", line, col) from None


def _intlist(raw: str, line: int, col: int) -> tuple[int, ...]:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if ".." in item:
            lo, hi = item.split("..", 1)
            out.extend(range(_int(lo, line, col), _int(hi, line, col) + 1))
        elif item:
            out.append(_int(item, line, col))
    if not out:
        raise ParseError("empty list", line, col)
    return tuple(out)


def _read_pairs(text: str):
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ParseError("expected 'key = value'", lineno, col)
        key, value = body.split("=", 1)
        key_col = len(key) - len(key.lstrip()) + 1
        key = key.strip()
        if key not in _KEYS:
            raise UnknownKey(f"unknown key {key!r}", lineno, key_col)
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", lineno, key_col)
        val_col = len(body.split("=", 1)[0]) + 2 + (len(value) - len(value.lstrip()))
        seen[key] = (value.strip(), lineno, val_col)
    return seen


def parse_config(text: str) -> SweepConfig:
    """Build a :class:`SweepConfig` from a config document.

    Unset keys fall back to the 900 MHz simulation defaults: -60 dBm noise,
    0.33 m wavelength, cluster radius 5 wavelengths, destination at 20 radii,
    eavesdroppers at 40 to 100 radii, path-loss exponent 4.
    """
    pairs = _read_pairs(text)
    v: dict = {}
    for key, (raw, line, col) in pairs.items():
        kind = _KEYS[key]
        if kind in ("length", "power", "rate", "number", "dbm"):
            v[key] = _number(raw, kind, line, col)
        elif kind == "int":
            v[key] = _int(raw, line, col)
        elif kind == "intlist":
            v[key] = _intlist(raw, line, col)
        elif kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "on", "off", "yes", "no", "1", "0"):
                raise ParseError(f"cannot read {raw!r} as a boolean", line, col)
            v[key] = low in ("true", "on", "yes", "1")
        elif kind == "wordlist":
            v[key] = tuple(w.strip() for w in raw.split(",") if w.strip())
        else:
            v[key] = raw

    def where(key):
        for k in (key, key + "_dbm"):
            if k in pairs:
                return pairs[k][1:]
        return (0, 0)

    for a, b in (("noise_power", "noise_power_dbm"), ("transmit_power", "transmit_power_dbm"),
                 ("stage1_power", "stage1_power_dbm")):
        if a in v and b in v:
            raise ParseError(f"give only one of {a} and {b}", *where(b))
        if b in v:
            v[a] = v.pop(b)

    if any(n < 1 for n in v.get("n_nodes", (1,))):
        raise ParseError("n_nodes must be >= 1", *where("n_nodes"))
    if any(j < 0 for j in v.get("n_eavesdroppers", (0,))):
        raise ParseError("n_eavesdroppers must be >= 0", *where("n_eavesdroppers"))
    if v.get("seed", 0) < 0 or v.get("seed", 0) >= 2**64:
        raise ParseError("seed must be an unsigned 64-bit integer", *where("seed"))

    try:
        strategies = tuple(Strategy(s) for s in v.get("strategy", ("coop_min_power",)))
    except ValueError:
        raise ParseError(
            f"strategy must be from {[s.value for s in Strategy]}", *where("strategy")
        ) from None
    if not strategies:
        raise ParseError("strategy list is empty", *where("strategy"))
    objective = strategies[0].objective
    if objective is Objective.MIN_POWER:
        if "transmit_power" in v:
            raise ParseError("transmit power is fixed only for max-secrecy strategies", *where("transmit_power"))
        fixed = v.get("target_secrecy", 3.0)
    else:
        if "target_secrecy" in v:
            raise ParseError("target_secrecy applies only to min-power strategies", *where("target_secrecy"))
        fixed = v.get("transmit_power", dbm_to_watts(5.0))

    wavelength = v.get("wavelength", 0.33)
    radius = v.get("cluster_radius", 5 * wavelength)
    try:
        geometry = GeometryConfig(
            wavelength=wavelength,
            cluster_radius=radius,
            path_loss_exponent=v.get("path_loss_exponent", 4.0),
            noise_power=v.get("noise_power", dbm_to_watts(-60.0)),
            dest_distance=v.get("dest_distance", 20 * radius),
            eav_distance_range=(v.get("eav_distance_min", 40 * radius), v.get("eav_distance_max", 100 * radius)),
            phase_model=v.get("phase_model", "geometric"),
        )
        stage1 = Stage1Accounting(enabled=v.get("stage1", False), stage1_power=v.get("stage1_power", 0.0))
        return SweepConfig(
            geometry=geometry,
            n_nodes=v.get("n_nodes", (10, 30, 50)),
            n_eavesdroppers=v.get("n_eavesdroppers", (1, 2, 3, 4, 5, 6)),
            strategies=strategies,
            fixed_value=fixed,
            trials=v.get("trials", 1000),
            base_seed=v.get("seed", 1),
            csi_error_variance=v.get("csi_error_variance"),
            stage1=stage1,
            threshold=v.get("threshold", 1e-9),
            max_iter=v.get("max_iter", 100),
        )
    except (InvalidConfig, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else format(x, ".12g")


def emit_results(result: SweepResult, fmt: str = "csv", manifest: RunManifest | None = None) -> bytes:
    """Serialize a sweep as CSV (header + rows) or JSON (rows + manifest)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in result.rows:
            writer.writerow([r.n_nodes, r.n_eavesdroppers, r.strategy, r.metric_name,
                             _fmt(r.mean), _fmt(r.stderr), r.infeasible, r.trials])
        return buf.getvalue().encode("ascii")
    if fmt == "json":
        rows = []
        for r in result.rows:
            d = asdict(r)
            for k in ("mean", "stderr"):
                d[k] = None if math.isnan(d[k]) else d[k]
            rows.append(d)
        doc = {"manifest": asdict(manifest) if manifest else None, "metadata": result.metadata, "rows": rows}
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def load_json_rows(data: bytes) -> list[SweepRow]:
    rows = []
    for d in json.loads(data)["rows"]:
        d = dict(d)
        for k in ("mean", "stderr"):
            d[k] = math.nan if d[k] is None else d[k]
        rows.append(SweepRow(**d))
    return rows


def _write(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _load_config(path: str | None) -> SweepConfig:
    if path is None:
        return parse_config("")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _run_and_emit(config: SweepConfig, args) -> int:
    result = run_sweep(config)
    manifest = RunManifest(config_path=args.config, config=config.echo(), base_seed=config.base_seed)
    out = args.out
    if out and out != "-":
        manifest.outputs.append(out)
        if args.format == "csv":
            side = out + ".manifest.json"
            manifest.outputs.append(side)
            _write((json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n").encode(), side)
    _write(emit_results(result, args.format, manifest), out)
    if all(r.infeasible == r.trials for r in result.rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.preset:
        config = replace(config, **PRESETS[args.preset])
    return _run_and_emit(_override(config, args), args)


def _cmd_figure(args) -> int:
    config = replace(_load_config(args.config), **PRESETS[args.preset])
    return _run_and_emit(_override(config, args), args)


def _override(config: SweepConfig, args) -> SweepConfig:
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return replace(config, **changes) if changes else config


def _cmd_solve(args) -> int:
    config = _override(_load_config(args.config), args)
    if args.preset:
        config = replace(config, **PRESETS[args.preset])
    n = args.nodes if args.nodes is not None else config.n_nodes[0]
    j = args.eavesdroppers if args.eavesdroppers is not None else config.n_eavesdroppers[0]
    geom = replace(config.geometry, n_nodes=n, n_eavesdroppers=j)
    scenario = sample_scenario(geom, config.base_seed)
    problem = config.problem()
    report = {"n_nodes": n, "n_eavesdroppers": j, "seed": config.base_seed, "objective": problem.objective.value}
    code = EXIT_OK
    try:
        sol, trace = solve(problem, scenario.h, scenario.G, scenario.noise_power)
    except SecrecyError as exc:
        report["infeasible"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_INFEASIBLE
    else:
        report.update(
            weights=[[float(z.real), float(z.imag)] for z in sol.w],
            transmit_power=sol.transmit_power,
            c_dest=sol.c_dest,
            c_eav=list(sol.c_eav),
            secrecy_capacity=sol.secrecy_capacity,
            secrecy_is_lower_bound=sol.secrecy_is_bound,
        )
        if trace is not None:
            report["iterations"] = trace.iterations
            report["trace_powers"] = trace.powers
    _write((json.dumps(report, indent=2) + "\n").encode(), args.out)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopsec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset_required=False):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--preset", choices=sorted(PRESETS), required=preset_required)

    p = sub.add_parser("solve", help="solve one sampled scenario and print the weights")
    common(p)
    p.add_argument("--nodes", type=int, help="N (default: first grid value)")
    p.add_argument("--eavesdroppers", type=int, help="J (default: first grid value)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over the configured grid")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("figure", help="run a named figure preset")
    common(p, preset_required=True)
    p.set_defaults(func=_cmd_figure)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
