"""``gwtail`` command-line entry point.

Commands: bound-moment, bound-tail, gls-norm, tauberian, validate.
Exit status: 0 on success, 1 when a dominance/validation check fails,
2 on bad input.  Output files are written only after the whole table has
been computed, so a failed run never leaves a partial file behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from .commands import COMMANDS, RunConfig, Table, parse_grid
from .envelope import SlowVaryFactor, TailEnvelope
from .errors import BracketError, DomainError, QuadratureError

# keys accepted in a --config file, mapped to argparse dests
CONFIG_KEYS = {
    "envelope", "t_grid", "p_grid", "rel_tol", "seed", "format", "out", "linear",
    "beta", "l_factor", "calib", "oracle", "n", "p_max",
}
DEFAULTS = {
    "rel_tol": 1e-9,
    "seed": 12345,
    "format": "csv",
    "linear": False,
    "calib": 1.0,
    "n": 200_000,
}
LINEAR_FLOOR = 1e-300


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gwtail", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        S = argparse.SUPPRESS
        p.add_argument("--config", help="JSON config file; its values win over flags")
        p.add_argument("--envelope", default=S, help="envelope JSON file or inline JSON object")
        p.add_argument("--t-grid", dest="t_grid", default=S, help="min:max:count[:geom]")
        p.add_argument("--p-grid", dest="p_grid", default=S, help="min:max:count[:geom]")
        p.add_argument("--rel-tol", dest="rel_tol", type=float, default=S)
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--format", choices=("csv", "json"), default=S)
        p.add_argument("--out", default=S, help="output path (default: stdout)")
        p.add_argument("--linear", action="store_true", default=S, help="also emit exp() of log columns")
        p.add_argument("--beta", type=float, default=S)
        p.add_argument("--l-factor", dest="l_factor", default=S, help="factor JSON {c, a, b, d}")
        p.add_argument("--calib", type=float, default=S)
        p.add_argument("--oracle", default=S)
        p.add_argument("-n", "--n", dest="n", type=int, default=S, help="Monte Carlo sample size")
        p.add_argument("--p-max", dest="p_max", type=float, default=S)
    return parser


def _load_json_arg(value, what):
    if isinstance(value, dict):
        return value
    text = value.strip()
    if not text.startswith("{"):
        if not os.path.isfile(text):
            raise DomainError(f"{what}: {value!r} is neither inline JSON nor a file")
        with open(text) as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{what}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise DomainError(f"{what}: expected a JSON object")
    return doc


def merge_config(args: argparse.Namespace) -> dict:
    """Flags, then config file on top (with a warning per conflict), then defaults."""
    values = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(doc, dict):
            raise DomainError("config file must hold a JSON object")
        doc = {k.replace("-", "_"): v for k, v in doc.items()}
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        for key, val in doc.items():
            if key in values and values[key] != val:
                print(f"warning: config file overrides --{key.replace('_', '-')}", file=sys.stderr)
            values[key] = val
    for key, val in DEFAULTS.items():
        values.setdefault(key, val)
    return values


def _grid(value):
    if value is None:
        return None
    if isinstance(value, list):
        import numpy as np

        return np.asarray(value, dtype=float)
    return parse_grid(str(value))


def to_run_config(command: str, values: dict) -> RunConfig:
    env = values.get("envelope")
    l_factor = values.get("l_factor")
    try:
        return RunConfig(
            command=command,
            envelope=TailEnvelope.from_dict(_load_json_arg(env, "envelope")) if env is not None else None,
            t_grid=_grid(values.get("t_grid")),
            p_grid=_grid(values.get("p_grid")),
            rel_tol=float(values["rel_tol"]),
            seed=int(values["seed"]),
            fmt=values["format"],
            out=values.get("out"),
            linear=bool(values["linear"]),
            beta=None if values.get("beta") is None else float(values["beta"]),
            l_factor=SlowVaryFactor.from_dict(_load_json_arg(l_factor, "l-factor")) if l_factor is not None else None,
            calib=float(values["calib"]),
            oracle=values.get("oracle"),
            n_samples=int(values["n"]),
            p_max=None if values.get("p_max") is None else float(values["p_max"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(str(exc)) from None


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def _jsonable(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _with_linear(table: Table) -> Table:
    cols = list(table.columns)
    for c in table.columns:
        if c.startswith("log_"):
            cols.append(c[4:] + "_linear")
    rows = []
    for r in table.rows:
        r = dict(r)
        for c in table.columns:
            if c.startswith("log_") and r.get(c) is not None:
                val = math.exp(r[c]) if r[c] < 709 else math.inf
                r[c[4:] + "_linear"] = val if val > LINEAR_FLOOR else None
        rows.append(r)
    return Table(cols, rows, table.footer, table.ok)


def render(table: Table, fmt: str, command: str) -> str:
    if fmt == "json":
        doc = {
            "command": command,
            "columns": table.columns,
            "rows": [{c: _jsonable(r.get(c)) for c in table.columns} for r in table.rows],
            "footer": _jsonable(table.footer),
            "ok": table.ok,
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for r in table.rows:
        writer.writerow([_cell(r.get(c)) for c in table.columns])
    for k, v in table.footer.items():
        buf.write(f"# {k}={json.dumps(_jsonable(v))}\n")
    buf.write(f"# ok={'true' if table.ok else 'false'}\n")
    return buf.getvalue()


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gwtail-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = merge_config(args)
        cfg = to_run_config(args.command, values)
        table = COMMANDS[args.command](cfg)
    except (DomainError, BracketError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.linear:
        table = _with_linear(table)
    text = render(table, cfg.fmt, args.command)
    if cfg.out:
        _write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return 0 if table.ok else 1


if __name__ == "__main__":
    sys.exit(main())
