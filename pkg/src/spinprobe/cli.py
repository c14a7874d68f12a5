"""Command-line entry point: ``spinprobe <command> [options]``."""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config, validate_config
from .dynamics import SpinDistribution, build_generator, evolve_trajectory, steady_state
from .fraction import FitError, REFERENCE_FIT, fit_fraction, fit_model, fraction_derivatives, \
    fraction_of_ratio
from .maxima import SCAN_FIELDS, locate_maxima, profile_peaks, scan_bt_grid
from .rates import ENDO_LEVELS, EXO_LEVELS
from .sensitivity import Axis, sensitivity, sensitivity_profile
from .units import BTPoint

ENVELOPE_TAG = "# spinprobe-envelope "
COMMANDS = {
    "fraction": "endoergic fraction and its derivatives over an E_ratio grid",
    "rates": "the 12 spin-exchange rates at the reference point",
    "evolve": "m_F populations over time from an initial state",
    "steady": "steady-state m_F distribution at the reference point",
    "sensitivity": "left/right statistical speed along each axis at the reference point",
    "profile": "sqrtF along one axis over a grid",
    "scan": "sqrtF per axis over a (B, T) grid",
    "maxima": "sensitivity maxima versus fraction-derivative maxima per total energy",
    "fit": "refit the four-parameter fraction model",
}
DEFAULT_FORMAT = {"sensitivity": "json", "maxima": "json", "fit": "json"}


class Table:
    """Tabular payload: column names plus rows."""

    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_payload(payload, fmt: str) -> str:
    if isinstance(payload, Table):
        if fmt == "csv":
            buf = io.StringIO()
            buf.write(",".join(payload.columns) + "\n")
            for row in payload.rows:
                buf.write(",".join(_num(v) for v in row) + "\n")
            return buf.getvalue()
        if fmt == "gnuplot":
            return _gnuplot(payload)
        payload = [dict(zip(payload.columns, row)) for row in payload.rows]
    elif fmt != "json":
        raise ValueError(f"this command produces structured output; use --format json")
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _gnuplot(table: Table) -> str:
    """Whitespace-separated numeric columns; blank line when the first column changes."""
    numeric = [i for i, c in enumerate(table.columns) if c not in ("axis", "error", "direction")]
    lines = ["# " + " ".join(table.columns[i] for i in numeric)]
    group_col = table.columns.index("axis") if "axis" in table.columns else None
    rows = table.rows
    if group_col is not None:
        rows = sorted(rows, key=lambda r: str(r[group_col]))
    prev_group = prev_x = None
    for row in rows:
        if group_col is not None and row[group_col] != prev_group:
            lines += ["", "", f"# axis {row[group_col]}"]
            prev_group, prev_x = row[group_col], None
        elif prev_x is not None and row[0] != prev_x:
            lines.append("")
        prev_x = row[0]
        lines.append(" ".join(_num(row[i]) for i in numeric))
    return "\n".join(lines) + "\n"


def config_hash(cfg_dict: dict) -> str:
    # output destination does not affect results, so it is left out of the hash
    canon = json.dumps({k: v for k, v in cfg_dict.items() if k != "output"},
                       sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def make_envelope(command: str, cfg: RunConfig, payload, fmt: str) -> str:
    cfg_dict = cfg.to_json_dict()
    meta = {
        "tool": "spinprobe",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "format": fmt,
        "config_sha256": config_hash(cfg_dict),
        "config": cfg_dict,
    }
    body = render_payload(payload, fmt)
    if fmt == "json":
        doc = {"envelope": meta, "payload": json.loads(body)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return ENVELOPE_TAG + json.dumps(meta, sort_keys=True) + "\n" + body


def read_envelope(text: str):
    """Return (metadata, payload text) from an output file."""
    if text.startswith(ENVELOPE_TAG):
        first, _, body = text.partition("\n")
        return json.loads(first[len(ENVELOPE_TAG):]), body
    doc = json.loads(text)
    if not isinstance(doc, dict) or "envelope" not in doc:
        raise ValueError("not a spinprobe envelope")
    return doc["envelope"], render_payload(doc["payload"], "json")


# --- commands -------------------------------------------------------------

def _reference(cfg: RunConfig) -> BTPoint:
    return BTPoint.from_lab(cfg.reference.b_mG, cfg.reference.t_nK)


def cmd_fraction(cfg, model, threads):
    grid = cfg.fraction.grid.array()
    d = fraction_derivatives(grid)
    return Table(["e_ratio", "p", "dp", "d2p"], zip(grid, d.values, d.first, d.second))


def cmd_rates(cfg, model, threads):
    r = model.rates(_reference(cfg))
    rows = [[m, "endo", m + 1, v] for m, v in zip(ENDO_LEVELS, r.endo)]
    rows += [[m, "exo", m - 1, v] for m, v in zip(EXO_LEVELS, r.exo)]
    return Table(["m_from", "direction", "m_to", "rate_s"], rows)


def cmd_steady(cfg, model, threads):
    p = steady_state(model.rates(_reference(cfg)))
    return Table(["m_F", "probability"], zip(range(-3, 4), p.probabilities))


def cmd_evolve(cfg, model, threads):
    ev = cfg.evolve
    if ev.initial_populations is not None:
        p0 = SpinDistribution(ev.initial_populations)
    else:
        p0 = SpinDistribution.pure(2 if ev.initial_m_F is None else ev.initial_m_F)
    traj = evolve_trajectory(p0, build_generator(model.rates(_reference(cfg))), ev.times_s)
    cols = ["time_s"] + [f"P_{m:+d}" for m in range(-3, 4)] + ["sum_minus_one"]
    rows = [[t, *p, p.sum() - 1.0] for t, p in zip(traj.times, traj.populations)]
    return Table(cols, rows)


def cmd_sensitivity(cfg, model, threads):
    ref = _reference(cfg)
    out = []
    for ax in cfg.axes:
        res = sensitivity(model, ref, ax, cfg.delta_rel, cfg.at_time_s, cfg.normalization)
        d = res.to_dict()
        d.update(sqrt_f_left=res.sqrt_f_left, sqrt_f_right=res.sqrt_f_right,
                 b_mG=cfg.reference.b_mG, t_nK=cfg.reference.t_nK,
                 at_time_s=cfg.at_time_s)
        out.append(d)
    return out


# lab-unit scale factors for (fixed, theta) per axis
_PROFILE_UNITS = {
    Axis.CONST_T_VARY_B: (1e-9, 1e-3, "b_mG"),
    Axis.CONST_B_VARY_T: (1e-3, 1e-9, "t_nK"),
    Axis.CONST_RATIO_VARY_ETOT: (1.0, 1e-6, "e_total_uK"),
    Axis.CONST_ETOT_VARY_RATIO: (1e-6, 1.0, "e_ratio"),
}


def cmd_profile(cfg, model, threads):
    sec = cfg.profile
    f_scale, t_scale, label = _PROFILE_UNITS[Axis(sec.axis)]
    grid = sec.grid.array()
    prof = sensitivity_profile(model, sec.axis, sec.fixed * f_scale, grid * t_scale,
                               cfg.at_time_s, cfg.delta_rel, cfg.normalization, threads)
    return Table([label, "sqrtF_left", "sqrtF_right"],
                 zip(grid, prof.sqrt_f_left, prof.sqrt_f_right))


def cmd_scan(cfg, model, threads):
    rows = scan_bt_grid(model, cfg.scan.b_mG.array() * 1e-3, cfg.scan.t_nK.array() * 1e-9,
                        cfg.at_time_s, cfg.delta_rel, cfg.normalization, cfg.axes, threads)
    cols = ["b_mG", "t_nK", "axis", "theta_ref", "sqrtF_left", "sqrtF_right", "error"]
    return Table(cols, [[r["b_field"] * 1e3, r["temperature"] * 1e9, r["axis"], r["theta_ref"],
                         r["sqrt_f_left"], r["sqrt_f_right"], r["error"]] for r in rows])


def cmd_maxima(cfg, model, threads):
    grid = cfg.maxima.ratio_grid.array()
    return [locate_maxima(model, e * 1e-6, grid, cfg.at_time_s, cfg.delta_rel,
                          cfg.normalization).to_dict() for e in cfg.maxima.e_total_uK]


def cmd_fit(cfg, model, threads):
    grid = cfg.fit.grid.array()
    try:
        fit = fit_fraction(grid, max_iter=cfg.fit.max_iter)
    except FitError as exc:
        fit = exc.best
    reference_rms = float(np.sqrt(np.mean((fit_model(grid, REFERENCE_FIT) - fraction_of_ratio(grid)) ** 2)))
    return {
        "a": fit.a, "b": fit.b, "c": fit.c, "d": fit.d,
        "rms": fit.rms, "iterations": fit.iterations, "converged": fit.converged,
        "initial": list(REFERENCE_FIT), "initial_rms": reference_rms,
    }


HANDLERS = {
    "fraction": cmd_fraction, "rates": cmd_rates, "evolve": cmd_evolve, "steady": cmd_steady,
    "sensitivity": cmd_sensitivity, "profile": cmd_profile, "scan": cmd_scan,
    "maxima": cmd_maxima, "fit": cmd_fit,
}


def run_command(command: str, cfg: RunConfig, threads: int = 1, fmt: str | None = None) -> str:
    """Execute one command and return the enveloped output text."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    fmt = fmt or cfg.output.format or DEFAULT_FORMAT.get(command, "csv")
    payload = HANDLERS[command](cfg, cfg.model(), threads)
    return make_envelope(command, cfg, payload, fmt)


def _effective_config(args, base: dict, base_dir) -> RunConfig:
    data = dict(base)
    if args.delta_rel is not None:
        data["delta_rel"] = args.delta_rel
    if args.at_time is not None:
        data["at_time_s"] = args.at_time
    if args.normalization is not None:
        data["normalization"] = args.normalization
    out = dict(data.get("output") or {})
    if args.out is not None:
        out["path"] = args.out
    if args.format is not None:
        out["format"] = args.format
    if out:
        data["output"] = out
    if data.get("cross_section_file") and base_dir is not None:
        p = Path(data["cross_section_file"])
        data["cross_section_file"] = str(p if p.is_absolute() else (Path(base_dir) / p).resolve())
    return validate_config(data, base_dir)


def _load_base(path):
    """Config dict from a plain config file or from an output envelope."""
    if path is None:
        return None, {}, None
    text = Path(path).read_text()
    try:
        meta, _ = read_envelope(text)
        return meta.get("command"), meta["config"], Path(path).parent
    except (ValueError, KeyError):
        pass
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: not valid JSON ({exc})"]) from None
    return None, data, Path(path).parent


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file, or an output envelope to re-run")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "gnuplot"))
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: CPU count); never changes results")
    common.add_argument("--delta-rel", type=float, default=None)
    common.add_argument("--at-time", type=float, default=None, metavar="SECONDS")
    common.add_argument("--normalization", choices=("energy", "relative"), default=None)

    parser = argparse.ArgumentParser(prog="spinprobe", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text)
    rerun = sub.add_parser("rerun", parents=[common], help="re-execute an output envelope")
    rerun.add_argument("envelope")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            command, base, base_dir = _load_base(args.envelope)
            if command is None:
                raise ConfigError([f"{args.envelope}: no embedded command"])
            # never overwrite the source envelope implicitly
            base = {**base, "output": {**(base.get("output") or {}), "path": None}}
        else:
            _, base, base_dir = _load_base(args.config)
            command = args.command
        cfg = _effective_config(args, base, base_dir)
        threads = args.threads or cfg.threads or os.cpu_count() or 1
        text = run_command(command, cfg, threads)
    except ConfigError as exc:
        print(f"spinprobe: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"spinprobe {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.output.path:
        Path(cfg.output.path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
