"""Batch command-line front end.

Exit codes: 0 success (or all constraints pass), 1 input error, 2 structural
error, 3 constraint failure. Outputs are staged in a temporary directory and
moved into place only when the command succeeds.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    endtoend_gain,
    impulse_response,
    synthesize_impulse,
    transfer_function,
)
from .channel.files import chain_network, load_channel
from .channel.pathloss import PathLossTable
from .grid import DisconnectedGraphError, GridGraph, dump_grid, load_grid
from .planner import InfeasibleSpec, generate_topology, load_generator_spec, load_link_budget, place_repeaters
from .planner.config import read_kv
from .powerflow import ConstraintLimits, DimensionError, check_constraints, format_verdicts, load_state
from .topology import full_report, write_report

EXIT_OK, EXIT_INPUT, EXIT_STRUCTURE, EXIT_CONSTRAINT = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(command: str, inputs: dict[str, str | None], options: dict, seed: int | None = None) -> str:
    files = {k: {"path": str(v), "sha256": _sha256(v)} for k, v in sorted(inputs.items()) if v is not None}
    digest = hashlib.sha256(json.dumps({"inputs": files, "options": options}, sort_keys=True).encode()).hexdigest()
    doc = {
        "command": command,
        "inputs": files,
        "options": options,
        "config_digest": digest,
        "seed": seed,
        "tool_version": __version__,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@contextmanager
def staged(out_dir: str | Path):
    """Yield a scratch directory; on success its files replace those in ``out_dir``."""
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".stage-", dir=out.parent))
    try:
        yield tmp
        out.mkdir(parents=True, exist_ok=True)
        for f in sorted(tmp.iterdir()):
            os.replace(f, out / f.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _load_grid(args) -> GridGraph:
    try:
        return load_grid(args.grid, buses=args.buses, strict_buses=args.strict_buses)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except ValueError as exc:
        raise CliError(f"{args.grid}: {exc}", EXIT_INPUT) from None


def cmd_metrics(args) -> int:
    g = _load_grid(args)
    try:
        report = full_report(g, n_bins=args.bins, length_bin_width=args.length_bin)
    except DisconnectedGraphError as exc:
        raise CliError(str(exc), EXIT_STRUCTURE) from None
    with staged(args.out) as tmp:
        write_report(report, tmp)
        opts = {"bins": args.bins, "length_bin": args.length_bin, "strict_buses": args.strict_buses}
        (tmp / "manifest.json").write_text(manifest("metrics", {"grid": args.grid, "buses": args.buses}, opts),
                                           encoding="utf-8")
    for k, v in report.summary().items():
        print(f"{k} = {v}")
    return EXIT_OK


def _read_limits(path: str) -> tuple[ConstraintLimits, dict]:
    try:
        raw = read_kv(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    extras = {}
    for key in ("slack", "z_base_ohm"):
        if key in raw:
            extras[key] = raw.pop(key)
    try:
        values = {k: float(v) for k, v in raw.items()}
        limits = ConstraintLimits.from_mapping(values)
    except (KeyError, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    return limits, extras


def cmd_powerflow(args) -> int:
    if not (args.grid and args.state and args.limits):
        raise CliError("powerflow needs --grid, --state and --limits", EXIT_INPUT)
    g = _load_grid(args)
    limits, extras = _read_limits(args.limits)
    try:
        state = load_state(g, args.state)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except DimensionError as exc:
        raise CliError(str(exc), EXIT_STRUCTURE) from None
    except ValueError as exc:
        raise CliError(f"{args.state}: {exc}", EXIT_INPUT) from None
    slack = extras.get("slack")
    if slack is not None and slack not in g.buses:
        raise CliError(f"slack bus {slack} not in grid", EXIT_STRUCTURE)
    try:
        verdicts = check_constraints(g, state, limits, mode=args.mode, slack_bus=slack,
                                     base_impedance=float(extras.get("z_base_ohm", 1.0)))
    except DimensionError as exc:
        raise CliError(str(exc), EXIT_STRUCTURE) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    with staged(args.out) as tmp:
        (tmp / "verdicts.txt").write_text(format_verdicts(verdicts), encoding="utf-8")
        inputs = {"grid": args.grid, "buses": args.buses, "state": args.state, "limits": args.limits}
        (tmp / "manifest.json").write_text(manifest("powerflow", inputs, {"mode": args.mode}), encoding="utf-8")
    failed = [k for k, v in verdicts.items() if not v.passed]
    for k in sorted(verdicts):
        print(f"({k}) {verdicts[k].name}: {'pass' if verdicts[k].passed else 'FAIL'} slack={verdicts[k].slack:.6g}")
    return EXIT_CONSTRAINT if failed else EXIT_OK


def _freq_grid(args) -> np.ndarray:
    if args.nfreq < 2 or not args.fmax > args.fmin >= 0:
        raise CliError("need 0 <= fmin < fmax and nfreq >= 2", EXIT_INPUT)
    return np.linspace(args.fmin, args.fmax, args.nfreq)


def cmd_channel(args) -> int:
    if bool(args.channel) == bool(args.chain):
        raise CliError("give exactly one of --channel or --chain", EXIT_INPUT)
    freqs = _freq_grid(args)
    fs = args.fs if args.fs else 2.5 * args.fmax
    try:
        if args.channel:
            ch = load_channel(args.channel)
            h = transfer_function(ch, freqs)
            duration = args.duration or (2 * ch.max_delay + 256 / fs)
            ir = impulse_response(ch, fs, duration, rolloff=args.rolloff)
        else:
            zs, zl = complex(args.zs), complex(args.zl)
            h = endtoend_gain(chain_network(args.chain, freqs), zs, zl)
            n = int(round((args.duration or 1024 / fs) * fs))
            ir = synthesize_impulse(lambda f: endtoend_gain(chain_network(args.chain, f), zs, zl), fs, n,
                                    args.rolloff)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    with staged(args.out) as tmp:
        rows = ["freq_hz,h_mag,h_phase_rad"]
        rows += [f"{f!r},{float(abs(x))!r},{float(np.angle(x))!r}" for f, x in zip(freqs.tolist(), h)]
        (tmp / "transfer.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        rows = ["time_s,h"] + [f"{t!r},{v!r}" for t, v in zip(ir.time.tolist(), ir.h.tolist())]
        (tmp / "impulse.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        opts = {"fmin": args.fmin, "fmax": args.fmax, "nfreq": args.nfreq, "zs": args.zs, "zl": args.zl,
                "duration": args.duration, "impulse": ir.metadata}
        inputs = {"channel": args.channel, "chain": args.chain}
        (tmp / "manifest.json").write_text(manifest("channel", inputs, opts), encoding="utf-8")
    return EXIT_OK


def cmd_generate(args) -> int:
    if not args.spec or not args.out:
        raise CliError("generate needs --spec and --out", EXIT_INPUT)
    try:
        spec = load_generator_spec(args.spec, seed=args.seed)
        g = generate_topology(spec)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except (InfeasibleSpec, ValueError) as exc:
        raise CliError(f"infeasible spec: {exc}", EXIT_INPUT) from None
    out = Path(args.out)
    edges, buses = dump_grid(g)
    with staged(out.parent) as tmp:
        (tmp / out.name).write_text(edges, encoding="utf-8")
        (tmp / (out.stem + ".buses.csv")).write_text(buses, encoding="utf-8")
        (tmp / (out.name + ".manifest.json")).write_text(
            manifest("generate", {"spec": args.spec}, {"out": out.name}, seed=spec.seed), encoding="utf-8")
    print(f"wrote {out} ({g.n_buses} buses, {g.n_branches} branches, seed {spec.seed})")
    return EXIT_OK


def cmd_plan(args) -> int:
    if not (args.grid and args.budget and args.concentrator):
        raise CliError("plan needs --grid, --budget and --concentrator", EXIT_INPUT)
    g = _load_grid(args)
    try:
        budget = load_link_budget(args.budget)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.budget}: {exc}", EXIT_INPUT) from None
    if args.concentrator not in g.buses:
        raise CliError(f"unknown concentrator bus {args.concentrator}", EXIT_STRUCTURE)
    try:
        plan = place_repeaters(g, args.concentrator, budget, PathLossTable())
    except DisconnectedGraphError as exc:
        raise CliError(str(exc), EXIT_STRUCTURE) from None
    except KeyError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    finite = [v for v in plan.losses.values() if np.isfinite(v)]
    summary = {
        "repeaters": len(plan.repeaters),
        "repeater_buses": " ".join(plan.repeaters),
        "max_loss_reached_db": max(finite) if finite else 0.0,
        "coverage_pct": 100.0 * plan.coverage_fraction,
        "uncovered": len(plan.uncovered),
    }
    with staged(args.out) as tmp:
        rows = ["bus_id,loss_db,status"] + [f"{b},{loss!r},{st}" for b, loss, st in plan.rows()]
        (tmp / "plan.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        (tmp / "summary.txt").write_text("".join(f"{k} = {v}\n" for k, v in summary.items()), encoding="utf-8")
        inputs = {"grid": args.grid, "buses": args.buses, "budget": args.budget}
        (tmp / "manifest.json").write_text(
            manifest("plan", inputs, {"concentrator": args.concentrator}), encoding="utf-8")
    for k, v in summary.items():
        print(f"{k} = {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridplc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def grid_args(sp, required=True):
        sp.add_argument("--grid", required=required, help="edge-list CSV")
        sp.add_argument("--buses", help="optional bus CSV (bus_id,kv,role)")
        sp.add_argument("--strict-buses", action="store_true",
                        help="reject branches whose endpoints are missing from --buses")

    sp = sub.add_parser("metrics", help="topology report and distributions")
    grid_args(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--bins", type=int, default=50, help="spectral density bins")
    sp.add_argument("--length-bin", type=float, default=100.0, help="branch length bin width, m")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("powerflow", help="check constraints (a)-(e) on a state")
    grid_args(sp, required=False)
    sp.add_argument("--state")
    sp.add_argument("--limits")
    sp.add_argument("--out", required=True)
    sp.add_argument("--mode", choices=("referenced", "raw"), default="referenced")
    sp.set_defaults(func=cmd_powerflow)

    sp = sub.add_parser("channel", help="evaluate H(f) and h(t)")
    sp.add_argument("--channel")
    sp.add_argument("--chain")
    sp.add_argument("--out", required=True)
    sp.add_argument("--fmin", type=float, default=0.0)
    sp.add_argument("--fmax", type=float, default=30e6)
    sp.add_argument("--nfreq", type=int, default=1024)
    sp.add_argument("--fs", type=float, help="impulse sample rate, Hz (default 2.5 fmax)")
    sp.add_argument("--duration", type=float, help="impulse length, s")
    sp.add_argument("--rolloff", type=float, default=0.1, help="raised-cosine band-edge roll-off")
    sp.add_argument("--zs", default="0", help="source impedance, ohms (complex allowed)")
    sp.add_argument("--zl", default="inf", help="load impedance, ohms (inf = open)")
    sp.set_defaults(func=cmd_channel)

    sp = sub.add_parser("generate", help="synthesize a topology")
    sp.add_argument("--spec")
    sp.add_argument("--out", help="output edge-list path")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("plan", help="coverage and repeater placement")
    grid_args(sp, required=False)
    sp.add_argument("--budget")
    sp.add_argument("--concentrator")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plan)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
