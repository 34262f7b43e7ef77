"""``pdnverify`` command line: simulate, verify, band, tamper, synth, suite.

Exit status: 0 genuine (or success), 1 dissimilar, 2 any error. Errors are a
single line on stderr.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

import numpy as np
import tomli_w

from . import __version__
from .analysis import Band, average_traces, find_resonances
from .board import (add_component, counterfeit_components, dump_board, load_board,
                    parse_component, parse_quantity, remove_component)
from .circuit import FrequencyGrid
from .dtw import DtwConfig
from .emulate import (COUNTERFEIT_ESL_FACTOR, COUNTERFEIT_ESR_FACTOR, VariationSpec,
                      run_experiment_suite, synthesize_measurement)
from .errors import DomainError, PdnVerifyError
from .sparams import FORMATS, FREQ_UNITS, load_trace, write_touchstone
from .verify import build_golden, is_bare_trace, resolve_band, suggest_threshold, verify

EXIT_GENUINE, EXIT_DISSIMILAR, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _hz(text):
    return parse_quantity(text, "Hz")


def _meta(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--meta expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _band_arg(text: str):
    if text in ("auto", "full"):
        return text
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"--band expects auto, full or LOW:HIGH, got {text!r}")
    lo, hi = _hz(lo if lo[-1:].isalpha() else lo + "MHz"), _hz(hi if hi[-1:].isalpha() else hi + "MHz")
    return Band(lo, hi, 0.5 * (lo + hi))


def _grid(args, board) -> FrequencyGrid:
    g = board.sweep
    return FrequencyGrid(args.f_start if args.f_start is not None else g.f_start,
                         args.f_stop if args.f_stop is not None else g.f_stop,
                         args.points if args.points is not None else g.points,
                         args.spacing or g.spacing)


def _dtw(args) -> DtwConfig:
    return DtwConfig(q=args.q, window=args.window, scale=args.scale)


def _write(path, data: bytes, stdout):
    if path in (None, "-"):
        stdout.write(data.decode())
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _variation(args) -> VariationSpec:
    d = VariationSpec()
    pick = lambda v, default: default if v is None else v
    return VariationSpec(pick(args.sigma_c, d.sigma_c), pick(args.sigma_esl, d.sigma_esl),
                         pick(args.sigma_esr, d.sigma_esr), pick(args.noise_db, d.noise_db),
                         pick(args.freq_shift, d.freq_shift_frac), args.seed)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args, out):
    board = load_board(args.board)
    model = board.model_for(args.pdn, args.config)
    golden = build_golden(model, _grid(args, board), board.z0, args.config or model.name)
    _write(args.out, write_touchstone(golden, args.format, args.unit), out)
    return EXIT_GENUINE


def cmd_synth(args, out):
    board = load_board(args.board)
    model = board.model_for(args.pdn, args.config)
    trace = synthesize_measurement(model, _grid(args, board), board.z0, _variation(args),
                                   args.config or model.name)
    _write(args.out, write_touchstone(trace, args.format, args.unit), out)
    return EXIT_GENUINE


def cmd_verify(args, out):
    meta = _meta(args.meta)
    golden = load_trace(args.golden)
    measured = average_traces([load_trace(p) for p in args.measured])
    v = verify(golden, measured, args.threshold, _dtw(args), _band_arg(args.band))
    out.write(f"score {v.dtw_score:.6g}  threshold {v.threshold:.6g}  band {v.band}  "
              f"samples {v.samples_compared}  -> {v.decision}\n")
    if args.report:
        doc = {"verdict": {"decision": v.decision, "dtw_score": v.dtw_score,
                           "threshold": v.threshold, "samples_compared": v.samples_compared,
                           "band": [v.band.f_low, v.band.f_high], "band_center": v.band.center},
               "inputs": {"golden": args.golden, "measured": list(args.measured),
                          "averaged": len(args.measured)},
               "dtw": {"q": args.q, "scale": args.scale,
                       "window": -1 if args.window is None else args.window}}
        if meta:
            doc["metadata"] = meta
        header = (f"# pdnverify verify report\n# decision: {v.decision}\n"
                  f"# score {v.dtw_score:.6g} vs threshold {v.threshold:.6g} in {v.band}\n")
        _write(args.report, (header + tomli_w.dumps(doc)).encode(), out)
    return EXIT_GENUINE if v.genuine else EXIT_DISSIMILAR


def cmd_band(args, out):
    trace = load_trace(args.trace)
    found = find_resonances(trace)
    if not found:
        raise UsageError(f"{args.trace}: no |Z| minimum inside the sweep")
    res = found[0]
    out.write(f"lowest resonance: {res.frequency / 1e6:.6g} MHz (|Z| = {res.magnitude:.6g} ohm)\n")
    band = resolve_band(trace, "auto")
    note = "  (bare board: full sweep)" if is_bare_trace(trace) else ""
    out.write(f"band: {band}  center {band.center / 1e6:.6g} MHz  "
              f"width {band.width / 1e6:.6g} MHz{note}\n")
    return EXIT_GENUINE


def cmd_tamper(args, out):
    board = load_board(args.board)
    for text in args.add or ():
        try:
            comp = parse_component(text)
        except ValueError as exc:
            raise UsageError(str(exc))
        board = add_component(board, comp, args.to_config or ())
    for cid in args.remove or ():
        board = remove_component(board, cid)
    if args.counterfeit:
        ids = [i for chunk in args.counterfeit for i in chunk.split(",") if i]
        board = counterfeit_components(board, ids, args.esl_factor, args.esr_factor)
    _write(args.out, dump_board(board), out)
    return EXIT_GENUINE


def _table_lines(names, table, fmt="{:>10.4g}"):
    width = max(8, max(len(n) for n in names))
    lines = [" " * (width + 2) + "".join(f"{n[:10]:>10}" for n in names)]
    for name, row in zip(names, table):
        lines.append(f"{name:<{width}}  " + "".join(fmt.format(x) for x in row))
    return lines


def suite_report(board, pdn, names, results, seeds, cfg: DtwConfig, var: VariationSpec,
                 meta: Optional[dict] = None) -> bytes:
    """Commented summary table followed by a TOML section; deterministic."""
    tables = np.array([r.table for r in results])
    mean = tables.mean(axis=0)
    dominant = np.array([r.diagonal_is_row_minimum() for r in results])
    ratios = np.median(np.array([r.separation_ratios() for r in results]), axis=0)
    genuine = tables[:, np.arange(len(names)), np.arange(len(names))].ravel()
    tampered = np.concatenate([t[~np.eye(len(names), dtype=bool)] for t in tables])
    try:
        threshold = suggest_threshold(genuine, tampered)
    except DomainError:
        threshold = None  # e.g. no variation: genuine scores are all zero
    etas = [float(mean[i, i] - min(mean[i])) for i in range(len(names))]

    lines = [f"# pdnverify suite report: board {board.name}, PDN {pdn}",
             f"# seeds {seeds[0]}..{seeds[-1]} ({len(seeds)}), q = {cfg.q:g}, scale {cfg.scale}",
             "# mean DTW score, row = measured configuration, column = golden",
             *("# " + l for l in _table_lines(names, mean)),
             "#",
             f"# {'configuration':<14}{'band':>28}{'diag row-min':>14}{'ratio':>10}{'eta':>10}"]
    for i, n in enumerate(names):
        lines.append(f"# {n:<14}{str(results[0].bands[i]):>28}{dominant[:, i].mean():>14.0%}"
                     f"{ratios[i]:>10.3g}{etas[i]:>10.4g}")
    lines.append("# suggested threshold: " + ("n/a" if threshold is None else f"{threshold:.6g}"))
    fake = None
    if results[0].counterfeit is not None:
        fake = np.array([r.counterfeit for r in results])
        cols = [fake[:, i][np.isfinite(fake[:, i])] for i in range(len(names))]
        lines.append("# counterfeit scores (mean): " + "  ".join(
            f"{n}={c.mean():.4g}" for n, c in zip(names, cols) if c.size))
    lines.append("")

    doc = {"suite": {"board": board.name, "pdn": pdn, "configurations": list(names),
                     "seeds": [int(s) for s in seeds], "q": float(cfg.q), "scale": cfg.scale,
                     "window": -1 if cfg.window is None else int(cfg.window)},
           "variation": {"sigma_c": var.sigma_c, "sigma_esl": var.sigma_esl,
                         "sigma_esr": var.sigma_esr, "noise_db": var.noise_db,
                         "freq_shift_frac": var.freq_shift_frac},
           "bands": {n: [b.f_low, b.f_high, b.center] for n, b in zip(names, results[0].bands)},
           "summary": {"mean_table": mean.tolist(),
                       "diagonal_row_minimum_fraction": dominant.mean(axis=0).tolist(),
                       "separation_ratio_median": ratios.tolist(),
                       "eta_of_mean_table": etas},
           "seed": [{"seed": int(s), "table": r.table.tolist(),
                     "eta": [m.eta for m in r.margins]} for s, r in zip(seeds, results)]}
    if threshold is not None:
        doc["suite"]["suggested_threshold"] = float(threshold)
    if fake is not None:
        for entry, row in zip(doc["seed"], fake):
            entry["counterfeit"] = [float(x) if np.isfinite(x) else -1.0 for x in row]
    if meta:
        doc["metadata"] = dict(sorted(meta.items()))
    return ("\n".join(lines) + tomli_w.dumps(doc)).encode()


def cmd_suite(args, out):
    board = load_board(args.board)
    pdn = args.pdn or board.default_pdn
    names = args.configs.split(",") if args.configs else list(board.configs)
    if len(names) < 2:
        raise UsageError("suite needs at least two configurations")
    configs = board.configurations(names)
    base = board.bare_model(pdn)
    keep = {base.name} | ({base.coupling.peer.name} if base.coupling else set())
    configs = [replace(c, components=tuple(p for p in c.components if p.pdn in keep))
               for c in configs]
    cfg, grid = _dtw(args), _grid(args, board)
    var = _variation(args)
    seeds = list(range(args.seed, args.seed + args.seeds))
    cf = (args.esl_factor, args.esr_factor) if args.counterfeit else None
    results = [run_experiment_suite(base, configs, replace(var, seed=s), cfg, grid, board.z0, cf)
               for s in seeds]
    report = suite_report(board, pdn, names, results, seeds, cfg, var, _meta(args.meta))
    text = report.decode()
    out.write("\n".join(l[2:] for l in text.splitlines() if l.startswith("# ")) + "\n")
    if args.report:
        _write(args.report, report, out)
    return EXIT_GENUINE


# -- parser ----------------------------------------------------------------

def _add_sweep(p):
    g = p.add_argument_group("sweep (defaults from the board file)")
    g.add_argument("--f-start", type=_hz, help="e.g. 1MHz")
    g.add_argument("--f-stop", type=_hz, help="e.g. 1GHz")
    g.add_argument("--points", type=int)
    g.add_argument("--spacing", choices=("linear", "logarithmic"))


def _add_dtw(p):
    d = DtwConfig()
    p.add_argument("--q", type=float, default=d.q, help="DTW exponent (default %(default)s)")
    p.add_argument("--window", type=int, help="Sakoe-Chiba half-width in samples")
    p.add_argument("--scale", choices=("linear", "decibel"), default=d.scale,
                   help="magnitude scale fed to DTW (default %(default)s)")


def _add_variation(p):
    d = VariationSpec()
    g = p.add_argument_group("process variation")
    g.add_argument("--sigma-c", type=float, help=f"relative sigma of C (default {d.sigma_c})")
    g.add_argument("--sigma-esl", type=float, help=f"default {d.sigma_esl}")
    g.add_argument("--sigma-esr", type=float, help=f"default {d.sigma_esr}")
    g.add_argument("--noise-db", type=float, help=f"magnitude noise in dB (default {d.noise_db})")
    g.add_argument("--freq-shift", type=float,
                   help=f"max relative frequency shift (default {d.freq_shift_frac})")
    g.add_argument("--no-variation", action="store_true", help="all widths zero")


def _add_trace_format(p):
    p.add_argument("--format", choices=FORMATS, default="RI")
    p.add_argument("--unit", choices=tuple(FREQ_UNITS), default="HZ")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pdnverify", description="Golden-free PCB verification from |S11| signatures.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="golden trace of a board population")
    p.add_argument("--board", required=True)
    p.add_argument("--pdn")
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="output .s1p ('-' for stdout)")
    _add_sweep(p)
    _add_trace_format(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="synthetic measurement with process variation")
    p.add_argument("--board", required=True)
    p.add_argument("--pdn")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_variation(p)
    _add_sweep(p)
    _add_trace_format(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="compare measured traces against a golden")
    p.add_argument("--golden", required=True)
    p.add_argument("--measured", required=True, nargs="+", help="averaged in the complex domain")
    p.add_argument("--threshold", required=True, type=float)
    p.add_argument("--band", default="auto", help="auto, full or LOW:HIGH (MHz unless suffixed)")
    p.add_argument("--report")
    p.add_argument("--meta", action="append", metavar="KEY=VALUE",
                   help="extra fields for the report, e.g. ifbw=10kHz")
    _add_dtw(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("band", help="lowest resonance and comparison band of a trace")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("tamper", help="edit a board file")
    p.add_argument("--board", required=True)
    p.add_argument("--add", action="append", metavar="ID:PDN:VALUE[:ESR[:ESL]]")
    p.add_argument("--to-config", action="append", metavar="NAME",
                   help="also list added parts in this configuration")
    p.add_argument("--remove", action="append", metavar="ID")
    p.add_argument("--counterfeit", action="append", metavar="ID[,ID...]")
    p.add_argument("--esl-factor", type=float, default=COUNTERFEIT_ESL_FACTOR)
    p.add_argument("--esr-factor", type=float, default=COUNTERFEIT_ESR_FACTOR)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_tamper)

    p = sub.add_parser("suite", help="cross table of configurations over seeds")
    p.add_argument("--board", required=True)
    p.add_argument("--pdn")
    p.add_argument("--configs", help="comma-separated configuration names (default: all)")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--counterfeit", action="store_true",
                   help="also score counterfeit builds of every configuration")
    p.add_argument("--esl-factor", type=float, default=COUNTERFEIT_ESL_FACTOR)
    p.add_argument("--esr-factor", type=float, default=COUNTERFEIT_ESR_FACTOR)
    p.add_argument("--report")
    p.add_argument("--meta", action="append", metavar="KEY=VALUE")
    _add_dtw(p)
    _add_variation(p)
    _add_sweep(p)
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "no_variation", False):
            args.sigma_c = args.sigma_esl = args.sigma_esr = args.noise_db = args.freq_shift = 0.0
        return args.func(args, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        msg = str(exc)
        stderr.write(f"{msg}\n" if msg.startswith("pdnverify") else f"pdnverify: error: {msg}\n")
    except (PdnVerifyError, ValueError, OSError, KeyError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        stderr.write(f"pdnverify: error: {msg}\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
