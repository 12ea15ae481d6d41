"""``trendparadox`` command line: sessionize, detect, shuffle-test, synth."""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, report, synth
from .dataset import (
    Dataset,
    DatasetError,
    VariableSpec,
    actor,
    covariate,
    infer_kind,
    load_csv,
    outcome,
    read_header,
    timestamp,
    write_csv,
)
from .detector import PARADOX_VERDICTS, DetectorConfig, DetectorError, disaggregate, scan
from .sessionize import DEFAULT_TIMEOUT, SESSION_COLUMNS, is_session_feature, sessionize
from .shuffle import ShuffleError, ShuffleVerdict, parse_strategy, shuffle_test
from .trend import distinct_bins, quantile_bins

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARADOX = 2
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


def _names(values) -> list[str]:
    out = []
    for v in values or []:
        out += [p for p in v.split(",") if p]
    return list(dict.fromkeys(out))


def _positive_timeout(args):
    if not args.timeout > 0:
        raise UsageError(f"--timeout must be positive, got {args.timeout:g}")


def _echo(args, *skip) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", *skip)}


def _envelope(command: str, args, **payload) -> dict:
    out = {
        "tool": "trendparadox",
        "version": __version__,
        "report_format": report.REPORT_FORMAT,
        "command": command,
        "invocation": _echo(args, "timing"),
    }
    out.update(payload)
    return out


def _emit(doc: dict, args, started: float) -> None:
    if args.timing:
        doc["duration_seconds"] = round(time.perf_counter() - started, 6)
    text = report.dumps(doc)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args) -> DetectorConfig:
    return DetectorConfig(alpha=args.alpha, k_bins=args.bins, min_subgroup_n=args.min_subgroup)


def _covariate_spec(path, name: str) -> VariableSpec:
    return covariate(name, infer_kind(path, name))


def _outcome_spec(path, name: str) -> VariableSpec:
    kind = infer_kind(path, name)
    if kind == "categorical":
        raise UsageError(f"outcome column {name!r} is not numeric")
    return outcome(name, kind)


def _check_columns(header, names, flag):
    for name in names:
        if name not in header and not is_session_feature(name):
            raise UsageError(f"unknown column {name!r} in {flag}")


def _load_for_analysis(args, variables, sessions_from_file: bool):
    """Load outcome, analysis variables and optional actor/time columns.

    Session features missing from the file (or all of them when
    ``sessions_from_file`` is false) are derived by sessionizing.
    """
    header = read_header(args.input)
    if args.outcome not in header:
        raise UsageError(f"unknown column {args.outcome!r} in --outcome")
    schema = []
    if args.actor:
        if args.actor not in header:
            raise UsageError(f"unknown column {args.actor!r} in --actor")
        schema.append(actor(args.actor))
    if args.time:
        if args.time not in header:
            raise UsageError(f"unknown column {args.time!r} in --time")
        schema.append(timestamp(args.time))
    derive = False
    for name in variables:
        if name in (args.outcome, args.actor, args.time):
            raise UsageError(f"column {name!r} cannot be both an analysis variable and "
                             "the outcome, actor or time column")
        if is_session_feature(name) and (not sessions_from_file or name not in header):
            derive = True
            continue
        schema.append(_covariate_spec(args.input, name))
    schema.append(_outcome_spec(args.input, args.outcome))
    if derive and not (args.actor and args.time):
        raise UsageError("session features need --actor and --time to derive sessions")
    d = load_csv(args.input, schema)
    if derive:
        d = sessionize(d, args.timeout).data
    return d


# -- curves --------------------------------------------------------------------

def _x_binning(d: Dataset, x: str, k: int):
    spec = d.spec(x)
    values = d[x]
    if spec.kind in ("binary", "count") and np.unique(values).shape[0] <= k:
        return distinct_bins(values)
    return quantile_bins(values, k)


def curve_rows(d: Dataset, x: str, z: str, config: DetectorConfig) -> list[list]:
    """Mean outcome per x bin, overall and inside each qualifying z subgroup."""
    y = d[d.outcome_spec.name].astype(np.float64)
    binning = _x_binning(d, x, config.k_bins)
    pair = f"{x}|{z}"

    def rows_for(group, idx):
        a = binning.assignment[idx]
        n = np.bincount(a, minlength=binning.k_effective)
        s = np.bincount(a, weights=y[idx], minlength=binning.k_effective)
        return [[pair, group, binning.labels[b], report.number(s[b] / n[b]), int(n[b])]
                for b in range(binning.k_effective) if n[b] > 0]

    out = rows_for("aggregate", np.arange(d.n_rows))
    try:
        parts = disaggregate(d, z, config)
    except DetectorError:
        return out
    for g in parts.groups:
        out += rows_for(g.label, g.rows)
    return out


def _curve_file(x: str, z: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", f"{x}__{z}")
    return f"curve_{safe}.csv"


def write_curves(d: Dataset, reports, directory, config) -> list[str]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for r in reports:
        name = _curve_file(r.x_name, r.z_name)
        with open(directory / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pair", "group", "x_bin", "mean_outcome", "n"])
            w.writerows(curve_rows(d, r.x_name, r.z_name, config))
        written.append(name)
    return written


# -- subcommands ----------------------------------------------------------------

def cmd_sessionize(args) -> int:
    _positive_timeout(args)
    header = read_header(args.input)
    for flag, name in (("--actor", args.actor), ("--time", args.time)):
        if name not in header:
            raise UsageError(f"unknown column {name!r} in {flag}")
    if args.actor == args.time:
        raise UsageError("--actor and --time must name different columns")
    schema = [actor(args.actor), timestamp(args.time)]
    schema += [covariate(h, "categorical") for h in header
               if h not in (args.actor, args.time) and h not in SESSION_COLUMNS]
    sd = sessionize(load_csv(args.input, schema), args.timeout)
    if args.output:
        write_csv(sd.data, args.output)
    else:
        write_csv(sd.data, sys.stdout)
    return EXIT_OK


def cmd_detect(args) -> int:
    started = time.perf_counter()
    _positive_timeout(args)
    xs, zs = _names(args.x), _names(args.z)
    if not xs or not zs:
        raise UsageError("need at least one --x and one --z column")
    header = read_header(args.input)
    _check_columns(header, xs, "--x")
    _check_columns(header, zs, "--z")
    config = _config(args)
    d = _load_for_analysis(args, list(dict.fromkeys(xs + zs)), sessions_from_file=True)
    reports = scan(d, xs, zs, config, workers=args.workers)
    if not reports:
        raise UsageError("no (x, z) pair with distinct variables")
    payload = {"pairs": [report.pair_dict(r) for r in reports]}
    if args.curves:
        payload["curves"] = write_curves(d, reports, args.curves, config)
    _emit(_envelope("detect", args, **payload), args, started)
    return EXIT_PARADOX if any(r.verdict in PARADOX_VERDICTS for r in reports) else EXIT_OK


def cmd_shuffle_test(args) -> int:
    started = time.perf_counter()
    _positive_timeout(args)
    if args.replicates < 1:
        raise UsageError(f"--replicates must be >= 1, got {args.replicates}")
    if args.seed < 0:
        raise UsageError(f"--seed must be non-negative, got {args.seed}")
    strategy = parse_strategy(args.strategy)
    header = read_header(args.input)
    _check_columns(header, [args.x], "--x")
    _check_columns(header, [args.z], "--z")
    variables = [args.x, args.z]
    attr = getattr(strategy, "attribute", None)
    if attr is not None:
        _check_columns(header, [attr], "--strategy")
        if attr not in variables:
            variables.append(attr)
    d = _load_for_analysis(args, variables, sessions_from_file=False)
    result = shuffle_test(d, args.x, args.z, strategy, args.replicates, args.seed,
                          _config(args), timeout=args.timeout)
    _emit(_envelope("shuffle-test", args, shuffle=report.shuffle_dict(result)), args, started)
    return {
        ShuffleVerdict.PARADOX_INDICATED: EXIT_PARADOX,
        ShuffleVerdict.NOT_INDICATED: EXIT_OK,
        ShuffleVerdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    }[result.verdict]


def _parse_counts(text: str) -> dict:
    counts = {}
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 4:
            raise UsageError(f"--counts entries look like group:dept:applicants:accepted, got {item!r}")
        try:
            g, n, k = int(parts[0]), int(parts[2]), int(parts[3])
        except ValueError:
            raise UsageError(f"non-integer field in --counts entry {item!r}") from None
        counts[(g, parts[1])] = (n, k)
    return counts


def cmd_synth(args) -> int:
    if args.seed < 0:
        raise UsageError(f"--seed must be non-negative, got {args.seed}")
    if args.generator == "admissions":
        counts = _parse_counts(args.counts) if args.counts else None
        d, truth = synth.gen_admissions(counts, seed=args.seed)
    elif args.generator == "survivor":
        d, truth = synth.gen_survivor(
            args.n_actors, args.frac_incorrigible, args.p_reoffend, args.p_reformed,
            args.periods, seed=args.seed, expose_subgroup=not args.hide_subgroup)
    else:
        d, truth = synth.gen_sessions(
            args.n_actors, args.max_len, args.base_intercept, args.base_per_len,
            args.decline, args.gap_minutes, seed=args.seed,
            sessions_per_actor=args.sessions_per_actor, timeout=args.timeout,
            length_scope=args.length_scope)
    out = Path(args.output)
    write_csv(d, out)
    sidecar = out.with_name(out.stem + ".truth.json")
    doc = {
        "tool": "trendparadox",
        "version": __version__,
        "generator": args.generator,
        "invocation": _echo(args),
        "rows": d.n_rows,
        "truth": truth.to_dict(),
    }
    sidecar.write_text(json.dumps(report._plain(doc), allow_nan=False) + "\n", encoding="utf-8")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def _detector_flags(p):
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--bins", type=int, default=5, help="quantile bins for numeric z (default 5)")
    p.add_argument("--min-subgroup", type=int, default=30,
                   help="smallest subgroup that gets a fit (default 30)")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                   help="session inactivity timeout in seconds (default 3600)")
    p.add_argument("--actor", help="actor column, needed to derive session features")
    p.add_argument("--time", help="timestamp column, needed to derive session features")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock duration to the report (breaks byte-identical reruns)")


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for "paradox found"; usage errors exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trendparadox", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sessionize", help="append session_id, session_index, session_length")
    p.add_argument("--input", required=True)
    p.add_argument("--actor", required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                   help="inactivity timeout in seconds (default 3600)")
    p.add_argument("--output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sessionize)

    p = sub.add_parser("detect", help="scan (x, z) pairs for reversing or vanishing trends")
    p.add_argument("--input", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--x", action="append", required=True,
                   help="trend variable(s); repeat or comma-separate")
    p.add_argument("--z", action="append", required=True,
                   help="conditioning variable(s); repeat or comma-separate")
    p.add_argument("--curves", help="directory for per-pair curve CSVs")
    p.add_argument("--workers", type=int, default=1, help="threads for the pair scan (default 1)")
    _detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("shuffle-test", help="check a pair's robustness under randomisation")
    p.add_argument("--input", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--strategy", required=True,
                   help="intervals | within-session | attribute:<col>[:per-actor]")
    p.add_argument("--replicates", type=int, default=50, help="shuffled copies (default 50)")
    p.add_argument("--seed", type=int, required=True)
    _detector_flags(p)
    p.set_defaults(func=cmd_shuffle_test)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--generator", required=True, choices=sorted(synth.GENERATORS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, help="CSV path; ground truth goes to <stem>.truth.json")
    p.add_argument("--counts", help="admissions cells as group:dept:applicants:accepted,...")
    p.add_argument("--n-actors", type=int, default=10000)
    p.add_argument("--frac-incorrigible", type=float, default=0.5)
    p.add_argument("--p-reoffend", type=float, default=0.9)
    p.add_argument("--p-reformed", type=float, default=0.0)
    p.add_argument("--periods", type=int, default=10)
    p.add_argument("--hide-subgroup", action="store_true",
                   help="survivor: leave the subgroup label out of the CSV")
    p.add_argument("--max-len", type=int, default=5)
    p.add_argument("--base-intercept", type=float, default=0.2)
    p.add_argument("--base-per-len", type=float, default=0.035)
    p.add_argument("--decline", type=float, default=0.015)
    p.add_argument("--gap-minutes", type=float, default=10.0)
    p.add_argument("--sessions-per-actor", type=int, default=20)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--length-scope", choices=("actor", "session"), default="actor",
                   help="sessions: draw lengths once per actor or per session (default actor)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DatasetError, DetectorError, ShuffleError, synth.SynthError,
            OSError) as exc:
        print(f"trendparadox {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
