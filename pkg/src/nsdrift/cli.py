"""Command-line front end.

Exit codes: 0 success, 2 usage or invalid arguments, 3 I/O failure,
4 malformed input data.  Every subcommand accepts ``--config FILE``, a flat
``key = value`` file whose keys are flag names (without the dashes); flags
given on the command line win over config keys.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import datagen, harness
from .datagen import StreamKind, StreamSpec, generate_stream, read_stream_csv, write_stream_csv
from .detector import DetectorConfig
from .errors import DataFormatError
from .nsd_stats import nsd
from .stream_eval import WindowConfig, run_stream, score, write_report_jsonl, write_report_table

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("expected positive integers")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file whose keys mirror flag names")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsdrift", description="NSD statistics and kNN-gap drift detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nsd", help="print NSD(k1, k2)")
    p.add_argument("k1", type=_positive_int)
    p.add_argument("k2", type=_positive_int)
    _common(p)

    p = sub.add_parser("generate", help="write a synthetic drift stream as CSV")
    p.add_argument("--kind", required=True, choices=[k.value for k in StreamKind])
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--length", type=_positive_int, default=20_000)
    p.add_argument("--period", type=_positive_int, default=2_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--normal-base", type=float, default=datagen.NORMAL_SHIFT_BASE,
                   help="normal-shift: class-1 mean per coordinate before drift")
    p.add_argument("--out", required=True, help="output CSV; drift indices go to OUT.drifts")
    _common(p)

    p = sub.add_parser("detect", help="run batch drift detection on a CSV stream")
    p.add_argument("--input", required=True)
    p.add_argument("--window", type=_positive_int, default=1000)
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--out", required=True, help="per-batch JSON-lines report")
    p.add_argument("--table", help="optional per-batch CSV table")
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo convergence of K2 < c frequencies")
    p.add_argument("scenario", nargs="?", help="preset name (see --list)")
    p.add_argument("--scenario", dest="scenario_flag", metavar="NAME")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    p.add_argument("--distribution", help="uniform | normal(mu,sigma) | gamma(alpha,beta) | poisson(lam)")
    p.add_argument("--dim", type=_positive_int)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--starts", help='starting points, e.g. "0.5,0.5;0.6,0.5"')
    p.add_argument("--thresholds", type=_int_list)
    p.add_argument("--mode", choices=[m.value for m in harness.SearchMode])
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", help="trace CSV")
    p.add_argument("--summary", help="summary JSON")
    _common(p)

    p = sub.add_parser("bench", help="drift benchmark or efficiency timing suite")
    p.add_argument("suite", choices=["drift", "efficiency"])
    p.add_argument("--seeds", type=_positive_int, default=10, help="drift: number of seeds")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="first seed")
    p.add_argument("--length", type=_positive_int, default=20_000)
    p.add_argument("--period", type=_positive_int, default=2_000)
    p.add_argument("--window", type=_positive_int, default=1000)
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--dims", type=_int_list, default=[4, 10], help="efficiency: dimensions")
    p.add_argument("--windows", type=_int_list, default=[5000, 10000], help="efficiency: window sizes")
    p.add_argument("--ks", type=_int_list, default=[1, 5], help="efficiency: k values")
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--summary", help="summary JSON")
    _common(p)
    return parser


def read_config(path) -> list[tuple[str, str]]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    items = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        items.append((key, value.strip()))
    return items


def _config_argv(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Expand ``--config`` into flags placed before the explicit ones so the latter win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not argv or not known.config:
        return argv
    sub = parser._subparsers._group_actions[0].choices.get(argv[0])  # type: ignore[union-attr]
    if sub is None:
        return argv
    flags = {s for a in sub._actions for s in a.option_strings}
    extra: list[str] = []
    for key, value in read_config(known.config):
        flag = "--" + key.replace("_", "-")
        if flag not in flags or flag in ("--config", "--help"):
            raise UsageError(f"unknown config key {key!r} for {argv[0]}")
        action = next(a for a in sub._actions if flag in a.option_strings)
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                extra.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
        else:
            extra += [flag, value]
    return [argv[0], *extra, *argv[1:]]


# -- subcommands ----------------------------------------------------------------


def cmd_nsd(args) -> int:
    print(f"{nsd(args.k1, args.k2):.6f}")
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = StreamSpec(
        StreamKind(args.kind), args.dim, args.delta, args.length, args.period, args.seed, args.normal_base
    )
    stream = generate_stream(spec)
    write_stream_csv(stream, args.out)
    print(f"rows={len(stream)} drifts={len(stream.drift_indices)}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = WindowConfig(args.window, DetectorConfig(args.k, args.theta))
    stream = read_stream_csv(args.input)
    if len(stream) < 2 * args.window:
        raise DataFormatError(f"{len(stream)} rows hold fewer than two windows of {args.window}")
    detections = run_stream(stream.x, stream.y, cfg)
    write_report_jsonl(detections, args.out)
    if args.table:
        write_report_table(detections, args.table)
    flags = sum(d.flagged for d in detections)
    print(f"flags={flags} batches={len(detections)}")
    if stream.drift_indices:
        card = score(detections, stream.drift_indices, args.window)
        print(f"detected={card.true_detections} false_alarms={card.false_alarms} drifts={card.n_drifts}")
    return EXIT_OK


def _scenario_from_args(args) -> harness.ScenarioConfig:
    name = args.scenario_flag or args.scenario
    changes: dict = {"reps": args.reps, "seed": args.seed}
    if args.distribution:
        changes["distribution"] = datagen.parse_distribution(args.distribution)
    for attr in ("dim", "n", "k"):
        if getattr(args, attr) is not None:
            changes[attr] = getattr(args, attr)
    if args.starts:
        changes["starting_points"] = harness.parse_points(args.starts)
    if args.thresholds:
        changes["thresholds"] = args.thresholds
    if args.mode:
        changes["search_mode"] = args.mode
    if name:
        try:
            base = harness.get_preset(name)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        # Reference values only hold for the unmodified preset.
        if set(changes) - {"reps", "seed"}:
            changes["expected"] = None
        return base.with_(**changes)
    missing = [f for f in ("dim", "n", "k", "starting_points", "thresholds") if f not in changes]
    if missing:
        raise UsageError("without a preset, --dim --n --k --starts --thresholds are required")
    changes.setdefault("distribution", datagen.UniformCube())
    return harness.ScenarioConfig(name="custom", **changes)


def cmd_simulate(args) -> int:
    if args.list:
        for name in harness.PRESETS:
            print(name)
        return EXIT_OK
    sc = _scenario_from_args(args)
    trace = harness.run_calibration(sc, workers=args.threads)
    summary = harness.scenario_summary(sc, trace)
    if args.out:
        harness.write_trace_csv(trace, args.out)
    if args.summary:
        harness.write_json(summary, args.summary)
    freqs = " ".join(f"P(K2<{c})={f:.3f}" for c, f in trace.final_freqs().items())
    print(f"{sc.name}: reps={trace.reps} {freqs}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.suite == "efficiency":
        rows = harness.run_efficiency(args.dims, args.windows, args.ks, repeats=args.repeats, seed=args.seed)
        records = [r.as_dict() for r in rows]
        harness.write_rows_csv(records, args.out)
        if args.summary:
            harness.write_json({"suite": "efficiency", "rows": records}, args.summary)
        for r in rows:
            print(f"dim={r.dim} window={r.window_size} k={r.k} seconds={r.wall_time:.4f}")
        return EXIT_OK
    seeds = range(args.seed, args.seed + args.seeds)
    per_seed, summary = [], []
    for case in harness.DRIFT_CASES:
        res = harness.run_benchmark_case(
            case, seeds, args.length, args.period, args.window, args.theta, workers=args.threads
        )
        for seed, card in zip(seeds, res.cards):
            per_seed.append(
                {"kind": case.kind.value, "dim": case.dim, "delta": case.delta, "k": case.k, "seed": seed,
                 **card.as_dict()}
            )
        summary.append(res.as_dict())
        s = res.as_dict()
        print(
            f"{case.kind.value} d={case.dim} delta={case.delta:g} k={case.k}: "
            f"rate={s['detection_rate_mean']:.3f}±{s['detection_rate_sd']:.3f} "
            f"false_alarms={s['false_alarms_mean']:.2f}"
        )
    harness.write_rows_csv(per_seed, args.out)
    if args.summary:
        harness.write_json({"suite": "drift", "cases": summary}, args.summary)
    return EXIT_OK


COMMANDS = {
    "nsd": cmd_nsd,
    "generate": cmd_generate,
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _config_argv(parser, argv)
    except UsageError as exc:
        print(f"nsdrift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nsdrift: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except DataFormatError as exc:
        print(f"nsdrift: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UsageError as exc:
        print(f"nsdrift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nsdrift: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"nsdrift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
