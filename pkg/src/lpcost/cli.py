"""Command-line interface: ``lpcost analyze|calibrate|predict|evaluate``."""

from __future__ import annotations

import argparse
import json
import random
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

from filelock import FileLock, Timeout

from .analysis.cost import CostAnalysis, CostError, analyze_program, format_records
from .analysis.metrics import STANDARD_MODELS, CostModel, MetricError, program_metrics
from .analysis.sizes import SizeError
from .benchmarks import BENCHMARK_IDS, load_benchmarks
from .calibrate.builtins import MIN_REPS, calibrate_builtins
from .calibrate.fit import FitError, fit_model
from .calibrate.profile import PlatformProfile, ProfileError
from .calibrate.samples import DEFAULT_INNER, DEFAULT_REPS, collect_samples
from .calibrate.suite import DEFAULT_SIZES, builtin_calibration_suite
from .lang.program import Program, parse_program, validate_program
from .lang.reader import ParseError
from .predict import PredictionError, evaluate, predict_time, require_step_baseline
from .vm.engine import VMError
from .vm.timing import TimingError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2

LOCK_PATH = Path(tempfile.gettempdir()) / "lpcost-timing.lock"


class InputError(Exception):
    """Bad input: exits with status 2."""


@contextmanager
def timing_lock():
    lock = FileLock(str(LOCK_PATH))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise TimingError(f"another timing command holds {LOCK_PATH}") from None
    try:
        yield
    finally:
        lock.release()


def _parse_models(values) -> list[CostModel]:
    if not values:
        return list(STANDARD_MODELS)
    try:
        return [CostModel.parse(v) for v in values]
    except ValueError as e:
        raise InputError(str(e)) from None


def _parse_sizes(text: str | None, default=None) -> list:
    """``"10,20,30"`` gives three sizes; ``"10:5"`` is one size vector."""
    if text is None:
        return list(default) if default is not None else []
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            nums = tuple(int(x) for x in part.split(":"))
        except ValueError:
            raise InputError(f"bad size {part!r}") from None
        if any(n < 0 for n in nums):
            raise InputError(f"sizes must be nonnegative: {part!r}")
        out.append(nums[0] if len(nums) == 1 else nums)
    if not out:
        raise InputError("empty size list")
    return out


def _load_program(path: str) -> Program:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    p = parse_program(text)
    diags = validate_program(p)
    for d in diags:
        print(f"{path}: {d}", file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        raise InputError(f"{path}: program has errors")
    return p


def _seed(args) -> int:
    return args.seed if args.seed is not None else random.SystemRandom().randrange(2**31)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# -- commands ---------------------------------------------------------------------


def cmd_analyze(args) -> int:
    p = _load_program(args.program)
    [model] = _parse_models([args.model]) if args.model else [STANDARD_MODELS[0]]
    records, seconds = analyze_program(p, model, bound=args.bound)
    _write(format_records(records, args.format), args.out)
    print(f"analysis time: {seconds:.3f} s", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    models = _parse_models(args.model)
    sizes = _parse_sizes(args.sizes, DEFAULT_SIZES)
    if any(not isinstance(n, int) for n in sizes):
        raise InputError("calibration sizes are single list lengths")
    seed = _seed(args)
    union = []
    for m in models:
        union.extend(c for c in m.components if c not in union)
    t0 = time.perf_counter()
    with timing_lock():
        suite = builtin_calibration_suite()
        samples = collect_samples(suite, CostModel(tuple(union)), sizes, args.reps, seed, args.inner)
        fits = {}
        for m in models:
            fit = fit_model(samples, m)
            fits[m.signature] = fit
            for w in fit.warnings:
                print(f"warning [{m}]: {w}", file=sys.stderr)
        builtins = {} if args.no_builtins else calibrate_builtins(args.builtin_reps)
    wall = time.perf_counter() - t0
    meta = {"sizes": sizes, "reps": args.reps, "inner": args.inner, "m": samples.m,
            "dropped": len(samples.dropped), "wall_s": round(wall, 3)}
    prof = PlatformProfile(fits, builtins, seed=seed, meta=meta)
    out = args.out or "profile.json"
    prof.save(out)
    if args.samples:
        with open(args.samples, "w", newline="") as fh:
            samples.write_csv(fh)
    print(f"{'model':<42} {'S (ns)':>12}  K (ns)")
    for m in models:
        f = fits[m.signature]
        ks = ", ".join(f"{k:.2f}" for k in f.K)
        print(f"{str(m):<42} {f.S:>12.1f}  ({ks})")
    print(f"m={samples.m} rows, seed={seed}, {wall:.1f} s; profile written to {out}")
    return EXIT_OK


def _profile(path: str) -> PlatformProfile:
    try:
        return PlatformProfile.load(path)
    except ProfileError as e:
        raise InputError(str(e)) from None


def _fit(prof: PlatformProfile, model: CostModel):
    if model.signature not in prof.fits:
        have = "; ".join(prof.fits) or "none"
        raise InputError(f"model signature mismatch: requested {model.signature}, profile has {have}")
    return prof.fit_for(model)


def _builtins_available(prof: PlatformProfile, disabled: bool) -> bool:
    if disabled:
        return False
    if not prof.builtins:
        print("warning: profile has no builtin constants; builtin and arithmetic events are not priced", file=sys.stderr)
        return False
    return True


def cmd_predict(args) -> int:
    p = _load_program(args.program)
    prof = _profile(args.profile)
    [model] = _parse_models([args.model]) if args.model else [STANDARD_MODELS[1]]
    fit = _fit(prof, model)
    entries = p.entry_points
    if args.entry:
        name, _, arity = args.entry.rpartition("/")
        entries = ((name, int(arity)),)
    sizes = _parse_sizes(args.sizes)
    if not sizes:
        raise InputError("--sizes is required")
    use_builtins = _builtins_available(prof, args.no_builtins)
    rows = []
    for entry in entries:
        extra = () if not use_builtins else tuple(program_metrics(p, p.reachable([entry])))
        full = CostModel(model.components + tuple(m for m in extra if m not in model.components))
        costs = CostAnalysis(p).predicate_cost(entry, full)
        params = costs[0].params
        for n in sizes:
            vec = (n,) * len(params) if isinstance(n, int) else n
            if len(vec) != len(params):
                raise InputError(f"{entry[0]}/{entry[1]} takes {len(params)} sizes, got {len(vec)}")
            est = predict_time(fit, costs, vec, full.components)
            rows.append({"predicate": f"{entry[0]}/{entry[1]}", "sizes": list(vec),
                         "model": model.signature, "estimate_ns": est})
    if args.format == "records":
        text = "".join(json.dumps(r) + "\n" for r in rows)
    else:
        text = "".join(f"{r['predicate']:<16} {','.join(map(str, r['sizes'])):>12} {r['estimate_ns'] / 1000:>14.2f} us\n" for r in rows)
    _write(text, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    prof = _profile(args.profile)
    models = require_step_baseline(_parse_models(args.model)) if args.model else [CostModel.parse(s) for s in prof.fits]
    fits = [_fit(prof, m) for m in models]
    ids = args.benchmarks.split(",") if args.benchmarks else None
    try:
        benches = load_benchmarks(ids)
    except KeyError as e:
        raise InputError(str(e.args[0])) from None
    sizes = {}
    for item in args.sizes.split(",") if args.sizes else ():
        name, _, n = item.partition("=")
        if name not in BENCHMARK_IDS or not n.isdigit():
            raise InputError(f"bad benchmark size {item!r} (use name=n)")
        sizes[name] = int(n)
    seed = _seed(args)
    with timing_lock():
        report = evaluate(benches, fits, sizes, args.inputs, args.runs, seed, _builtins_available(prof, args.no_builtins))
    if args.format == "records":
        sys.stdout.write(report.to_json_lines())
    else:
        sys.stdout.write(report.render_table())
    if args.out:
        Path(args.out).write_text(report.to_json_lines())
        Path(args.out).with_suffix(".txt").write_text(report.render_table())
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpcost", description="Static execution-time estimation for logic programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="infer cost functions for the entry points of a program")
    a.add_argument("program")
    a.add_argument("--model", help="comma-separated metrics (default: all six head metrics)")
    a.add_argument("--bound", choices=("exact", "upper"), default="exact")
    a.add_argument("--out")
    a.add_argument("--format", choices=("table", "records"), default="table")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("calibrate", help="fit per-event constants on this machine")
    c.add_argument("--model", action="append", help="model to fit (repeatable; default: four standard models)")
    c.add_argument("--sizes", help="list lengths (default 2..50 step 2)")
    c.add_argument("--reps", type=int, default=DEFAULT_REPS, help="timing repetitions per program and size")
    c.add_argument("--inner", type=int, default=DEFAULT_INNER, help="executions per timed repetition")
    c.add_argument("--builtin-reps", type=int, default=MIN_REPS)
    c.add_argument("--no-builtins", action="store_true", help="skip builtin and operator timing")
    c.add_argument("--samples", help="also write the sample matrix as CSV")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", help="profile path (default profile.json)")
    c.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("predict", help="estimate execution times from a profile")
    p.add_argument("program")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", help="fitted model to use (default: step giunif gounif viunif vounif)")
    p.add_argument("--sizes", help="comma-separated sizes; use a:b for several size parameters")
    p.add_argument("--entry", help="name/arity (default: the program's entry points)")
    p.add_argument("--no-builtins", action="store_true")
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "records"), default="table")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="compare predictions with observed times on the bundled benchmarks")
    e.add_argument("--profile", required=True)
    e.add_argument("--model", action="append", help="model to evaluate (repeatable; default: all in the profile)")
    e.add_argument("--benchmarks", help=f"comma-separated subset of {','.join(BENCHMARK_IDS)}")
    e.add_argument("--sizes", help="per-benchmark sizes, e.g. nrev=40,hanoi=9")
    e.add_argument("--inputs", type=int, default=10)
    e.add_argument("--runs", type=int, default=5)
    e.add_argument("--no-builtins", action="store_true")
    e.add_argument("--seed", type=int)
    e.add_argument("--out", help="write structured records here (and the table next to it)")
    e.add_argument("--format", choices=("table", "records"), default="table")
    e.set_defaults(func=cmd_evaluate)
    return ap


_INPUT_ERRORS = (InputError, ParseError, MetricError, SizeError, CostError)
_RUNTIME_ERRORS = (FitError, TimingError, PredictionError, VMError, OSError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as e:
        print(f"lpcost {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except _RUNTIME_ERRORS as e:
        print(f"lpcost {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
