"""
Command-line front end.

    specres generate --r 5 --seed 7 --out inst.json
    specres measure inst.json --m 42 --out meas.json
    specres recover meas.json --r 5 --out report.json
    specres verify report.json inst.json
    specres bench --r 3,4,5 --trials 100 --seed 11

Exit codes: 0 success, 1 no solution / verification failed, 2 usage or data error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import GenerationError, NoSolutionError, SampleCountError, SpecresError
from .model import (
    IntensitySamples,
    SparseSignal,
    check_admissibility,
    generate_signal,
    measure_intensities,
    model_order,
    threshold_samples,
)
from .pipeline import CandidateSolution, RecoveryConfig, RecoveryReport, compare_solutions, recover

SCHEMA_VERSION = 1
INSTANCE_SCHEMA = "specres.instance"
MEASUREMENT_SCHEMA = "specres.measurement"
REPORT_SCHEMA = "specres.report"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class DataError(SpecresError):
    """Malformed or mismatched input file."""


# -- file formats -----------------------------------------------------------

def dumps(obj: dict) -> str:
    # json writes floats with repr(), the shortest string that round-trips
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _signal_to_dict(signal: SparseSignal) -> dict:
    return {
        "amplitudes": [[float(a.real), float(a.imag)] for a in signal.amplitudes],
        "locations": [float(t) for t in signal.locations],
    }


def _signal_from_dict(d: dict) -> SparseSignal:
    try:
        amps = [complex(float(re), float(im)) for re, im in d["amplitudes"]]
        return SparseSignal(amps, [float(t) for t in d["locations"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed signal: {exc}") from exc


def instance_to_dict(signal: SparseSignal, generator: dict | None = None) -> dict:
    return {
        "schema": INSTANCE_SCHEMA,
        "version": SCHEMA_VERSION,
        "signal": _signal_to_dict(signal),
        "generator": generator or {},
    }


def measurement_to_dict(samples: IntensitySamples) -> dict:
    return {
        "schema": MEASUREMENT_SCHEMA,
        "version": SCHEMA_VERSION,
        "m_c": samples.m_c,
        "values": [float(v) for v in samples.values],
    }


def _candidate_to_dict(c: CandidateSolution) -> dict:
    return {
        **_signal_to_dict(c.signal),
        "residual": c.residual,
        "a1_hypothesis": c.a1_hypothesis,
        "branch": c.branch,
        "hypothesis": c.hypothesis,
        "relax_factor": c.relax_factor,
    }


def report_to_dict(report: RecoveryReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "version": SCHEMA_VERSION,
        "r": report.r,
        "config": report.config.to_dict(),
        "solutions": [_candidate_to_dict(c) for c in report.solutions],
        "diagnostics": report.diagnostics,
    }


def _load(path: str | Path, schema: str) -> dict:
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("schema") != schema:
        raise DataError(f"{path}: expected schema {schema!r}, got {obj.get('schema') if isinstance(obj, dict) else None!r}")
    if obj.get("version") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema version {obj.get('version')!r}")
    return obj


def read_instance(path) -> tuple[SparseSignal, dict]:
    obj = _load(path, INSTANCE_SCHEMA)
    if "signal" not in obj:
        raise DataError(f"{path}: missing 'signal'")
    return _signal_from_dict(obj["signal"]), obj.get("generator", {})


def read_measurement(path) -> IntensitySamples:
    obj = _load(path, MEASUREMENT_SCHEMA)
    try:
        return IntensitySamples(int(obj["m_c"]), [float(v) for v in obj["values"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed measurement: {exc}") from exc


def read_report(path) -> tuple[int, list[SparseSignal]]:
    obj = _load(path, REPORT_SCHEMA)
    try:
        return int(obj["r"]), [_signal_from_dict(s) for s in obj["solutions"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed report: {exc}") from exc


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _info(msg: str, out: str | None):
    # keep stdout clean when the artifact itself goes there
    print(msg, file=sys.stderr if out in (None, "-") else sys.stdout)


# -- commands ---------------------------------------------------------------

def _default_seed() -> int:
    env = os.environ.get("SPECRES_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise DataError(f"SPECRES_SEED must be an integer, got {env!r}")


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        signal = generate_signal(args.r, seed, args.diff_sep, complex_amplitudes=args.complex)
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    gen = {"seed": seed, "diff_sep": args.diff_sep, "complex": bool(args.complex)}
    _write(dumps(instance_to_dict(signal, gen)), args.out)
    rep = check_admissibility(signal, args.diff_sep)
    _info(f"admissible: {rep.ok}" + (f" ({', '.join(rep.violations)})" if rep.violations else ""), args.out)
    return EXIT_OK


def cmd_measure(args) -> int:
    if args.m is not None:
        if args.m % 2:
            print(f"error: m must be even (m = 2 m_c), got {args.m}", file=sys.stderr)
            return EXIT_USAGE
        m_c = args.m // 2
    else:
        m_c = args.m_c
    if m_c < 1:
        print("error: need at least one sample pair", file=sys.stderr)
        return EXIT_USAGE
    signal, _ = read_instance(args.instance)
    _write(dumps(measurement_to_dict(measure_intensities(signal, m_c))), args.out)
    return EXIT_OK


def _config_from_args(args) -> RecoveryConfig:
    cfg = RecoveryConfig()
    overrides = {
        name: getattr(args, name)
        for name in (
            "rank_rel_tol",
            "product_rel_tol",
            "distance_tol",
            "rank1_tol",
            "phase_tol",
            "residual_tol",
        )
        if getattr(args, name) is not None
    }
    if args.no_refine:
        overrides["refine"] = False
    if args.strict:
        overrides["relax_factors"] = (1.0,)
    return RecoveryConfig.from_dict({**cfg.to_dict(), **overrides})


def cmd_recover(args) -> int:
    samples = read_measurement(args.measurement)
    if args.r is None and not args.estimate_r:
        print("error: give --r or --estimate-r", file=sys.stderr)
        return EXIT_USAGE
    config = _config_from_args(args)
    try:
        report = recover(samples, args.r, config, estimate_r=args.estimate_r)
    except SampleCountError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoSolutionError as exc:
        r = args.r if args.r is not None else 0
        _write(dumps(report_to_dict(RecoveryReport(r, [], exc.diagnostics, config))), args.out)
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(dumps(report_to_dict(report)), args.out)
    _info(f"{len(report.solutions)} solution(s); best residual {report.best.residual:.3e}", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    r, solutions = read_report(args.report)
    truth, _ = read_instance(args.instance)
    if r != truth.r or any(s.r != truth.r for s in solutions):
        print(f"error: report has r={r}, instance has r={truth.r}", file=sys.stderr)
        return EXIT_USAGE
    if not solutions:
        print("report contains no solutions")
        return EXIT_FAIL
    best = np.inf
    for n, sol in enumerate(solutions):
        loc_err, amp_err = compare_solutions(sol, truth)
        best = min(best, max(loc_err, amp_err))
        print(f"solution {n}: location error {loc_err:.3e}, amplitude error {amp_err:.3e}")
    ok = best <= args.tol
    print(f"{'PASS' if ok else 'FAIL'}: best aligned error {best:.3e} (tolerance {args.tol:g})")
    return EXIT_OK if ok else EXIT_FAIL


def _trial_seed(seed: int, r: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, r, trial]).generate_state(1)[0])


def bench_rows(r_values, trials: int, diff_sep: float, seed: int, tol: float = 1e-6):
    """Yield one dict per (r, m) over ``m in {threshold - 2, threshold, threshold + 4}``."""
    for r in r_values:
        signals = [generate_signal(r, _trial_seed(seed, r, n), diff_sep) for n in range(trials)]
        thr = threshold_samples(r)
        for m in (thr - 2, thr, thr + 4):
            if m < 2:
                continue
            ok = 0
            errs, times = [], []
            status = "ok"
            for signal in signals:
                samples = measure_intensities(signal, m // 2)
                t0 = time.perf_counter()
                try:
                    report = recover(samples, r)
                except SampleCountError:
                    status = "sample-count-refused"
                    break
                except NoSolutionError:
                    errs.append(np.inf)
                else:
                    e = min(max(compare_solutions(c.signal, signal)) for c in report.solutions)
                    errs.append(e)
                    ok += e <= tol
                times.append(1e3 * (time.perf_counter() - t0))
            yield {
                "r": r,
                "m": m,
                "success_rate": ok / trials if status == "ok" else 0.0,
                "max_aligned_error": max(errs) if errs else float("nan"),
                "median_runtime_ms": float(np.median(times)) if times else float("nan"),
                "status": status,
            }


BENCH_COLUMNS = ("r", "m", "success_rate", "max_aligned_error", "median_runtime_ms", "status")


def cmd_bench(args) -> int:
    try:
        r_values = [int(x) for x in args.r.split(",") if x.strip()]
    except ValueError:
        print(f"error: --r must be a comma-separated list of integers, got {args.r!r}", file=sys.stderr)
        return EXIT_USAGE
    if args.trials < 1 or not r_values or any(r < 1 for r in r_values):
        print("error: need trials >= 1 and positive r values", file=sys.stderr)
        return EXIT_USAGE
    seed = args.seed if args.seed is not None else _default_seed()
    lines = ["\t".join(BENCH_COLUMNS)]
    try:
        for row in bench_rows(r_values, args.trials, args.diff_sep, seed):
            lines.append("\t".join(
                f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]) for c in BENCH_COLUMNS
            ))
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    d = RecoveryConfig()
    parser = argparse.ArgumentParser(prog="specres", description="Super-resolution from low-pass Fourier intensities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random admissible instance")
    p.add_argument("--r", type=int, required=True, help="number of spikes")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $SPECRES_SEED or 0)")
    p.add_argument("--diff-sep", type=float, default=0.02, help="min gap between distinct |t_i - t_l| (default 0.02)")
    p.add_argument("--complex", action="store_true", help="complex Gaussian amplitudes")
    p.add_argument("--out", "-o", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("measure", help="compute intensity samples of an instance")
    p.add_argument("instance")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--m", type=int, help="total sample count (even)")
    g.add_argument("--m-c", dest="m_c", type=int, help="half sample count")
    p.add_argument("--out", "-o", default="-")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("recover", help="recover all compatible signals from intensities")
    p.add_argument("measurement")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r", type=int, help="number of spikes")
    g.add_argument("--estimate-r", action="store_true", help="estimate r from the Hankel rank (best effort)")
    p.add_argument("--rank-rel-tol", type=float, help=f"pseudo-inverse cutoff (default {d.rank_rel_tol:g})")
    p.add_argument("--product-rel-tol", type=float, help=f"product matching tolerance (default {d.product_rel_tol:g})")
    p.add_argument("--distance-tol", type=float, help=f"distance reproduction tolerance (default {d.distance_tol:g})")
    p.add_argument("--rank1-tol", type=float, help=f"rank-one test tolerance (default {d.rank1_tol:g})")
    p.add_argument("--phase-tol", type=float, help=f"phase consistency tolerance (default {d.phase_tol:g})")
    p.add_argument("--residual-tol", type=float, help=f"validity tolerance (default {d.residual_tol:g})")
    p.add_argument("--no-refine", action="store_true", help="skip the least-squares polish of candidates")
    p.add_argument("--strict", action="store_true", help="do not relax matching tolerances on failure")
    p.add_argument("--out", "-o", default="-")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("verify", help="compare a recovery report against ground truth")
    p.add_argument("report")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-6, help="max aligned error for PASS (default 1e-6)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="success rate around the sample threshold")
    p.add_argument("--r", default="3,4,5", help="comma-separated sparsities (default 3,4,5)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--diff-sep", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=None, help="base seed (default: $SPECRES_SEED or 0)")
    p.add_argument("--out", "-o", default="-")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
