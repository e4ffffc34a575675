"""Command-line front end.

Exit codes: 0 success, 1 attack failed (budget or verification), 2 usage
error. Locking keys are never printed unless --reveal-key is passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from galock import circuits, enumattack, harness
from galock.circuits import CircuitSpec, build_benchmark, dump_benchmarks
from galock.errors import BudgetExhausted, CandidateOverflow, CapExceeded, GalockError
from galock.ga import trace_to_csv
from galock.harness import (
    DEFAULT_SEED,
    OracleBundle,
    census_to_csv,
    comparison_to_csv,
    key_census,
    make_oracle,
)
from galock.locking import LockedNetlist, make_lock


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _merged(args, config: dict, name: str, default):
    """Flag > config file > built-in default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _cmd_calibrate(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_benchmarks(out)
    models = circuits.calibrate_all()
    print(f"wrote {out}")
    for kind, model in sorted(models.items()):
        print(f"  {kind}: {len(model.constants)} constants, {model.param_count} locked slot(s)")
    return 0


def _cmd_lock(args) -> int:
    config = _load_config(args.config)
    seed = _merged(args, config, "seed", DEFAULT_SEED)
    base = build_benchmark(args.bench)
    slot_bits = None
    if args.bench == "receiver" and args.k == sum(harness.RECEIVER_SLOT_BITS):
        slot_bits = harness.RECEIVER_SLOT_BITS
    locked = make_lock(base, args.scheme, args.k, rng_seed=seed, slot_bits=slot_bits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    locked.save(out / "locked_public.json", include_key=False)
    locked.save(out / "locked_oracle.json", include_key=True)
    _write_json(out / "circuit_spec.json", locked.base.spec.to_dict())
    print(f"locked {args.bench} with {args.scheme} scheme, k={args.k}, seed={seed}")
    print(f"  attack view : {out / 'locked_public.json'}")
    print(f"  oracle side : {out / 'locked_oracle.json'}")
    print(f"  spec        : {out / 'circuit_spec.json'}")
    if args.reveal_key:
        print(f"  locking key : {locked.locking_key.to_hex()}")
    return 0


def _cmd_oracle(args) -> int:
    locked = LockedNetlist.load(args.locked)
    bundle = make_oracle(locked)
    bundle.save(args.out)
    print(f"oracle bundle with {len(bundle.curves)} curve(s) -> {args.out}")
    return 0


def _attack_context(args):
    locked = LockedNetlist.load(args.locked)
    view = locked.attack_view() if locked.locking_key is not None else locked
    oracle = OracleBundle.load(args.oracle)
    return view, oracle


def _finish_attack(report, args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    trace = report.details.pop("trace", None)
    report.save(out)
    if getattr(args, "trace", None) and trace is not None:
        from galock.ga import GenerationStats

        stats = [GenerationStats(g, b, m, s, (), e) for g, b, m, s, e in trace]
        trace_to_csv(stats, args.trace)
    print(f"{report.attack}: status={report.status} K'={report.kprime} "
          f"generations={report.generations} fitness={report.final_fitness:.3g}")
    print(f"report -> {out}")
    return 0 if report.status == "SUCCESS" else 1


def _cmd_attack_ga(args) -> int:
    config = _load_config(args.config)
    seed = _merged(args, config, "seed", DEFAULT_SEED)
    view, oracle = _attack_context(args)
    w_hint = None
    if args.hint:
        with open(args.hint) as fh:
            w_hint = json.load(fh)["widths"]
    try:
        report = harness.run_case2_ga(
            view, oracle, seed=seed, w_hint=w_hint, raise_on_budget=False
        )
    except BudgetExhausted as exc:
        report = exc.report
    return _finish_attack(report, args)


def _cmd_two_pass(args) -> int:
    config = _load_config(args.config)
    seed = _merged(args, config, "seed", DEFAULT_SEED)
    view, oracle = _attack_context(args)
    try:
        report = harness.two_pass(view, oracle, seed=seed, raise_on_budget=False)
    except BudgetExhausted as exc:
        report = exc.report
    return _finish_attack(report, args)


def _cmd_attack_enum(args) -> int:
    view, oracle = _attack_context(args)
    spec = None
    if args.spec:
        with open(args.spec) as fh:
            spec = CircuitSpec.from_dict(json.load(fh))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        targets = enumattack.derive_targets(view, spec, oracle.metrics)
        constraint = enumattack.build_constraint(view, targets, args.tol)
        enumattack.export_smtlib(constraint, out / "constraint.smt2")
        candidates = enumattack.enumerate_keys(constraint)
        check = enumattack.brute_check(candidates, view, oracle.curves)
    except CandidateOverflow as exc:
        print(f"enumeration overflow: {exc}", file=sys.stderr)
        return 1
    import csv as _csv

    with open(out / "candidates.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["key_hex", "width_residual", "curve_fitness"])
        fit = dict((k.to_hex(), f) for k, f in check.ranked)
        for key, residual in zip(candidates.keys, candidates.residuals):
            w.writerow([key.to_hex(), f"{residual:.12g}", f"{fit[key.to_hex()]:.12g}"])
    print(f"K'={len(candidates)} candidates, {len(check.survivors)} match the oracle")
    print(f"candidates -> {out / 'candidates.csv'}")
    print(f"constraint -> {out / 'constraint.smt2'}")
    return 0 if check.survivors else 1


def _cmd_census(args) -> int:
    view, oracle = _attack_context(args)
    try:
        census = key_census(
            view,
            oracle,
            eps_rel=args.eps,
            cap=args.cap,
            sample_size=args.sample_size,
            seed=args.seed if args.seed is not None else DEFAULT_SEED,
        )
    except CapExceeded as exc:
        print(f"{exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    census_to_csv(census, out)
    summary = {
        "count": census.count,
        "checked": census.checked,
        "mode": census.mode,
        "matching": census.matching[:1024],
    }
    _write_json(out.with_suffix(".summary.json"), summary)
    print(f"census: {census.count} matching of {census.checked} checked ({census.mode})")
    print(f"histogram -> {out}")
    return 0


def _cmd_compare(args) -> int:
    ks = [int(v) for v in args.ks.split(",")]
    seeds = [DEFAULT_SEED + i for i in range(args.seeds)]
    result = harness.compare_attacks(args.bench, args.scheme, ks, seeds)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    comparison_to_csv(result, out / "comparison.csv")
    detail = {f"{k}/{attack}": info for (k, attack), info in result.runs.items()}
    _write_json(out / "comparison_runs.json", detail)
    print(f"comparison -> {out / 'comparison.csv'}")
    for row in result.rows:
        print("  " + ",".join(str(v) for v in row))
    return 0


def _cmd_receiver(args) -> int:
    locked, oracle = harness.make_receiver_experiment(seed=args.seed or DEFAULT_SEED, k=args.k)
    view = locked.attack_view()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    locked.save(out / "locked_public.json", include_key=False)
    locked.save(out / "locked_oracle.json", include_key=True)
    oracle.save(out / "oracle.json")
    try:
        report = harness.run_receiver_attack(
            view, oracle, seed=args.seed or DEFAULT_SEED, raise_on_budget=False
        )
    except BudgetExhausted as exc:
        report = exc.report
    report.details.pop("trace", None)
    report.save(out / "report.json")
    print(
        f"receiver block attack: status={report.status} "
        f"generations={report.generations} fitness={report.final_fitness:.3g}"
    )
    print(f"report -> {out / 'report.json'}")
    return 0 if report.status == "SUCCESS" else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="galock", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="recompute benchmark constants and write the canonical file")
    c.add_argument("--out", default="src/galock/data/benchmarks.json")
    c.set_defaults(func=_cmd_calibrate)

    c = sub.add_parser("lock", help="lock a benchmark and write attack/oracle files")
    c.add_argument("--bench", required=True, choices=circuits.KINDS)
    c.add_argument("--scheme", required=True, choices=("smt", "pb"))
    c.add_argument("--k", required=True, type=int)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", required=True)
    c.add_argument("--config", default=None)
    c.add_argument("--reveal-key", action="store_true")
    c.set_defaults(func=_cmd_lock)

    c = sub.add_parser("oracle", help="measure the oracle bundle from the oracle-side lock file")
    c.add_argument("--locked", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_oracle)

    c = sub.add_parser("attack-ga", help="binary key search against the oracle")
    c.add_argument("--locked", required=True)
    c.add_argument("--oracle", required=True)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--hint", default=None, help="JSON file with {'widths': [...]} from a first pass")
    c.add_argument("--out", required=True)
    c.add_argument("--trace", default=None)
    c.add_argument("--config", default=None)
    c.set_defaults(func=_cmd_attack_ga)

    c = sub.add_parser("two-pass", help="width recovery followed by hinted key search")
    c.add_argument("--locked", required=True)
    c.add_argument("--oracle", required=True)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", required=True)
    c.add_argument("--trace", default=None)
    c.add_argument("--config", default=None)
    c.set_defaults(func=_cmd_two_pass)

    c = sub.add_parser("attack-enum", help="equation-based enumeration attack (needs the spec)")
    c.add_argument("--locked", required=True)
    c.add_argument("--oracle", required=True)
    c.add_argument("--spec", default=None)
    c.add_argument("--tol", type=float, default=enumattack.DEFAULT_TOL_REL)
    c.add_argument("--out-dir", required=True)
    c.set_defaults(func=_cmd_attack_enum)

    c = sub.add_parser("census", help="count keys matching the oracle within tolerance")
    c.add_argument("--locked", required=True)
    c.add_argument("--oracle", required=True)
    c.add_argument("--eps", type=float, default=harness.EPS_MATCH_REL)
    c.add_argument("--cap", type=int, default=harness.CENSUS_CAP_DEFAULT)
    c.add_argument("--sample-size", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_census)

    c = sub.add_parser("compare", help="genetic vs enumeration attack across key sizes")
    c.add_argument("--bench", required=True, choices=circuits.KINDS)
    c.add_argument("--scheme", required=True, choices=("smt", "pb"))
    c.add_argument("--ks", default="16,32,40,64")
    c.add_argument("--seeds", type=int, default=5)
    c.add_argument("--out-dir", required=True)
    c.set_defaults(func=_cmd_compare)

    c = sub.add_parser("receiver", help="end-to-end receiver block experiment")
    c.add_argument("--k", type=int, default=512)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out-dir", required=True)
    c.set_defaults(func=_cmd_receiver)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except GalockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
