"""Experiment harness: oracles, attacks, key census, and comparisons.

Attack-input hygiene is enforced here: every attack entry point takes the
keyless attack view of a locked netlist (no locking key, no nominal widths,
no specification) plus an oracle bundle of measured responses. Only the
equation-based baseline additionally receives a CircuitSpec, and it fails
loudly without one. Every reported key or parameter vector is re-simulated
against the oracle before the report is written.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from galock import enumattack
from galock.circuits import CircuitModel, build_benchmark, measure_metrics
from galock.curves import AXIS_TIME, UNIT_DB, UNIT_VOLTS, ResponseCurve, relative_distance
from galock.errors import (
    BudgetExhausted,
    CandidateOverflow,
    CapExceeded,
    InvalidParams,
    KeyLengthMismatch,
)
from galock.ga import BINARY, REAL, FitnessFunction, GAConfig, HALT_TARGET, run_ga
from galock.locking import (
    Key,
    LockedNetlist,
    effective_widths,
    locked_responses,
    make_lock,
    widths_for_keys,
)

DEFAULT_SEED = 1729

# curve-match tolerance: relative L2 distance at or below this counts as a
# match (key census, candidate verification)
EPS_MATCH_REL = 1e-6

# attack halting targets, as relative residual levels on the oracle curves;
# width recovery targets are per benchmark because curve sensitivity to a
# width error spans orders of magnitude across the models
CASE1_TARGET_REL = {
    "ota": 1e-5,
    "bpf": 1e-5,
    "pll": 1e-5,
    "twg": 5e-4,
    "receiver": 1e-3,
}
CASE2_TARGET_REL = 1e-6
RECEIVER_TARGET_REL = 1e-3
RECEIVER_VERIFY_REL = 1e-3

# parameter-recovery mutation resolutions (multiplicative half-widths) and
# reciprocal pair-move rate
CASE1_MUTATION_LADDER = (0.5, 0.05, 5e-3, 5e-4, 5e-5)
CASE1_PAIR_RATE = 0.3

# width-hint criterion: residual is the relative width error beyond this
# slack, scaled to the oracle curve norm so the hint competes with the curve
# criteria during search but costs nothing once inside the slack band
HINT_SLACK_REL = 0.02

CENSUS_CAP_DEFAULT = 2**24
CENSUS_CHUNK = 1 << 16


@dataclass
class OracleBundle:
    """Responses and derived metrics measured from the unlocked chip."""

    curves: dict
    metrics: dict
    grids: dict

    def norm_sq(self) -> float:
        return float(sum(np.sum(c.y**2) for c in self.curves.values()))

    def to_dict(self) -> dict:
        return {
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "metrics": dict(self.metrics),
            "grids": {k: g.to_dict() for k, g in self.grids.items()},
        }

    @staticmethod
    def from_dict(d: dict) -> "OracleBundle":
        from galock.curves import SamplingGrid

        return OracleBundle(
            curves={k: ResponseCurve.from_dict(c) for k, c in d["curves"].items()},
            metrics=dict(d["metrics"]),
            grids={k: SamplingGrid.from_dict(g) for k, g in d["grids"].items()},
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "OracleBundle":
        with open(path) as fh:
            return OracleBundle.from_dict(json.load(fh))


def make_oracle(locked: LockedNetlist) -> OracleBundle:
    """Measure the oracle: simulate the locked netlist with its locking key.

    Only the oracle side can do this; the resulting bundle (curves plus
    characterization metrics) is what attacks are allowed to consume.
    """
    if locked.locking_key is None:
        raise InvalidParams("oracle measurement needs the oracle-side locked netlist")
    curves = locked_responses(locked, locked.locking_key)
    widths = effective_widths(locked, locked.locking_key)
    metrics = measure_metrics(locked.base, curves, params=widths)
    return OracleBundle(curves=curves, metrics=metrics, grids=dict(locked.base.grids))


def _require_attack_view(locked: LockedNetlist) -> None:
    if locked.locking_key is not None:
        raise InvalidParams("attacks must not see the locking key; pass attack_view()")
    if locked.base.spec is not None or locked.base.nominal_params is not None:
        raise InvalidParams("attacks must not see design knowledge; pass attack_view()")


@dataclass
class ExperimentReport:
    benchmark: str
    scheme: str
    k: int
    attack: str
    kprime: int
    recovered_keys: list = field(default_factory=list)  # hex strings
    recovered_widths: list = field(default_factory=list)
    generations: int = 0
    wall_time_s: float = 0.0
    final_fitness: float = math.inf
    seed: int = DEFAULT_SEED
    status: str = "FAILED"
    halt_reason: str = ""
    verified: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "scheme": self.scheme,
            "k": self.k,
            "attack": self.attack,
            "kprime": self.kprime,
            "recovered_keys": list(self.recovered_keys),
            "recovered_widths": list(self.recovered_widths),
            "generations": self.generations,
            "wall_time_s": self.wall_time_s,
            "final_fitness": self.final_fitness,
            "seed": self.seed,
            "status": self.status,
            "halt_reason": self.halt_reason,
            "verified": self.verified,
            "details": self.details,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# fitness criteria
# ---------------------------------------------------------------------------


class CurveCriterion:
    """Residuals between simulated and oracle samples of one observable."""

    def __init__(self, model: CircuitModel, observable: str, target: ResponseCurve):
        self.model = model
        self.observable = observable
        self.target = target.y.copy()

    def residuals_batch(self, widths: np.ndarray) -> np.ndarray:
        sim = self.model.batch_responses(widths)[self.observable]
        return sim - self.target[None, :]


class WidthHintCriterion:
    """Relative width error beyond a slack band, per locked slot.

    Used by the two-pass attack: the first pass estimates the obfuscated
    widths, the second pass adds this criterion so candidates far from the
    estimate pay a fitness penalty while anything inside the slack band is
    free (the estimate is only accurate to its own search tolerance).
    """

    def __init__(self, targets, slack: float, weight: float):
        self.targets = np.asarray(targets, dtype=float)
        if np.any(self.targets <= 0):
            raise InvalidParams("width hints must be positive")
        self.slack = slack
        self.weight = weight

    def residuals_batch(self, widths: np.ndarray) -> np.ndarray:
        rel = np.abs(widths / self.targets[None, :] - 1.0)
        return self.weight * np.maximum(rel - self.slack, 0.0)


def _curve_criteria(model: CircuitModel, oracle: OracleBundle) -> list:
    return [CurveCriterion(model, name, curve) for name, curve in sorted(oracle.curves.items())]


def _verify_against_oracle(
    model: CircuitModel, widths: np.ndarray, oracle: OracleBundle, eps_rel: float
) -> bool:
    sim = model.batch_responses(widths[None, :])
    return all(
        relative_distance(curve.y, sim[name][0]) <= eps_rel
        for name, curve in oracle.curves.items()
    )


def _ga_config(k: int, seed: int, target: float, overrides: dict | None, **extra) -> GAConfig:
    kwargs = dict(length=k, seed=seed, target_fitness=target)
    kwargs.update(extra)
    if overrides:
        kwargs.update(overrides)
    return GAConfig(**kwargs)


# ---------------------------------------------------------------------------
# case 1: recover the obfuscated widths with a real-encoded search
# ---------------------------------------------------------------------------


@dataclass
class Case1Result:
    widths: np.ndarray
    fitness: float
    generations: int
    wall_time_s: float
    halt_reason: str
    trace: list


def run_case1(
    locked_view: LockedNetlist,
    oracle: OracleBundle,
    *,
    seed: int = DEFAULT_SEED,
    target_rel: float | None = None,
    ga_overrides: dict | None = None,
    raise_on_budget: bool = True,
) -> Case1Result:
    """Treat each locked grid as a single free-width device and evolve the
    width vector until the simulated responses match the oracle.

    Bounds come from the attacker-visible grid geometry: a slot's width lies
    in (0, sum of its column widths].
    """
    _require_attack_view(locked_view)
    if target_rel is None:
        target_rel = CASE1_TARGET_REL[locked_view.base.kind]
    bounds = locked_view.width_bounds()
    hi = np.array([b[1] for b in bounds])
    lo = hi * 1e-6
    target = (target_rel**2) * oracle.norm_sq()
    config = _ga_config(
        len(bounds),
        seed,
        target,
        ga_overrides,
        real_bounds=(lo, hi),
        real_mutation_ladder=CASE1_MUTATION_LADDER,
    )
    ff = FitnessFunction(decode=lambda g: g, criteria=_curve_criteria(locked_view.base, oracle))
    result = run_ga(config, REAL, ff)
    out = Case1Result(
        widths=np.asarray(result.best.genes, dtype=float),
        fitness=result.best.fitness,
        generations=result.generations,
        wall_time_s=result.wall_time_s,
        halt_reason=result.halt_reason,
        trace=result.trace,
    )
    if raise_on_budget and result.halt_reason != HALT_TARGET:
        raise BudgetExhausted("parameter recovery exhausted its budget", best=out, trace=result.trace)
    return out


# ---------------------------------------------------------------------------
# case 2: recover the key with a binary-encoded search
# ---------------------------------------------------------------------------


def _binary_decode(locked_view: LockedNetlist):
    def decode(genes: np.ndarray) -> np.ndarray:
        return widths_for_keys(locked_view, genes)

    return decode


def run_case2_ga(
    locked_view: LockedNetlist,
    oracle: OracleBundle,
    *,
    seed: int = DEFAULT_SEED,
    w_hint=None,
    target_rel: float = CASE2_TARGET_REL,
    verify_rel: float = EPS_MATCH_REL,
    ga_overrides: dict | None = None,
    raise_on_budget: bool = True,
) -> ExperimentReport:
    """Binary key search against the oracle responses.

    With ``w_hint`` (widths from a first pass) an extra fitness criterion
    penalizes candidates whose realized widths stray from the hint. Returns
    exactly one key; the report is verified by re-simulation before it is
    written, and a budget overrun raises BudgetExhausted carrying the
    best-so-far report.
    """
    _require_attack_view(locked_view)
    criteria = _curve_criteria(locked_view.base, oracle)
    if w_hint is not None:
        weight = math.sqrt(oracle.norm_sq())
        criteria = criteria + [WidthHintCriterion(w_hint, HINT_SLACK_REL, weight)]
    target = (target_rel**2) * oracle.norm_sq()
    config = _ga_config(locked_view.k, seed, target, ga_overrides)
    ff = FitnessFunction(decode=_binary_decode(locked_view), criteria=criteria)
    result = run_ga(config, BINARY, ff)

    key = Key.from_array(result.best.genes)
    widths = effective_widths(locked_view, key)
    verified = _verify_against_oracle(locked_view.base, widths, oracle, verify_rel)
    solved = result.halt_reason == HALT_TARGET
    report = ExperimentReport(
        benchmark=locked_view.base.kind,
        scheme=locked_view.scheme,
        k=locked_view.k,
        attack="ga",
        kprime=1,
        recovered_keys=[key.to_hex()],
        recovered_widths=[float(w) for w in widths],
        generations=result.generations,
        wall_time_s=result.wall_time_s,
        final_fitness=result.best.fitness,
        seed=seed,
        status="SUCCESS" if (solved and verified) else "FAILED",
        halt_reason=result.halt_reason,
        verified=verified,
        details={"hinted": w_hint is not None},
    )
    report.details["trace"] = [
        (s.generation, s.best, s.mean, s.std, s.elapsed_s) for s in result.trace
    ]
    if raise_on_budget and not solved:
        raise BudgetExhausted("key recovery exhausted its budget", report=report)
    return report


def two_pass(
    locked_view: LockedNetlist,
    oracle: OracleBundle,
    *,
    seed: int = DEFAULT_SEED,
    ga_overrides: dict | None = None,
    raise_on_budget: bool = True,
) -> ExperimentReport:
    """First recover the widths (real encoding), then feed them to the key
    search as an extra fitness criterion."""
    case1 = run_case1(
        locked_view,
        oracle,
        seed=seed,
        ga_overrides=ga_overrides,
        raise_on_budget=raise_on_budget,
    )
    report = run_case2_ga(
        locked_view,
        oracle,
        seed=seed,
        w_hint=case1.widths,
        ga_overrides=ga_overrides,
        raise_on_budget=raise_on_budget,
    )
    report.attack = "ga-two-pass"
    report.details["case1_widths"] = [float(w) for w in case1.widths]
    report.details["case1_generations"] = case1.generations
    report.details["case1_wall_time_s"] = case1.wall_time_s
    report.wall_time_s += case1.wall_time_s
    return report


# ---------------------------------------------------------------------------
# receiver experiment: recover the embedded oscillator key block through the
# chain output only
# ---------------------------------------------------------------------------


def _block_decode(locked_view: LockedNetlist, slot: int, fixed_widths: np.ndarray):
    grid = locked_view.grids[slot]
    lo, hi = locked_view.slot_spans()[slot]
    local = {b: b - lo for b in grid.bit_indices}

    def decode(genes: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(genes)
        acc = np.zeros(batch.shape[0])
        for col in range(grid.cols):
            col_bits = grid.column_bits(col)
            if col_bits:
                on = batch[:, local[col_bits[0]]].astype(float)
                for b in col_bits[1:]:
                    on = on * batch[:, local[b]]
            else:
                on = np.ones(batch.shape[0])
            acc = acc + grid.col_widths[col] * on
        widths = np.tile(fixed_widths, (batch.shape[0], 1))
        widths[:, slot] = acc
        return widths

    return decode


def run_receiver_attack(
    locked_view: LockedNetlist,
    oracle: OracleBundle,
    *,
    seed: int = DEFAULT_SEED,
    target_slot: int = 0,
    ga_overrides: dict | None = None,
    raise_on_budget: bool = True,
) -> ExperimentReport:
    """Two-pass attack on the oscillator key block using only the receiver
    output curve. Pass one estimates every stage's width from the chain
    output; pass two searches the target slot's key bits with the other
    slots pinned to their estimates."""
    _require_attack_view(locked_view)
    if "freq_response" not in oracle.curves or len(oracle.curves) != 1:
        raise InvalidParams("receiver oracle must expose exactly the chain output")
    case1 = run_case1(
        locked_view,
        oracle,
        seed=seed,
        target_rel=RECEIVER_TARGET_REL,
        ga_overrides=ga_overrides,
        raise_on_budget=raise_on_budget,
    )
    lo, hi = locked_view.slot_spans()[target_slot]
    block_len = hi - lo
    criteria = _curve_criteria(locked_view.base, oracle)
    weight = math.sqrt(oracle.norm_sq())
    hint = WidthHintCriterion(
        case1.widths[target_slot : target_slot + 1], HINT_SLACK_REL, weight
    )

    class _SlotHint:
        def residuals_batch(self, widths: np.ndarray) -> np.ndarray:
            return hint.residuals_batch(widths[:, target_slot : target_slot + 1])

    target = (RECEIVER_TARGET_REL**2) * oracle.norm_sq()
    config = _ga_config(block_len, seed, target, ga_overrides)
    ff = FitnessFunction(
        decode=_block_decode(locked_view, target_slot, case1.widths),
        criteria=criteria + [_SlotHint()],
    )
    result = run_ga(config, BINARY, ff)

    block = Key.from_array(result.best.genes)
    widths = ff.decode(result.best.genes[None, :])[0]
    verified = _verify_against_oracle(locked_view.base, widths, oracle, RECEIVER_VERIFY_REL)
    solved = result.halt_reason == HALT_TARGET
    report = ExperimentReport(
        benchmark=locked_view.base.kind,
        scheme=locked_view.scheme,
        k=locked_view.k,
        attack="ga-receiver-block",
        kprime=1,
        recovered_keys=[block.to_hex()],
        recovered_widths=[float(w) for w in widths],
        generations=result.generations,
        wall_time_s=result.wall_time_s + case1.wall_time_s,
        final_fitness=result.best.fitness,
        seed=seed,
        status="SUCCESS" if (solved and verified) else "FAILED",
        halt_reason=result.halt_reason,
        verified=verified,
        details={
            "target_slot": target_slot,
            "block_bits": block_len,
            "case1_widths": [float(w) for w in case1.widths],
            "case1_generations": case1.generations,
            "case2_generations": result.generations,
        },
    )
    if raise_on_budget and not solved:
        raise BudgetExhausted("receiver block recovery exhausted its budget", report=report)
    return report


# ---------------------------------------------------------------------------
# key census
# ---------------------------------------------------------------------------


@dataclass
class CensusResult:
    count: int
    matching: list  # hex strings
    checked: int
    mode: str
    histogram: list  # (key_hex, metric) rows
    metric_name: str


_PRIMARY_METRIC = {
    "ota": "f_unity_hz",
    "bpf": "f_center_hz",
    "pll": "f_locking_hz",
    "twg": "period_s",
    "receiver": "passband_center_hz",
}


def _batch_metric(model: CircuitModel, widths: np.ndarray, responses: dict) -> np.ndarray:
    """Primary characterization metric per batch row (vectorized, coarse)."""
    kind = model.kind
    if kind == "pll":
        from galock.circuits import pll_lock_frequency

        return pll_lock_frequency(model, widths)
    if kind == "twg":
        c = model.constants
        with np.errstate(divide="ignore"):
            i_up = c["i_coeff"] * widths[:, 0]
            i_dn = c["i_coeff"] * widths[:, 1]
            dv = c["v_hi"] - c["v_lo"]
            t_r = np.where(i_up > 0, c["cap"] * dv / np.where(i_up > 0, i_up, 1.0), np.inf)
            t_f = np.where(i_dn > 0, c["cap"] * dv / np.where(i_dn > 0, i_dn, 1.0), np.inf)
        return t_r + t_f
    y = responses["freq_response"]
    x = model.grids["freq_response"].x()
    if kind == "ota":
        below = y < 0.0
        has = np.any(below, axis=1)
        idx = np.clip(np.argmax(below, axis=1), 1, y.shape[1] - 1)
        rows = np.arange(y.shape[0])
        y0 = y[rows, idx - 1]
        y1 = y[rows, idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(y1 != y0, (0.0 - y0) / (y1 - y0), 0.5)
        lx = np.log10(x)
        out = 10.0 ** (lx[idx - 1] + frac * (lx[idx] - lx[idx - 1]))
        return np.where(has, out, np.nan)
    # bpf / receiver: sampled peak location
    idx = np.argmax(y, axis=1)
    return x[idx]


def key_census(
    locked_view: LockedNetlist,
    oracle: OracleBundle,
    *,
    eps_rel: float = EPS_MATCH_REL,
    cap: int = CENSUS_CAP_DEFAULT,
    sample_size: int | None = None,
    seed: int = DEFAULT_SEED,
) -> CensusResult:
    """Count keys whose every observable matches the oracle within tolerance.

    Exhaustive when the key space fits under the cap; otherwise a uniform
    sample of ``sample_size`` keys must be requested explicitly (CapExceeded
    points there). Also tabulates the benchmark's headline metric per key for
    multiplicity histograms.
    """
    k = locked_view.k
    exhaustive = k <= 63 and (1 << k) <= cap
    if not exhaustive and sample_size is None:
        raise CapExceeded(
            f"2^{k} keys exceed the census cap {cap}; pass sample_size for sampled mode"
        )
    rng = np.random.default_rng(seed)
    targets = {name: c.y for name, c in oracle.curves.items()}
    norms = {name: float(np.linalg.norm(y)) or 1.0 for name, y in targets.items()}

    matching: list = []
    histogram: list = []
    checked = 0
    total = (1 << k) if exhaustive else sample_size

    while checked < total:
        n = min(CENSUS_CHUNK, total - checked)
        if exhaustive:
            ints = np.arange(checked, checked + n, dtype=np.uint64)
            bits = ((ints[:, None] >> np.arange(k, dtype=np.uint64)[None, :]) & 1).astype(np.uint8)
        else:
            bits = rng.integers(0, 2, size=(n, k), dtype=np.uint8)
        widths = widths_for_keys(locked_view, bits)
        uniq, inverse = np.unique(widths, axis=0, return_inverse=True)
        responses = locked_view.base.batch_responses(uniq)
        ok = np.ones(uniq.shape[0], dtype=bool)
        for name, sim in responses.items():
            diff = sim - targets[name][None, :]
            dist = np.linalg.norm(diff, axis=1) / norms[name]
            ok &= dist <= eps_rel
        metric = _batch_metric(locked_view.base, uniq, responses)
        row_ok = ok[inverse]
        row_metric = metric[inverse]
        for i in np.nonzero(row_ok)[0]:
            matching.append(Key.from_array(bits[i]).to_hex())
        for i in range(n):
            histogram.append((Key.from_array(bits[i]).to_hex(), float(row_metric[i])))
        checked += n

    return CensusResult(
        count=len(matching),
        matching=matching,
        checked=checked,
        mode="exhaustive" if exhaustive else "sampled",
        histogram=histogram,
        metric_name=_PRIMARY_METRIC[locked_view.base.kind],
    )


def census_to_csv(census: CensusResult, path) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["key_hex", census.metric_name])
        for key_hex, metric in census.histogram:
            w.writerow([key_hex, f"{metric:.12g}"])


# ---------------------------------------------------------------------------
# attack comparison (scaling report)
# ---------------------------------------------------------------------------


COMPARISON_COLUMNS = ("bench", "scheme", "k", "attack", "Kprime", "t_s")


@dataclass
class ComparisonResult:
    rows: list  # per COMPARISON_COLUMNS
    runs: dict  # (k, attack) -> details


def compare_attacks(
    benchmark: str,
    scheme: str,
    ks,
    seeds,
    *,
    base: CircuitModel | None = None,
    enum_tol_rel: float = enumattack.DEFAULT_TOL_REL,
    candidate_cap: int = enumattack.DEFAULT_CANDIDATE_CAP,
) -> ComparisonResult:
    """Run the genetic and enumeration attacks across key sizes.

    One lock instance per key size; the genetic attack runs per seed (two
    pass), the enumeration attack once (it is deterministic). Rows follow
    the ``bench,scheme,k,attack,Kprime,t_s`` schema; per-seed generation
    counts live in ``runs`` for scaling analysis.
    """
    base = base or build_benchmark(benchmark)
    rows: list = []
    runs: dict = {}
    for k in ks:
        locked = make_lock(base, scheme, k, rng_seed=k)
        oracle = make_oracle(locked)
        view = locked.attack_view()

        ga_times, ga_gens, ga_status = [], [], []
        for seed in seeds:
            try:
                report = two_pass(view, oracle, seed=seed, raise_on_budget=False)
            except BudgetExhausted as exc:  # pragma: no cover - budget guard
                report = exc.report
            ga_times.append(report.wall_time_s)
            ga_gens.append(report.generations)
            ga_status.append(report.status)
        rows.append(
            (benchmark, scheme, k, "ga", 1, statistics.median(ga_times))
        )
        runs[(k, "ga")] = {
            "generations": ga_gens,
            "times": ga_times,
            "status": ga_status,
            "median_generations": statistics.median(ga_gens),
        }

        t0 = time.perf_counter()
        try:
            targets = enumattack.derive_targets(view, locked.base.spec, oracle.metrics)
            # snug window on ladder grids: the tolerance never spans more
            # than half the smallest column, keeping the candidate set small
            constraint = enumattack.build_constraint(view, targets, enum_tol_rel)
            slots = []
            for slot in constraint.slots:
                cap_abs = 0.45 * min(slot.col_widths)
                slots.append(
                    enumattack.SlotConstraint(
                        slot.target, min(slot.tol_abs, cap_abs), slot.col_widths, slot.col_bits
                    )
                )
            constraint = enumattack.LockConstraint(constraint.k, tuple(slots))
            candidates = enumattack.enumerate_keys(constraint, cap=candidate_cap)
            check = enumattack.brute_check(candidates, view, oracle.curves)
            kprime = len(candidates)
            enum_detail = {
                "kprime": kprime,
                "survivors": len(check.survivors),
                "checked": check.checked,
            }
        except CandidateOverflow:
            kprime = -1
            enum_detail = {"kprime": -1, "overflow": True}
        enum_time = time.perf_counter() - t0
        rows.append((benchmark, scheme, k, "enum", kprime, enum_time))
        runs[(k, "enum")] = dict(enum_detail, time=enum_time)
    return ComparisonResult(rows=rows, runs=runs)


def comparison_to_csv(result: ComparisonResult, path) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(COMPARISON_COLUMNS)
        for bench, scheme, k, attack, kprime, t_s in result.rows:
            w.writerow([bench, scheme, k, attack, kprime, f"{t_s:.6f}"])


# ---------------------------------------------------------------------------
# convenience: build a full experiment
# ---------------------------------------------------------------------------


def make_experiment(
    benchmark: str, scheme: str, k: int, seed: int = DEFAULT_SEED, slot_bits=None
):
    """(oracle-side locked netlist, oracle bundle) for one benchmark instance."""
    base = build_benchmark(benchmark)
    locked = make_lock(base, scheme, k, rng_seed=seed, slot_bits=slot_bits)
    return locked, make_oracle(locked)


RECEIVER_SLOT_BITS = (40, 236, 236)


def make_receiver_experiment(seed: int = DEFAULT_SEED, k: int = 512, scheme: str = "pb"):
    """Locked receiver with the oscillator block pinned to 40 of the k bits."""
    if k != sum(RECEIVER_SLOT_BITS):
        lo = 40
        rest = k - lo
        blocks = (lo, rest // 2, rest - rest // 2)
    else:
        blocks = RECEIVER_SLOT_BITS
    return make_experiment("receiver", scheme, k, seed=seed, slot_bits=blocks)
