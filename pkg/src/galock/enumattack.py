"""Equation-based baseline attack: invert the design equations, enumerate keys.

Unlike the genetic attack, this path needs the circuit specification: the
reference current and the characterization constants that let an engineer
express the nominal bias width in closed form. From those it derives a
target width per locked slot, solves the per-slot subset-sum instance over
grid columns exactly (branch and bound with interval pruning, complete
within the tolerance window), expands column on/off states to key-bit
patterns, and finally brute-checks every candidate against the oracle.

The candidate set is complete by construction: every key whose realized
width matches the target within tolerance appears, or the enumeration
aborts with CandidateOverflow when the set would exceed the configured cap.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from galock.circuits import CircuitModel, CircuitSpec
from galock.curves import relative_distance
from galock.errors import CandidateOverflow, InvalidParams, SpecMissing
from galock.locking import Key, LockedNetlist, widths_for_keys

DEFAULT_TOL_REL = 0.005
DEFAULT_CANDIDATE_CAP = 10**6


@dataclass(frozen=True)
class SlotConstraint:
    """Subset-sum instance for one locked slot."""

    target: float
    tol_abs: float
    col_widths: tuple
    col_bits: tuple  # per column: tuple of global key-bit indices

    def __post_init__(self):
        if not (math.isfinite(self.target) and self.target >= 0.0):
            raise InvalidParams("slot target must be finite and >= 0")
        if self.tol_abs < 0.0:
            raise InvalidParams("tolerance must be >= 0")


@dataclass(frozen=True)
class LockConstraint:
    k: int
    slots: tuple


@dataclass
class CandidateKeySet:
    """Keys satisfying every slot constraint, ascending by total width residual."""

    keys: list
    residuals: list

    def __len__(self) -> int:
        return len(self.keys)


@dataclass
class BruteCheckResult:
    ranked: list  # (Key, fitness) ascending
    survivors: list  # keys with fitness <= threshold
    no_match: bool
    checked: int
    wall_time_s: float


# ---------------------------------------------------------------------------
# target derivation (requires the specification)
# ---------------------------------------------------------------------------


def _width_from_gm(gm: float, spec: CircuitSpec) -> float:
    beta, w_ref = spec.require("beta", "w_ref")
    i_bias = gm * gm / (2.0 * beta)
    return i_bias * w_ref / spec.i_ref


def derive_targets(locked_view: LockedNetlist, spec: CircuitSpec | None, oracle_metrics: dict) -> list:
    """Per-slot width targets from the design equations at the oracle's
    measured characterization point.

    Raises SpecMissing without the specification; the locked netlist alone is
    deliberately not enough for this attack path.
    """
    if spec is None:
        raise SpecMissing("equation-based attack requires the circuit specification")
    kind = locked_view.base.kind
    if kind == "ota":
        (r_out, f_pole) = spec.require("r_out", "f_pole")
        f_u = oracle_metrics["f_unity_hz"]
        # unity-gain condition |A(j f_u)| = 1 for the single-pole stage
        gm = math.sqrt(1.0 + (f_u / f_pole) ** 2) / r_out
        return [_width_from_gm(gm, spec)]
    if kind == "bpf":
        c1a, c2a, c1b, c2b, q_a, q_b, c_out, f_out_pole, gm_scale = spec.require(
            "c1a", "c2a", "c1b", "c2b", "q_a", "q_b", "c_out", "f_out_pole_hz",
            "scale_gm_nominal",
        )
        f_c = oracle_metrics.get("f_center_hz") or spec.require("f_center_hz")[0]
        omega0 = 2.0 * math.pi * f_c
        gm_out = 2.0 * math.pi * f_out_pole * c_out
        return [
            _width_from_gm(gm_scale, spec),
            _width_from_gm(omega0 * math.sqrt(c1a * c2a), spec),
            _width_from_gm(omega0 * c1a / q_a, spec),
            _width_from_gm(omega0 * math.sqrt(c1b * c2b), spec),
            _width_from_gm(omega0 * c1b / q_b, spec),
            _width_from_gm(gm_out, spec),
        ]
    if kind == "pll":
        (vco_coeff,) = spec.require("vco_coeff")
        f_lock = oracle_metrics["f_locking_hz"]
        # nominal design centers the oscillator on the lock target
        return [(f_lock / vco_coeff) ** 2]
    if kind == "twg":
        cap, v_lo, v_hi, w_ref = spec.require("cap", "v_lo", "v_hi", "w_ref")
        dv = v_hi - v_lo
        i_coeff = spec.i_ref / w_ref
        t_rise = oracle_metrics["t_rise_s"]
        t_fall = oracle_metrics["t_fall_s"]
        return [cap * dv / t_rise / i_coeff, cap * dv / t_fall / i_coeff]
    if kind == "receiver":
        vco_coeff, if_coeff, amp_w = spec.require("vco_coeff", "if_coeff", "amp_width_nominal")
        f_lo, f_if = spec.require("f_lo_hz", "f_if_hz")
        return [(f_lo / vco_coeff) ** 2, (f_if / if_coeff) ** 2, amp_w]
    raise InvalidParams(f"no target derivation for kind {kind!r}")


def build_constraint(
    locked_view: LockedNetlist, targets, tol_rel: float = DEFAULT_TOL_REL
) -> LockConstraint:
    if len(targets) != len(locked_view.grids):
        raise InvalidParams("one width target per locked slot required")
    slots = []
    for grid, target in zip(locked_view.grids, targets):
        tol_abs = tol_rel * abs(target) if target != 0.0 else tol_rel * min(grid.col_widths)
        slots.append(
            SlotConstraint(
                target=float(target),
                tol_abs=float(tol_abs),
                col_widths=tuple(grid.col_widths),
                col_bits=tuple(grid.column_bits(c) for c in range(grid.cols)),
            )
        )
    return LockConstraint(k=locked_view.k, slots=tuple(slots))


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------


def _column_subsets(slot: SlotConstraint, cap: int) -> list:
    """All column on/off selections whose width lands in the tolerance window.

    Branch and bound over columns in descending width order with prefix-sum
    interval pruning; complete within the window.
    """
    order = sorted(range(len(slot.col_widths)), key=lambda i: -slot.col_widths[i])
    widths = [slot.col_widths[i] for i in order]
    suffix = [0.0] * (len(widths) + 1)
    for i in range(len(widths) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + widths[i]
    lo = slot.target - slot.tol_abs
    hi = slot.target + slot.tol_abs
    results = []
    stack = [(0, 0.0, ())]
    while stack:
        i, acc, chosen = stack.pop()
        if acc > hi:
            continue
        if acc + suffix[i] < lo:
            continue
        if i == len(widths):
            if lo <= acc <= hi:
                results.append((acc, frozenset(order[j] for j in chosen)))
                if len(results) > cap:
                    raise CandidateOverflow(
                        f"more than {cap} column selections in tolerance window"
                    )
            continue
        # exclude column i, then include it (deterministic order)
        stack.append((i + 1, acc, chosen))
        stack.append((i + 1, acc + widths[i], chosen + (i,)))
    results.sort(key=lambda r: (abs(r[0] - slot.target), sorted(r[1])))
    return results


def _off_patterns(n_bits: int) -> list:
    """All local bit patterns of a column that break its conduction path."""
    return [p for p in range(1 << n_bits) if p != (1 << n_bits) - 1]


def _slot_candidates(slot: SlotConstraint, cap: int) -> list:
    """(residual, {bit: value}) for every key assignment satisfying the slot."""
    out = []
    for width, on_cols in _column_subsets(slot, cap):
        residual = abs(width - slot.target)
        assignments = [{}]
        for col, bits in enumerate(slot.col_bits):
            if not bits:
                continue  # unkeyed column conducts unconditionally
            if col in on_cols:
                choices = [(1 << len(bits)) - 1]
            else:
                choices = _off_patterns(len(bits))
            new_assignments = []
            for base in assignments:
                for pattern in choices:
                    a = dict(base)
                    for j, bit in enumerate(bits):
                        a[bit] = (pattern >> j) & 1
                    new_assignments.append(a)
                    if len(out) + len(new_assignments) > cap:
                        raise CandidateOverflow(f"candidate key set exceeds cap {cap}")
            assignments = new_assignments
        out.extend((residual, a) for a in assignments)
        if len(out) > cap:
            raise CandidateOverflow(f"candidate key set exceeds cap {cap}")
    return out


def enumerate_keys(constraint: LockConstraint, cap: int = DEFAULT_CANDIDATE_CAP) -> CandidateKeySet:
    """Complete candidate key set across all slots (cross product), sorted
    ascending by total width residual.
    """
    per_slot = [_slot_candidates(s, cap) for s in constraint.slots]
    combos = [(0.0, {})]
    for slot_cands in per_slot:
        new_combos = []
        for res0, bits0 in combos:
            for res1, bits1 in slot_cands:
                merged = dict(bits0)
                merged.update(bits1)
                new_combos.append((res0 + res1, merged))
                if len(new_combos) > cap:
                    raise CandidateOverflow(f"candidate key set exceeds cap {cap}")
        combos = new_combos
    entries = []
    for residual, assignment in combos:
        bits = [0] * constraint.k
        for bit, value in assignment.items():
            bits[bit] = value
        entries.append((residual, Key(tuple(bits))))
    entries.sort(key=lambda e: (e[0], e[1].to_int()))
    return CandidateKeySet(keys=[k for _, k in entries], residuals=[r for r, _ in entries])


# ---------------------------------------------------------------------------
# oracle brute check
# ---------------------------------------------------------------------------


def brute_check(
    candidates: CandidateKeySet,
    locked_view: LockedNetlist,
    oracle_curves: dict,
    eps_rel: float = 1e-6,
) -> BruteCheckResult:
    """Simulate every candidate and rank by fitness against the oracle.

    Survivors are the keys whose every observable matches the oracle within
    the relative tolerance; an empty survivor list is an explicit NoMatch.
    """
    if not candidates.keys:
        raise InvalidParams("candidate set is empty")
    t0 = time.perf_counter()
    bits = np.stack([k.as_array() for k in candidates.keys])
    widths = widths_for_keys(locked_view, bits)
    responses = locked_view.base.batch_responses(widths)
    fitness = np.zeros(len(candidates.keys))
    within = np.ones(len(candidates.keys), dtype=bool)
    for name, sim in responses.items():
        target = oracle_curves[name].y
        diff = sim - target[None, :]
        fitness += np.sum(diff * diff, axis=1)
        norm = np.linalg.norm(target)
        dist = np.linalg.norm(diff, axis=1) / (norm if norm > 0 else 1.0)
        within &= dist <= eps_rel
    order = sorted(range(len(candidates.keys)), key=lambda i: (fitness[i], candidates.keys[i].to_int()))
    ranked = [(candidates.keys[i], float(fitness[i])) for i in order]
    survivors = [candidates.keys[i] for i in order if within[i]]
    return BruteCheckResult(
        ranked=ranked,
        survivors=survivors,
        no_match=not survivors,
        checked=len(candidates.keys),
        wall_time_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# solver-exchange export
# ---------------------------------------------------------------------------


def export_smtlib(constraint: LockConstraint, path) -> None:
    """Emit the lock equations in SMT-LIB2 text for out-of-band solvers."""
    lines = ["(set-logic QF_LRA)"]
    for bit in range(constraint.k):
        lines.append(f"(declare-const q{bit} Bool)")
    for s, slot in enumerate(constraint.slots):
        terms = []
        for col, bits in enumerate(slot.col_bits):
            w = f"{slot.col_widths[col]:.17g}"
            if bits:
                conj = (
                    f"q{bits[0]}"
                    if len(bits) == 1
                    else "(and " + " ".join(f"q{b}" for b in bits) + ")"
                )
                terms.append(f"(ite {conj} {w} 0.0)")
            else:
                terms.append(w)
        total = terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"
        lo = f"{slot.target - slot.tol_abs:.17g}"
        hi = f"{slot.target + slot.tol_abs:.17g}"
        lines.append(f"; slot {s}: realized width within tolerance of the target")
        lines.append(f"(assert (>= {total} {lo}))")
        lines.append(f"(assert (<= {total} {hi}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
