"""Key-gated transistor grids that obfuscate a bias width.

A locked bias slot replaces one mirror device of effective width W with an
m x n grid: column i carries a device of width W'_i in row 1 plus keyed
series devices in rows 2..m. A column conducts only when every keyed device
in it is on, so the realized width is

    W(q) = sum_i W'_i * prod_{j in keyed rows} q_ij

with absent positions contributing a fixed 1 to the product. Two schemes:

* ``smt``  - subset-sum ladder columns (each width exceeds the sum of the
             smaller ones), so distinct column subsets realize distinct
             widths and, for grids of up to 20 key bits, exactly one key
             reproduces the nominal response.
* ``pb``   - column widths drawn from a small discrete set {1,2,3,4} units
             and a uniformly random locking key, so collisions are expected:
             many keys realize the nominal width.

The locking key lives only in the oracle-side object; ``attack_view()``
strips it together with all design knowledge (nominal widths, spec).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from galock.circuits import CircuitModel
from galock.curves import ResponseCurve, SamplingGrid
from galock.errors import GenerationFailure, InvalidParams, KeyLengthMismatch

SCHEMES = ("smt", "pb")

GRID_ROWS = 3  # row 1 is the width-setting device; rows 2..m are keyed

# one keyed device per column keeps the key<->width map injective; grids
# beyond this many bits fall back to two keyed devices per column
_SINGLE_BIT_COLUMN_LIMIT = 20

_GENERATION_RETRIES = 64


@dataclass(frozen=True)
class Key:
    """Fixed-length bitvector; bit i weights column assignments via key_map."""

    bits: tuple

    def __post_init__(self):
        if len(self.bits) < 1 or any(b not in (0, 1) for b in self.bits):
            raise InvalidParams("key bits must be 0/1 and non-empty")

    def __len__(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def to_int(self) -> int:
        v = 0
        for i, b in enumerate(self.bits):
            v |= int(b) << i
        return v

    def to_hex(self) -> str:
        digits = (len(self.bits) + 3) // 4
        return format(self.to_int(), f"0{digits}x")

    @staticmethod
    def from_int(value: int, k: int) -> "Key":
        return Key(tuple((value >> i) & 1 for i in range(k)))

    @staticmethod
    def from_hex(text: str, k: int) -> "Key":
        return Key.from_int(int(text, 16), k)

    @staticmethod
    def from_array(bits) -> "Key":
        return Key(tuple(int(b) for b in bits))


@dataclass
class LockGrid:
    """One locked slot: column widths, placement mask, key-bit assignment."""

    rows: int
    cols: int
    col_widths: tuple
    placement: tuple  # rows x cols booleans; row 0 always present
    key_map: dict  # (row, col) -> global key-bit index, rows >= 1 (0-based)

    def __post_init__(self):
        self.col_widths = tuple(float(w) for w in self.col_widths)
        if self.rows < 2 or self.cols < 1:
            raise InvalidParams("grid needs >= 2 rows and >= 1 column")
        if len(self.col_widths) != self.cols or any(
            not math.isfinite(w) or w <= 0 for w in self.col_widths
        ):
            raise InvalidParams("column widths must be positive finite, one per column")
        self.placement = tuple(tuple(bool(p) for p in row) for row in self.placement)
        if len(self.placement) != self.rows or any(len(r) != self.cols for r in self.placement):
            raise InvalidParams("placement mask must be rows x cols")
        if not all(self.placement[0]):
            raise InvalidParams("row 1 devices set the column widths and must be present")
        seen_bits = set()
        for (row, col), bit in self.key_map.items():
            if not (1 <= row < self.rows and 0 <= col < self.cols):
                raise InvalidParams(f"key_map position {(row, col)} outside grid")
            if not self.placement[row][col]:
                raise InvalidParams(f"key bit assigned to absent position {(row, col)}")
            if bit in seen_bits:
                raise InvalidParams(f"key bit {bit} assigned twice")
            seen_bits.add(bit)
        for row in range(1, self.rows):
            for col in range(self.cols):
                if self.placement[row][col] and (row, col) not in self.key_map:
                    raise InvalidParams(f"present keyed position {(row, col)} has no key bit")

    @property
    def bit_indices(self) -> tuple:
        return tuple(sorted(self.key_map.values()))

    def column_bits(self, col: int) -> tuple:
        return tuple(
            bit for (row, c), bit in sorted(self.key_map.items()) if c == col
        )

    def max_width(self) -> float:
        return sum(self.col_widths)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "col_widths": list(self.col_widths),
            "placement": [list(r) for r in self.placement],
            "key_map": [[row, col, bit] for (row, col), bit in sorted(self.key_map.items())],
        }

    @staticmethod
    def from_dict(d: dict) -> "LockGrid":
        return LockGrid(
            rows=int(d["rows"]),
            cols=int(d["cols"]),
            col_widths=tuple(d["col_widths"]),
            placement=tuple(tuple(r) for r in d["placement"]),
            key_map={(int(r), int(c)): int(b) for r, c, b in d["key_map"]},
        )


@dataclass
class LockedNetlist:
    """A benchmark with each locked slot replaced by a key-gated grid."""

    base: CircuitModel
    scheme: str
    k: int
    slot_bits: tuple
    grids: list
    locking_key: Key | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParams(f"unknown scheme {self.scheme!r}")
        if len(self.grids) != self.base.param_count:
            raise InvalidParams("one grid per locked parameter slot required")
        if sum(self.slot_bits) != self.k:
            raise InvalidParams("slot bit blocks must partition the key")
        covered = sorted(b for g in self.grids for b in g.bit_indices)
        if covered != list(range(self.k)):
            raise InvalidParams("grids must cover key bits 0..k-1 exactly once")
        if self.locking_key is not None and len(self.locking_key) != self.k:
            raise KeyLengthMismatch("locking key length != k")

    def attack_view(self) -> "LockedNetlist":
        """Keyless view with all design knowledge stripped from the base model."""
        return LockedNetlist(
            base=self.base.public_view(),
            scheme=self.scheme,
            k=self.k,
            slot_bits=tuple(self.slot_bits),
            grids=list(self.grids),
            locking_key=None,
        )

    def slot_spans(self) -> list:
        spans, lo = [], 0
        for b in self.slot_bits:
            spans.append((lo, lo + b))
            lo += b
        return spans

    def width_bounds(self) -> list:
        """Attacker-visible per-slot width range [0, sum of column widths]."""
        return [(0.0, g.max_width()) for g in self.grids]

    def to_dict(self, include_key: bool = False) -> dict:
        d = {
            "scheme": self.scheme,
            "k": self.k,
            "slot_bits": list(self.slot_bits),
            "grids": [g.to_dict() for g in self.grids],
            "base": self.base.to_dict(include_design=include_key),
        }
        if include_key:
            if self.locking_key is None:
                raise InvalidParams("no locking key to include")
            d["locking_key"] = self.locking_key.to_hex()
        return d

    @staticmethod
    def from_dict(d: dict) -> "LockedNetlist":
        key = None
        if "locking_key" in d:
            key = Key.from_hex(d["locking_key"], int(d["k"]))
        return LockedNetlist(
            base=CircuitModel.from_dict(d["base"]),
            scheme=d["scheme"],
            k=int(d["k"]),
            slot_bits=tuple(int(b) for b in d["slot_bits"]),
            grids=[LockGrid.from_dict(g) for g in d["grids"]],
            locking_key=key,
        )

    def save(self, path, include_key: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_key=include_key), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "LockedNetlist":
        with open(path) as fh:
            return LockedNetlist.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# width evaluation
# ---------------------------------------------------------------------------


def _check_key_cover(grid: LockGrid, key_len: int) -> None:
    bits = grid.bit_indices
    if bits and bits[-1] >= key_len:
        raise KeyLengthMismatch(
            f"grid references bit {bits[-1]} but key has {key_len} bits"
        )


def widths_for_keys(locked: LockedNetlist, keys: np.ndarray) -> np.ndarray:
    """Per-slot effective widths for a (B, k) batch of key bit rows.

    Column contributions accumulate in ascending column order so batched and
    single-key evaluation produce bit-identical floats.
    """
    bits = np.atleast_2d(np.asarray(keys, dtype=np.uint8))
    if bits.shape[1] != locked.k:
        raise KeyLengthMismatch(f"expected {locked.k}-bit keys, got {bits.shape[1]}")
    out = np.zeros((bits.shape[0], len(locked.grids)))
    for slot, grid in enumerate(locked.grids):
        acc = np.zeros(bits.shape[0])
        for col in range(grid.cols):
            col_bits = grid.column_bits(col)
            if col_bits:
                on = bits[:, col_bits[0]].astype(float)
                for b in col_bits[1:]:
                    on = on * bits[:, b]
            else:
                on = np.ones(bits.shape[0])
            acc = acc + grid.col_widths[col] * on
        out[:, slot] = acc
    return out


def effective_width(grid: LockGrid, key: Key) -> float:
    """Realized width of one grid under a key (0 when all columns gate off)."""
    _check_key_cover(grid, len(key))
    bits = key.as_array()
    acc = 0.0
    for col in range(grid.cols):
        prod = 1.0
        for b in grid.column_bits(col):
            prod = prod * float(bits[b])
        acc = acc + grid.col_widths[col] * prod
    return acc


def effective_widths(locked: LockedNetlist, key: Key) -> np.ndarray:
    if len(key) != locked.k:
        raise KeyLengthMismatch(f"expected {locked.k}-bit key, got {len(key)}")
    return widths_for_keys(locked, key.as_array()[None, :])[0]


def locked_simulate(
    locked: LockedNetlist, key: Key, grid: SamplingGrid | None = None
) -> ResponseCurve:
    """Primary-observable curve of the locked netlist under a candidate key.

    Pure; zero/degenerate widths produce floor or flat curves rather than
    errors, since gated-off grids are legitimate search points.
    """
    w = effective_widths(locked, key)
    name = locked.base.primary_observable
    g = grid or locked.base.grids[name]
    y = locked.base.batch_responses(w[None, :], grid_overrides={name: g})[name][0]
    from galock.curves import AXIS_TIME, UNIT_DB, UNIT_VOLTS

    unit = UNIT_VOLTS if g.axis == AXIS_TIME else UNIT_DB
    return ResponseCurve(g.axis, unit, g.x().copy(), y)


def locked_responses(locked: LockedNetlist, key: Key) -> dict:
    """All observables of the locked netlist under a key, as curves."""
    w = effective_widths(locked, key)
    out = {}
    raw = locked.base.batch_responses(w[None, :])
    from galock.curves import AXIS_TIME, UNIT_DB, UNIT_VOLTS

    for name, y in raw.items():
        g = locked.base.grids[name]
        unit = UNIT_VOLTS if g.axis == AXIS_TIME else UNIT_DB
        out[name] = ResponseCurve(g.axis, unit, g.x().copy(), y[0])
    return out


def grid_width_lut(grid: LockGrid) -> np.ndarray:
    """Width of every local key pattern of one grid (2^bits entries).

    Local pattern bit j corresponds to the grid's j-th global key bit in
    ascending index order. Only usable for grids of <= 24 bits.
    """
    bits = grid.bit_indices
    nb = len(bits)
    if nb > 24:
        raise InvalidParams("width LUT limited to 24-bit grids")
    order = {b: j for j, b in enumerate(bits)}
    patterns = np.arange(1 << nb, dtype=np.uint32)
    acc = np.zeros(1 << nb)
    for col in range(grid.cols):
        col_bits = grid.column_bits(col)
        if col_bits:
            on = np.ones(1 << nb, dtype=bool)
            for b in col_bits:
                on &= (patterns >> order[b]) & 1 == 1
            acc = acc + grid.col_widths[col] * on.astype(float)
        else:
            acc = acc + grid.col_widths[col]
    return acc


# ---------------------------------------------------------------------------
# lock generation
# ---------------------------------------------------------------------------


def partition_key(k: int, slots: int, slot_bits=None) -> tuple:
    """Contiguous per-slot bit blocks: equal sizes, remainder to the last slot."""
    if slot_bits is not None:
        blocks = tuple(int(b) for b in slot_bits)
        if len(blocks) != slots or sum(blocks) != k or any(b < 1 for b in blocks):
            raise InvalidParams("explicit slot_bits must be positive and sum to k")
        return blocks
    if k < slots:
        raise InvalidParams(f"key of {k} bits cannot cover {slots} slots")
    base = k // slots
    blocks = [base] * slots
    blocks[-1] += k - base * slots
    return tuple(blocks)


def _ladder_on_subset(n_cols: int, rng) -> list:
    # anchor the top rung so the nominal width stays within 2x of the grid's
    # maximum, keeping parameter-recovery search bounds tight
    on = [n_cols - 1]
    on += [i for i in range(n_cols - 1) if rng.random() < 0.5]
    return sorted(on)


def _make_smt_grid(w_nominal: float, bit_lo: int, n_bits: int, rng):
    """Ladder grid and locking bits for one slot; returns (grid, local_bits)."""
    if n_bits <= _SINGLE_BIT_COLUMN_LIMIT:
        cols = n_bits
        col_bit_groups = [[bit_lo + i] for i in range(n_bits)]
    else:
        cols = (n_bits + 1) // 2
        col_bit_groups = [
            [bit_lo + j for j in range(2 * c, min(2 * c + 2, n_bits))] for c in range(cols)
        ]
    on_cols = _ladder_on_subset(cols, rng)
    ladder_sum = float(sum(2**i for i in on_cols))
    w_unit = w_nominal / ladder_sum
    col_widths = tuple(w_unit * (2**i) for i in range(cols))

    placement = [[True] * cols]
    for _ in range(1, GRID_ROWS):
        placement.append([False] * cols)
    key_map = {}
    local_key = [0] * n_bits
    on_set = set(on_cols)
    for col, group in enumerate(col_bit_groups):
        if len(group) == 1:
            row = int(rng.integers(1, GRID_ROWS))
            placement[row][col] = True
            key_map[(row, col)] = group[0]
            if col in on_set:
                local_key[group[0] - bit_lo] = 1
        else:
            for j, bit in enumerate(group):
                row = 1 + j
                placement[row][col] = True
                key_map[(row, col)] = bit
            if col in on_set:
                for bit in group:
                    local_key[bit - bit_lo] = 1
            else:
                # any non-conducting pattern works; avoid all-ones
                pattern = [int(rng.integers(0, 2)) for _ in group]
                if all(pattern):
                    pattern[int(rng.integers(0, len(pattern)))] = 0
                for bit, val in zip(group, pattern):
                    local_key[bit - bit_lo] = val
    grid = LockGrid(GRID_ROWS, cols, col_widths, tuple(tuple(r) for r in placement), key_map)
    return grid, local_key


def _make_pb_grid(w_nominal: float, bit_lo: int, n_bits: int, rng):
    bits_per_col = GRID_ROWS - 1
    cols = (n_bits + bits_per_col - 1) // bits_per_col
    col_bit_groups = [
        [bit_lo + j for j in range(bits_per_col * c, min(bits_per_col * (c + 1), n_bits))]
        for c in range(cols)
    ]
    for _ in range(_GENERATION_RETRIES):
        local_key = [int(rng.integers(0, 2)) for _ in range(n_bits)]
        on_cols = [
            c for c, group in enumerate(col_bit_groups)
            if all(local_key[b - bit_lo] for b in group)
        ]
        if on_cols:
            break
    else:
        raise GenerationFailure("could not draw a conducting random key")
    multipliers = [int(rng.integers(1, 5)) for _ in range(cols)]
    w_unit = w_nominal / float(sum(multipliers[c] for c in on_cols))
    col_widths = tuple(w_unit * m for m in multipliers)

    placement = [[True] * cols]
    for _ in range(1, GRID_ROWS):
        placement.append([False] * cols)
    key_map = {}
    for col, group in enumerate(col_bit_groups):
        for j, bit in enumerate(group):
            placement[1 + j][col] = True
            key_map[(1 + j, col)] = bit
    grid = LockGrid(GRID_ROWS, cols, col_widths, tuple(tuple(r) for r in placement), key_map)
    return grid, local_key


def _is_super_increasing(widths) -> bool:
    total = 0.0
    for w in sorted(widths):
        if w <= total:
            return False
        total += w
    return True


def verify_width_uniqueness(locked: LockedNetlist) -> bool:
    """Check that distinct keys realize distinct per-slot width vectors.

    Exhaustive per grid up to 20 bits; wider grids are accepted on the
    super-increasing ladder structure, which guarantees distinct subset sums
    (key multiplicity within a conducting pattern is then the only source of
    response collisions and is absent for single-bit columns).
    """
    for grid in locked.grids:
        nb = len(grid.bit_indices)
        if nb <= _SINGLE_BIT_COLUMN_LIMIT:
            lut = grid_width_lut(grid)
            if np.unique(lut).size != lut.size:
                return False
        else:
            if not _is_super_increasing(grid.col_widths):
                return False
    return True


def _generate(base: CircuitModel, scheme: str, k: int, rng_seed: int, slot_bits=None) -> LockedNetlist:
    if base.nominal_params is None:
        raise InvalidParams("lock generation needs the oracle-side model with nominal widths")
    rng = np.random.default_rng(rng_seed)
    blocks = partition_key(k, base.param_count, slot_bits)
    maker = _make_smt_grid if scheme == "smt" else _make_pb_grid
    for _ in range(_GENERATION_RETRIES):
        grids, key_bits = [], []
        lo = 0
        for slot, n_bits in enumerate(blocks):
            grid, local = maker(base.nominal_params[slot], lo, n_bits, rng)
            grids.append(grid)
            key_bits.extend(local)
            lo += n_bits
        locked = LockedNetlist(
            base=base,
            scheme=scheme,
            k=k,
            slot_bits=blocks,
            grids=grids,
            locking_key=Key(tuple(key_bits)),
        )
        if scheme == "pb" or verify_width_uniqueness(locked):
            return locked
    raise GenerationFailure(f"no valid {scheme} lock after {_GENERATION_RETRIES} attempts")


def make_smt_lock(base: CircuitModel, k: int, rng_seed: int, slot_bits=None) -> LockedNetlist:
    """Lock with unique-key construction: exactly one key restores nominal.

    Column widths form a doubling ladder (distinct subset sums). For grids of
    up to 20 key bits each key bit gates its own column, making the key-to-
    width map injective, verified exhaustively; wider grids pair key bits per
    column and keep width-level uniqueness via the ladder.
    """
    return _generate(base, "smt", k, rng_seed, slot_bits)


def make_pb_lock(base: CircuitModel, k: int, rng_seed: int, slot_bits=None) -> LockedNetlist:
    """Lock with a randomly drawn key; multiple keys typically match nominal."""
    return _generate(base, "pb", k, rng_seed, slot_bits)


def make_lock(base: CircuitModel, scheme: str, k: int, rng_seed: int, slot_bits=None) -> LockedNetlist:
    if scheme == "smt":
        return make_smt_lock(base, k, rng_seed, slot_bits)
    if scheme == "pb":
        return make_pb_lock(base, k, rng_seed, slot_bits)
    raise InvalidParams(f"unknown scheme {scheme!r}")
