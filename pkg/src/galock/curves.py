"""Sampling grids and response curves.

A response curve is an ordered list of (x, y) samples of one observable:
gain in dB over log-spaced frequency, or a voltage over linear time. Curves
are the only thing attacks ever compare, so equality/distance helpers live
here too.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from galock.errors import InvalidParams

AXIS_FREQ = "frequency_hz_log"
AXIS_TIME = "time_s"

UNIT_DB = "dB"
UNIT_VOLTS = "volts"


@dataclass(frozen=True)
class SamplingGrid:
    """Declarative description of the x-axis samples for one observable."""

    axis: str
    start: float
    stop: float
    count: int
    spacing: str  # "log" or "linear"

    def __post_init__(self):
        if self.axis not in (AXIS_FREQ, AXIS_TIME):
            raise InvalidParams(f"unknown axis {self.axis!r}")
        if self.spacing not in ("log", "linear"):
            raise InvalidParams(f"unknown spacing {self.spacing!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise InvalidParams("grid bounds must be finite")
        if not self.start < self.stop:
            raise InvalidParams("grid start must be < stop")
        if self.count < 2:
            raise InvalidParams("grid needs at least 2 points")
        if self.spacing == "log" and self.start <= 0:
            raise InvalidParams("log grid start must be positive")

    def x(self) -> np.ndarray:
        return _grid_x(self.axis, self.start, self.stop, self.count, self.spacing)

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "start": self.start,
            "stop": self.stop,
            "count": self.count,
            "spacing": self.spacing,
        }

    @staticmethod
    def from_dict(d: dict) -> "SamplingGrid":
        return SamplingGrid(d["axis"], d["start"], d["stop"], int(d["count"]), d["spacing"])


@lru_cache(maxsize=256)
def _grid_x(axis, start, stop, count, spacing) -> np.ndarray:
    if spacing == "log":
        x = np.logspace(math.log10(start), math.log10(stop), count)
    else:
        x = np.linspace(start, stop, count)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    """Sampled observable: strictly increasing x, finite y."""

    axis: str
    y_unit: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.shape != x.shape or x.size < 2:
            raise InvalidParams("curve needs matching 1-d x/y with >= 2 points")
        if not np.all(np.diff(x) > 0):
            raise InvalidParams("curve x must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidParams("curve values must be finite")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ResponseCurve)
            and self.axis == other.axis
            and self.y_unit == other.y_unit
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for xi, yi in zip(self.x, self.y):
                w.writerow([f"{xi:.12g}", f"{yi:.12g}"])

    @staticmethod
    def from_csv(path, axis=AXIS_FREQ, y_unit=UNIT_DB) -> "ResponseCurve":
        xs, ys = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["x", "y"]:
                raise InvalidParams(f"unexpected curve CSV header {header!r}")
            for row in reader:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
        return ResponseCurve(axis, y_unit, np.array(xs), np.array(ys))

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "y_unit": self.y_unit,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "ResponseCurve":
        return ResponseCurve(d["axis"], d["y_unit"], np.array(d["x"]), np.array(d["y"]))


def relative_distance(reference: np.ndarray, other: np.ndarray) -> float:
    """Relative L2 distance ||other - reference|| / ||reference||.

    The curve-match tolerance used throughout the package is defined on this
    quantity. A zero-norm reference degrades to the absolute norm.
    """
    ref = np.asarray(reference, dtype=float)
    oth = np.asarray(other, dtype=float)
    denom = float(np.linalg.norm(ref))
    num = float(np.linalg.norm(oth - ref))
    if denom == 0.0:
        return num
    return num / denom


def curves_match(reference: ResponseCurve, y_other: np.ndarray, eps_rel: float) -> bool:
    return relative_distance(reference.y, y_other) <= eps_rel
