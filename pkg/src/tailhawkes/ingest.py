"""Series loading, threshold selection and exceedance extraction.

A raw CSV of prices or returns becomes a :class:`ReturnSeries` of daily
log-returns indexed by trading day.  Symmetric sample quantiles of the
training window define the left and right thresholds, and every return
strictly beyond a threshold becomes an event of the two-tailed exceedance
history.  A point exactly equal to a threshold is not an exceedance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from tailhawkes.core import LEFT, RIGHT, TAIL_NAMES


@dataclass(frozen=True)
class ReturnSeries:
    """Daily log-return series with a training/forecast split.

    The trading-day index is implicit: point ``i`` sits at time ``i`` with
    unit step.  ``labels`` carries optional calendar dates for display and
    for resolving date-valued training cutoffs; time arithmetic never uses
    them.
    """

    x: np.ndarray
    train_end: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("x must be a non-empty 1-d array")
        if not np.all(np.isfinite(x)):
            raise ValueError("returns must be finite")
        if not (0 < self.train_end <= x.size):
            raise ValueError(f"train_end must lie in (0, {x.size}]")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != x.size:
                raise ValueError("labels length must match x")
        x.flags.writeable = False

    def __len__(self) -> int:
        return self.x.size

    @property
    def t_index(self) -> np.ndarray:
        return np.arange(self.x.size)

    def training_x(self) -> np.ndarray:
        return self.x[: self.train_end]


@dataclass(frozen=True)
class ExceedanceSeries:
    """Two-tailed exceedance event history.

    Events are (time, tail, signed excess) triples sorted by time with at
    most one event per time step; left excesses are negative, right
    positive.  ``T`` is the horizon length in trading days.
    """

    u_left: float
    u_right: float
    t: np.ndarray
    tail: np.ndarray
    m: np.ndarray
    T: int
    train_end: int

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        tail = np.asarray(self.tail, dtype=np.int8)
        m = np.asarray(self.m, dtype=float)
        for name, arr in (("t", t), ("tail", tail), ("m", m)):
            object.__setattr__(self, name, arr)
        if not (t.shape == tail.shape == m.shape) or t.ndim != 1:
            raise ValueError("t, tail and m must be 1-d arrays of equal length")
        if not self.u_left < self.u_right:
            raise ValueError("u_left must be below u_right")
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("event times must be strictly increasing")
            if t[0] < 0 or t[-1] >= self.T:
                raise ValueError("event times must lie in [0, T)")
            if np.any((tail != LEFT) & (tail != RIGHT)):
                raise ValueError("tail labels must be 0 (left) or 1 (right)")
            if np.any(m[tail == LEFT] >= 0) or np.any(m[tail == RIGHT] <= 0):
                raise ValueError("excess sign inconsistent with tail")
        if not (0 < self.train_end <= self.T):
            raise ValueError("train_end must lie in (0, T]")
        for arr in (t, tail, m):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.t.size

    def n_events(self, tail: int | None = None, window: tuple[float, float] | None = None) -> int:
        sel = np.ones(self.t.size, dtype=bool)
        if tail is not None:
            sel &= self.tail == tail
        if window is not None:
            sel &= (self.t >= window[0]) & (self.t < window[1])
        return int(np.sum(sel))

    def to_dict(self) -> dict:
        return {
            "u_left": self.u_left,
            "u_right": self.u_right,
            "T": self.T,
            "train_end": self.train_end,
            "events": [
                {"t": int(t), "tail": TAIL_NAMES[tail], "m": float(m)}
                for t, tail, m in zip(self.t, self.tail, self.m)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExceedanceSeries":
        events = d.get("events", [])
        return cls(
            u_left=float(d["u_left"]),
            u_right=float(d["u_right"]),
            t=np.array([e["t"] for e in events], dtype=np.int64),
            tail=np.array([TAIL_NAMES.index(e["tail"]) for e in events], dtype=np.int8),
            m=np.array([e["m"] for e in events], dtype=float),
            T=int(d["T"]),
            train_end=int(d["train_end"]),
        )


def load_series(path, price_column: str = "close", date_column: str | None = "date",
                returns_column: str | None = None, train_end: int | str | None = None) -> ReturnSeries:
    """Load a CSV of daily prices or returns.

    With ``price_column`` (default), prices ``P_t`` are converted to
    log-returns ``ln(P_t / P_(t-1))``, dropping the first point; pass
    ``returns_column`` instead to read returns directly.  ``train_end`` may
    be an integer index into the resulting return series or a date string
    matched against ``date_column`` (the first point on or after the date
    starts the forecast period); by default the whole series is training.
    """
    column = returns_column or price_column
    values: list[float] = []
    labels: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ValueError(f"column {column!r} not found in {path}")
        has_date = date_column is not None and date_column in reader.fieldnames
        for i, row in enumerate(reader, start=1):
            raw = (row.get(column) or "").strip()
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"non-numeric value at row {i}") from None
            if not math.isfinite(value):
                raise ValueError(f"non-numeric value at row {i}")
            if returns_column is None and value <= 0:
                raise ValueError(f"non-positive price at row {i}")
            values.append(value)
            if has_date:
                labels.append(row[date_column].strip())
    if len(values) < 3:
        raise ValueError("need at least 3 data points")
    if returns_column is None:
        x = np.diff(np.log(np.asarray(values)))
        labels = labels[1:]
    else:
        x = np.asarray(values)
    label_tuple = tuple(labels) if labels else None
    return ReturnSeries(x=x, train_end=_resolve_train_end(train_end, x.size, label_tuple),
                        labels=label_tuple)


def _resolve_train_end(train_end, n: int, labels) -> int:
    if train_end is None:
        return n
    if isinstance(train_end, str):
        if not labels:
            raise ValueError("date-valued train_end requires a date column")
        for i, lab in enumerate(labels):
            if lab >= train_end:
                return i if i > 0 else 1
        raise ValueError(f"train_end date {train_end!r} is beyond the series")
    return int(train_end)


def select_thresholds(r: ReturnSeries, q: float = 0.025) -> tuple[float, float]:
    """Symmetric sample-quantile thresholds from the training window.

    Uses the order-statistic (lower inverse empirical CDF) convention: the
    left threshold is the ceil(n*q)-th smallest training return and the
    right threshold its mirror image, the ceil(n*q)-th largest.  Combined
    with strict exceedance inequalities this gives equal left and right
    training counts up to ties at the threshold values.
    """
    if not 0 < q < 0.5:
        raise ValueError("q must lie in (0, 0.5)")
    x = np.sort(r.training_x())
    n = x.size
    if n * q < 1:
        raise ValueError(f"training window of {n} points is too short for q = {q}")
    k = math.ceil(n * q)
    u_left = float(x[k - 1])
    u_right = float(x[n - k])
    if not u_left < u_right:
        raise ValueError("degenerate thresholds; training window has too little spread")
    return u_left, u_right


def extract_exceedances(r: ReturnSeries, u_left: float, u_right: float) -> ExceedanceSeries:
    """Extract the two-tailed exceedance history against fixed thresholds."""
    if not u_left < u_right:
        raise ValueError("u_left must be below u_right")
    is_left = r.x < u_left
    is_right = r.x > u_right
    t = np.flatnonzero(is_left | is_right).astype(np.int64)
    tail = np.where(is_left[t], LEFT, RIGHT).astype(np.int8)
    m = r.x[t] - np.where(tail == LEFT, u_left, u_right)
    return ExceedanceSeries(u_left=u_left, u_right=u_right, t=t, tail=tail, m=m,
                            T=len(r), train_end=r.train_end)
