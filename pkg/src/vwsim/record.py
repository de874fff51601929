"""Time-indexed simulation record with exact rational timeline."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .terms import HN, TIME


@dataclass
class TimeLine:
    times: list[Fraction] = field(default_factory=list)
    steps: list[Fraction] = field(default_factory=list)

    def append(self, t: Fraction, hn: Fraction):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"time {t} does not advance past {self.times[-1]}")
        self.times.append(Fraction(t))
        self.steps.append(Fraction(hn))


class HistoryEnv(dict):
    """Signal values of one record column, with access to earlier columns."""

    def __init__(self, values, record: "SimulationRecord"):
        super().__init__(values)
        self.record = record

    def at(self, name: str, t: Fraction) -> float:
        return self.record.at(name, t)


class SimulationRecord:
    """Per-signal float series.  ``$time$``/``$hn$`` rows project the exact timeline."""

    def __init__(self, names: Iterable[str] = (), ground: Iterable[str] = ()):
        self.names: list[str] = [TIME, HN] + [n for n in names if n not in (TIME, HN)]
        self.series: dict[str, list[float]] = {n: [] for n in self.names}
        self.timeline = TimeLine()
        self.ground = frozenset(ground)

    def __len__(self) -> int:
        return len(self.timeline.times)

    def __contains__(self, name: str) -> bool:
        return name in self.series

    def __getitem__(self, name: str) -> list[float]:
        return self.series[name]

    def append(self, t: Fraction, hn: Fraction, values: dict[str, float]):
        self.timeline.append(t, hn)
        self.series[TIME].append(float(t))
        self.series[HN].append(float(hn))
        for n in self.names[2:]:
            self.series[n].append(0.0 if n in self.ground else values[n])

    def add_series(self, name: str, values: list[float]):
        if len(values) != len(self):
            raise ValueError(f"series {name} has {len(values)} values, record has {len(self)}")
        if name not in self.series:
            self.names.append(name)
        self.series[name] = list(values)

    def column(self, k: int = -1) -> dict[str, float]:
        return {n: s[k] for n, s in self.series.items()}

    def env(self, k: int = -1) -> HistoryEnv:
        return HistoryEnv(self.column(k), self)

    def at(self, name: str, t: Fraction) -> float:
        """Value of ``name`` at time ``t``: linear interpolation, 0 before the first column."""
        if name in self.ground:
            return 0.0
        times = self.timeline.times
        s = self.series[name]
        if not times or t < times[0]:
            return 0.0
        k = bisect.bisect_right(times, t) - 1
        if k >= len(times) - 1 or times[k] == t:
            return s[k]
        t0, t1 = times[k], times[k + 1]
        w = float((t - t0) / (t1 - t0))
        return s[k] + (s[k + 1] - s[k]) * w

    def sub(self, names: Iterable[str]) -> dict[str, list[float]]:
        return {n: list(self.series[n]) for n in names}

    def equals(self, other: "SimulationRecord") -> bool:
        """Bitwise equality of names, timeline and every series."""
        return (
            self.names == other.names
            and self.timeline.times == other.timeline.times
            and self.timeline.steps == other.timeline.steps
            and all(
                [v.hex() for v in self.series[n]] == [v.hex() for v in other.series[n]]
                for n in self.names
            )
        )
