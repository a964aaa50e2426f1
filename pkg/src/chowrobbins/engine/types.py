"""Configuration and result types shared by the certifier, oracle and simulator."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..brownian import shepp_alpha
from ..extprec import ExtReal
from ..walkbounds import ValueInterval


class PrecisionMode(str, enum.Enum):
    EXTENDED = "extended"
    STRICT = "strict"


class ConfigError(ValueError):
    pass


class IncompleteCertification(RuntimeError):
    """Raised when a table is requested over a range with unsettled records."""


@dataclass(frozen=True)
class Position:
    d: int
    n: int

    def __post_init__(self):
        if self.n < 0 or abs(self.d) > self.n or (self.d - self.n) % 2:
            raise ValueError(f"unreachable position (d={self.d}, n={self.n})")


def target_time(d_max: int) -> float:
    """(d^2 + d)/alpha^2: roughly where the last stop at height d_max happens."""
    a = float(shepp_alpha().alpha)
    return (d_max * d_max + d_max) / (a * a)


MIN_HORIZON = 4000  # well past n = 1600, where the nontrivial lower bound starts


def default_horizon(d_max: int, multiplier: float = 2.0) -> int:
    return max(int(math.ceil(multiplier * target_time(d_max))), MIN_HORIZON)


# extended mode: eps = EXT_SLACK / sqrt(n); widening by relative STRICT_WIDEN per step
EXT_SLACK = 1e-20
EXT_INJECT_PAD = 1e-24
STRICT_WIDEN = 2.0 ** -100
STRICT_INJECT_PAD = 1e-22


@dataclass(frozen=True)
class EngineConfig:
    d_max: int
    horizon: int | None = None
    band_below: int = 256
    full_below: int = 1600  # rows n <= full_below are stored in full
    precision_mode: PrecisionMode = PrecisionMode.EXTENDED
    slack: float | None = None
    threads: int = 1
    # optional capture of every classification with |d| <= report_d, n <= report_n
    report_d: int = 0
    report_n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "precision_mode", PrecisionMode(self.precision_mode))
        if self.d_max < 1:
            raise ConfigError("d_max must be at least 1")
        if self.horizon is None:
            object.__setattr__(self, "horizon", default_horizon(self.d_max))
        if self.band_below < 8:
            raise ConfigError("band_below must be at least 8")
        if self.full_below < 0:
            raise ConfigError("full_below must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.slack is not None and self.slack < 0:
            raise ConfigError("slack must be non-negative")
        nt = target_time(self.d_max)
        if self.horizon < nt + 4.0 * math.sqrt(nt) + 10:
            raise ConfigError(
                f"horizon {self.horizon} too close to the certified region (n up to ~{nt:.0f})"
            )
        if self.report_d < 0 or self.report_n < 0 or self.report_n >= self.horizon:
            raise ConfigError("report window must lie inside the horizon")

    @property
    def slack_coefficient(self) -> float:
        if self.slack is not None:
            return float(self.slack)
        return 0.0 if self.precision_mode is PrecisionMode.STRICT else EXT_SLACK

    @property
    def strict(self) -> bool:
        return self.precision_mode is PrecisionMode.STRICT

    @property
    def inject_pad(self) -> float:
        return STRICT_INJECT_PAD if self.strict else EXT_INJECT_PAD

    def echo(self) -> dict:
        out = asdict(self)
        out["precision_mode"] = self.precision_mode.value
        out["slack"] = self.slack_coefficient
        out["slack_policy"] = "eps/sqrt(n)"
        return out


@dataclass(frozen=True)
class BoundaryRecord:
    d: int
    n1: int  # largest n with certified Stop at height d (-1 if none seen)
    n2: int  # smallest n starting an unbroken run of certified Go (-1 if none)

    @property
    def settled(self) -> bool:
        return self.n1 >= 1 and self.n2 == self.n1 + 2

    @property
    def ns(self) -> int | None:
        return self.n1 if self.settled else None


@dataclass
class BandRow:
    """Value intervals for the stored states d_lo, d_lo+2, ..., d_hi at time n."""

    n: int
    d_lo: int
    d_hi: int
    lo_hi: np.ndarray
    lo_lo: np.ndarray
    hi_hi: np.ndarray
    hi_lo: np.ndarray

    def __post_init__(self):
        if (self.d_lo - self.n) % 2 or (self.d_hi - self.n) % 2:
            raise ValueError("band limits must match the parity of n")
        if len(self.lo_hi) != (self.d_hi - self.d_lo) // 2 + 1:
            raise ValueError("band arrays have the wrong length")

    def __len__(self):
        return len(self.lo_hi)

    def holds(self, d: int) -> bool:
        return self.d_lo <= d <= self.d_hi and (d - self.d_lo) % 2 == 0

    def interval(self, d: int) -> ValueInterval:
        if not self.holds(d):
            raise KeyError(d)
        i = (d - self.d_lo) // 2
        return ValueInterval(
            ExtReal(float(self.lo_hi[i]), float(self.lo_lo[i])),
            ExtReal(float(self.hi_hi[i]), float(self.hi_lo[i])),
        )

    def positions(self) -> range:
        return range(self.d_lo, self.d_hi + 1, 2)


@dataclass
class CertifierResult:
    config: EngineConfig
    records: list[BoundaryRecord]
    start: ValueInterval  # certified interval for V at (0, 0)
    violations: int  # interval nesting failures (expected 0)
    band_errors: int  # children missing from the band that were not above the boundary
    monotone_breaks: int  # non-Stop at (d, n) after Stop was certified at a larger n
    elapsed: float
    report: np.ndarray | None = field(default=None, repr=False)
    # rows: Stop margin d/n - cont_hi at n1; Go margin cont_lo - d/n at n2;
    # enclosure width of the continuation value where the Go run first broke;
    # enclosure width at n1
    margins: np.ndarray | None = field(default=None, repr=False)

    def record(self, d: int) -> BoundaryRecord:
        return self.records[d - 1]

    @property
    def all_settled(self) -> bool:
        return all(r.settled for r in self.records)

    def report_code(self, d: int, n: int) -> int:
        """Classification code captured at (d, n): 0 unknown, 1 stop, 2 go, -1 not stored."""
        if self.report is None:
            raise LookupError("no report window was requested")
        rd = self.config.report_d
        return int(self.report[n, d + rd])
