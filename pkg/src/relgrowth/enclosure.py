from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Enclosure:
    """A point estimate together with a closed interval ``[lo, hi]`` claimed to contain the true value."""

    value: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.value <= self.hi:
            raise ValueError(f"estimate {self.value} outside [{self.lo}, {self.hi}]")

    @classmethod
    def around(cls, value: float, halfwidth: float) -> "Enclosure":
        return cls(value, value - halfwidth, value + halfwidth)

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def __truediv__(self, other: "Enclosure") -> "Enclosure":
        if other.contains_zero():
            raise ZeroDivisionError("denominator enclosure contains 0")
        corners = [self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi]
        value = self.value / other.value
        return Enclosure(value, min(min(corners), value), max(max(corners), value))

    def to_dict(self) -> dict:
        return {"value": self.value, "lo": self.lo, "hi": self.hi}
