from typing import List

from pydantic import BaseModel, ConfigDict


class LaneSeed(BaseModel):
    """One small-bias lane: x in the low half of `value`, y in the high half"""
    model_config = ConfigDict(frozen=True)

    width: int
    value: int = 0

    @property
    def m(self) -> int:
        return self.width // 2

    @property
    def x(self) -> int:
        return self.value & ((1 << self.m) - 1)

    @property
    def y(self) -> int:
        return self.value >> self.m


class BiasSeed(BaseModel):
    """Compact description of the randomness table"""
    model_config = ConfigDict(frozen=True)

    lanes: List[LaneSeed]
    bias_exponent: int

    @property
    def total_width(self) -> int:
        return sum(lane.width for lane in self.lanes)


class LaneSpec(BaseModel):
    """Where one (family, level) segment of the table lives inside the lane streams"""
    model_config = ConfigDict(frozen=True)

    family: str  # hash, verify, color, final
    level: int
    lane: int
    start: int
    rows: int
    cols: int

    @property
    def length(self) -> int:
        return self.rows * self.cols
