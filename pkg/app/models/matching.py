from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field


class Matching(BaseModel):
    """Level matching of F blocks (source starts) onto F' substrings (target starts)"""
    model_config = ConfigDict(frozen=True)

    level: int
    block_len: int
    pairs: List[Tuple[int, int]] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def aligned(self) -> bool:
        return all(i % self.block_len == 0 for i, _ in self.pairs)

    @property
    def monotone(self) -> bool:
        sources = [i for i, _ in self.pairs]
        targets = [t for _, t in self.pairs]
        return sources == sorted(sources) and targets == sorted(targets)

    @property
    def disjoint(self) -> bool:
        targets = sorted(t for _, t in self.pairs)
        return all(b - a >= self.block_len for a, b in zip(targets, targets[1:]))

    def offsets(self) -> List[int]:
        return [t - i for i, t in self.pairs]

    def blocks(self) -> List[int]:
        return [i // self.block_len for i, _ in self.pairs]


class Witness(BaseModel):
    """t-witness: per-depth counts b_i and index sets B_i (1-based, ascending)"""
    model_config = ConfigDict(frozen=True)

    t: int
    b: Dict[int, int] = Field(default_factory=dict)
    B: Dict[int, List[int]] = Field(default_factory=dict)

    @property
    def weight(self) -> int:
        return sum(i * count for i, count in self.b.items())

    @property
    def size(self) -> int:
        return sum(len(s) for s in self.B.values())

    def is_valid(self) -> bool:
        if self.weight > self.t:
            return False
        for i, selection in self.B.items():
            if any(j < 1 or j > self.t * (1 << i) for j in selection):
                return False
            if len(selection) > (self.t >> i) + self.b.get(i, 0):
                return False
            if self.b.get(i, 0) > self.t:
                return False
        return True
