from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.params import Scheme


class LevelReport(BaseModel):
    """What recovery saw while moving from one level to the next"""
    level: int
    matching_size: int
    new_matches: int = 0
    pruned: int = 0
    gaps: int = 0
    guess_errors: Optional[int] = None  # only when the true file is supplied
    corrections: int = 0
    witnesses_tried: int = 0
    candidates_tried: int = 0
    tree_counts: Dict[int, int] = Field(default_factory=dict)


class RecoveryReport(BaseModel):
    scheme: Scheme
    n: int
    k: int
    levels: List[LevelReport] = Field(default_factory=list)
    identity_level: Optional[int] = None
    final_check_ok: bool = False

    @property
    def total_corrections(self) -> int:
        return sum(level.corrections for level in self.levels)
