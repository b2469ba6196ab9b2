from typing import List, Literal

from pydantic import BaseModel, Field

from app.models.params import Scheme


class EditOp(BaseModel):
    """One edit; `pos` refers to the string as it is when the edit is applied"""
    kind: Literal["insert", "delete", "substitute"]
    pos: int
    bit: int = 0


class EditScript(BaseModel):
    ops: List[EditOp] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ops)


class BenchRow(BaseModel):
    """One benchmark trial, in CSV column order"""
    n: int
    k: int
    scheme: Scheme
    seed: int
    summary_bits: int
    success: bool
    micros: int
