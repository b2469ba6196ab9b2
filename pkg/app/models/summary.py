from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import LengthMismatch
from app.models.params import Params, Scheme, derive_params
from app.models.seed import BiasSeed

SUMMARY_MAGIC = b"DXS1"
SUMMARY_VERSION = 2
CODEWORD_MAGIC = b"DXC1"


class Summary(BaseModel):
    """The transmitted sketch S_F"""
    model_config = ConfigDict(frozen=True)

    version: int = SUMMARY_VERSION
    scheme: Scheme
    n: int
    k: int
    o: int
    L: int
    w: int = 0  # RS symbol width, 0 for Alg2
    poly: int = 0  # RS field polynomial, 0 for Alg2
    # Constants the sender built with; recovery never reads them from settings
    c: int
    verify_multiplier: int
    color_hash_bits: int
    final_check_bits: int
    seed: BiasSeed
    level0: List[int]
    payloads: List[bytes] = Field(default_factory=list)  # levels 1..L, empty past the identity level
    final_check: bytes

    def params(self) -> Params:
        params = derive_params(
            self.n,
            self.k,
            self.scheme,
            o=self.o,
            c=self.c,
            verify_multiplier=self.verify_multiplier,
            color_hash_bits=self.color_hash_bits,
            final_check_bits=self.final_check_bits,
        )
        if params.L != self.L:
            raise LengthMismatch(f"header declares L={self.L} but n, k imply L={params.L}")
        return params


class SummaryReport(BaseModel):
    """Section sizes of a serialized summary, plus the seed lanes"""
    scheme: Scheme
    n: int
    k: int
    o: int
    L: int
    w: int
    c: int
    verify_multiplier: int
    color_hash_bits: int
    final_check_bits: int
    header_bytes: int
    seed_bytes: int
    level0_bytes: int
    payload_bytes: List[int]
    final_check_bytes: int
    crc_bytes: int
    total_bytes: int
    lane_widths: List[int]
    # Deterministic summaries only
    enumeration_cap_bits: Optional[int] = None
    lane_clamped: bool = False  # lane narrower than the bias target asks for

    @property
    def summary_bits(self) -> int:
        return 8 * self.total_bytes


class Codeword(BaseModel):
    """Systematic insertion/deletion codeword: X verbatim, then the protected summary"""
    model_config = ConfigDict(frozen=True)

    n: int  # message length in bits
    k: int
    inner_code: int
    systematic: bytes
    redundancy: bytes
    redundancy_bits: int
