from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.params import Scheme
from app.models.report import RecoveryReport


class SummaryRequest(BaseModel):
    """Build a summary of a base64 file"""
    data: str  # base64
    k: int = Field(..., gt=0)
    scheme: Scheme = Scheme.DETERMINISTIC
    o: Optional[int] = None
    seed: Optional[str] = None  # hex, expanded with SHAKE-256
    threads: Optional[int] = None


class SummaryResponse(BaseModel):
    summary: str  # base64 DXS1
    scheme: Scheme
    n: int
    k: int
    L: int
    o: int
    summary_bits: int


class InspectRequest(BaseModel):
    summary: str


class InspectResponse(BaseModel):
    scheme: Scheme
    n: int
    k: int
    o: int
    L: int
    w: int
    sections: Dict[str, int]
    payload_bytes: List[int]
    total_bytes: int
    accounted_bytes: int
    constants: Dict[str, int]
    lane_widths: List[int]
    enumeration_cap_bits: Optional[int] = None
    lane_clamped: bool = False


class RecoveryRequest(BaseModel):
    summary: str
    data: str  # base64 F'
    data_bits: Optional[int] = None  # bit length of F' when its last byte is partly fill
    witness_cap: Optional[int] = None
    candidate_cap: Optional[int] = None


class RecoveryResponse(BaseModel):
    data: str
    report: RecoveryReport


class EncodeRequest(BaseModel):
    data: str
    k: int = Field(..., gt=0)
    threads: Optional[int] = None


class CodewordResponse(BaseModel):
    codeword: str  # base64 DXC1
    n: int
    k: int
    redundancy_bits: int


class DecodeRequest(BaseModel):
    codeword: str


class DecodeResponse(BaseModel):
    data: str
    n: int
