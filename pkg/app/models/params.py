import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict

from app.core.config import settings
from app.core.errors import ParameterError

MAX_DIGEST_BITS = 62
MAX_CONSTANT = 255  # one header byte each


class Scheme(str, Enum):
    """Summary flavor; the value doubles as the DXS1 scheme byte and CLI name"""
    ALG1_RANDOM = "alg1"
    DETERMINISTIC = "det"
    ALG2_OPTIMAL = "alg2"

    @property
    def code(self) -> int:
        return {"alg1": 1, "det": 2, "alg2": 3}[self.value]

    @classmethod
    def from_code(cls, code: int) -> "Scheme":
        for scheme in cls:
            if scheme.code == code:
                return scheme
        raise ParameterError(f"unknown scheme code {code}")


class Params(BaseModel):
    """All scheme parameters with derived quantities"""
    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    L: int
    o: int
    verify_multiplier: int
    c: int
    bias_exponent: int
    scheme: Scheme
    color_hash_bits: int
    final_check_bits: int

    @property
    def n_pad(self) -> int:
        return 4 * self.k * (1 << self.L)

    def block_len(self, level: int) -> int:
        return 1 << (self.L - level)

    def block_count(self, level: int) -> int:
        return 4 * self.k * (1 << level)

    @property
    def verify_width(self) -> int:
        """Alg2 per-level verification hash width, o' k bits with o' = multiplier * o"""
        return self.verify_multiplier * self.o * self.k

    @property
    def color_count(self) -> int:
        """Color classes used once k exceeds log2 n (1 means uncolored)"""
        log_n = max(1.0, math.log2(self.n))
        if self.scheme != Scheme.ALG2_OPTIMAL or self.k <= log_n:
            return 1
        return math.ceil(self.k / log_n)

    @property
    def color_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.color_count))) if self.color_count > 1 else 0

    def identity_level(self) -> int:
        """First level whose blocks fit inside a digest"""
        for level in range(self.L + 1):
            if self.block_len(level) <= self.o:
                return level
        return self.L

    def payload_levels(self) -> range:
        """Levels 1 .. identity level; deeper levels carry empty payloads"""
        return range(1, self.identity_level() + 1)


def derive_params(
    n: int,
    k: int,
    scheme: Scheme,
    o: Optional[int] = None,
    c: Optional[int] = None,
    verify_multiplier: Optional[int] = None,
    color_hash_bits: Optional[int] = None,
    final_check_bits: Optional[int] = None,
) -> Params:
    """
    Derive every scheme parameter from the file length and edit budget.

    Overrides left as None fall back to the configured constants. Summaries record the
    values they were built with, so recovery passes them back in explicitly.

    Args:
        n: Original length in bits
        k: Edit budget
        scheme: Summary flavor
        o: Hash width override
        c: Bias constant override
        verify_multiplier: Alg2 verification width multiplier override
        color_hash_bits: Per-color-class verification width override
        final_check_bits: Whole-file hash width override

    Returns:
        Params with n_pad = 4k * 2^L >= n
    """
    if n < 1:
        raise ParameterError("file must contain at least one bit")
    if not 0 < k < n:
        raise ParameterError(f"edit budget k={k} must satisfy 0 < k < n={n}")
    c = settings.BIAS_CONSTANT if c is None else c
    verify_multiplier = settings.VERIFY_MULTIPLIER if verify_multiplier is None else verify_multiplier
    color_hash_bits = settings.COLOR_HASH_BITS if color_hash_bits is None else color_hash_bits
    final_check_bits = settings.FINAL_CHECK_BITS if final_check_bits is None else final_check_bits
    for name, value in (
        ("bias constant", c),
        ("verify multiplier", verify_multiplier),
        ("color hash width", color_hash_bits),
        ("final check width", final_check_bits),
    ):
        if not 1 <= value <= MAX_CONSTANT:
            raise ParameterError(f"{name} {value} outside [1, {MAX_CONSTANT}]")

    levels = 0
    while 4 * k * (1 << levels) < n:
        levels += 1

    if o is None:
        if scheme == Scheme.ALG2_OPTIMAL:
            o = settings.ALG2_HASH_WIDTH
        else:
            o = max(1, math.ceil(c * math.log2(max(2.0, n / k))))
    if not 1 <= o <= MAX_DIGEST_BITS:
        raise ParameterError(f"hash width o={o} outside [1, {MAX_DIGEST_BITS}]")

    if scheme == Scheme.ALG2_OPTIMAL:
        bias_exponent = min(64, max(32, 2 * o * k))
    else:
        bias_exponent = min(64, math.ceil(2 * c * math.log2(max(2, n))))

    return Params(
        n=n,
        k=k,
        L=levels,
        o=o,
        verify_multiplier=verify_multiplier,
        c=c,
        bias_exponent=bias_exponent,
        scheme=scheme,
        color_hash_bits=color_hash_bits,
        final_check_bits=final_check_bits,
    )
