import base64
import binascii

from fastapi import HTTPException, status

from app.core.errors import (
    DecodeFailure,
    FinalCheckMismatch,
    FormatError,
    InnerDecodeFailure,
    ParameterError,
    RecoveryFailure,
    SeedSearchExhausted,
    WitnessSearchExhausted,
)

_UNPROCESSABLE = (ParameterError, FormatError)
_CONFLICT = (
    DecodeFailure,
    FinalCheckMismatch,
    InnerDecodeFailure,
    RecoveryFailure,
    SeedSearchExhausted,
    WitnessSearchExhausted,
)


def http_error(e: Exception, what: str) -> HTTPException:
    """Map a failure onto the status code clients see."""
    if isinstance(e, _UNPROCESSABLE):
        code = status.HTTP_422_UNPROCESSABLE_ENTITY
    elif isinstance(e, _CONFLICT):
        code = status.HTTP_409_CONFLICT
    else:
        code = status.HTTP_500_INTERNAL_SERVER_ERROR
    return HTTPException(status_code=code, detail=f"Failed to {what}: {e}")


def decode_base64(value: str, field: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as e:
        raise ParameterError(f"{field} is not valid base64: {e}") from e
