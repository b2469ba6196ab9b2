import base64

from fastapi import APIRouter, status

from app.api.errors import decode_base64, http_error
from app.models.api import CodewordResponse, DecodeRequest, DecodeResponse, EncodeRequest
from app.services.coding.insdelcode import codeword_bits, decode, encode, parse_codeword, serialize_codeword


router = APIRouter()


@router.post("/encode", response_model=CodewordResponse, status_code=status.HTTP_201_CREATED)
def encode_message(request: EncodeRequest):
    """
    Encode a message into a systematic DXC1 codeword.
    """
    try:
        message = decode_base64(request.data, "data")
        codeword = encode(message, request.k, threads=request.threads or 1)
        encoded = serialize_codeword(codeword.n, codeword.k, codeword.inner_code, codeword_bits(codeword))
    except Exception as e:
        raise http_error(e, "encode message")

    return CodewordResponse(
        codeword=base64.b64encode(encoded).decode(),
        n=codeword.n,
        k=codeword.k,
        redundancy_bits=codeword.redundancy_bits,
    )


@router.post("/decode", response_model=DecodeResponse)
def decode_codeword(request: DecodeRequest):
    """
    Decode a possibly corrupted DXC1 codeword.
    """
    try:
        n, k, inner_code, bits = parse_codeword(decode_base64(request.codeword, "codeword"))
        message = decode(bits, n, k, inner_code)
    except Exception as e:
        raise http_error(e, "decode codeword")

    return DecodeResponse(data=base64.b64encode(message).decode(), n=n)
