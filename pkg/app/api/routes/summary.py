import base64

from fastapi import APIRouter, status

from app.api.errors import decode_base64, http_error
from app.models.api import InspectRequest, InspectResponse, SummaryRequest, SummaryResponse
from app.models.params import Scheme, derive_params
from app.services.sketch.codec import inspect_summary, serialize
from app.services.sketch.smallbias import entropy_size
from app.services.sketch.summary import build_summary, expand_entropy
from app.utils.audit_logger import audit_logger


router = APIRouter()


@router.post("/build", response_model=SummaryResponse, status_code=status.HTTP_201_CREATED)
def build(request: SummaryRequest):
    """
    Build a DXS1 summary of the uploaded file.
    """
    try:
        data = decode_base64(request.data, "data")
        params = derive_params(8 * len(data), request.k, request.scheme, o=request.o)
        entropy = None
        if request.scheme != Scheme.DETERMINISTIC:
            entropy = expand_entropy(request.seed, entropy_size(params))
        encoded = serialize(build_summary(data, params, entropy=entropy, threads=request.threads))
    except Exception as e:
        audit_logger.log(
            action="summary_requested",
            resource_type="summary",
            resource_id=request.scheme.value,
            status="failure",
            details={"error": str(e)}
        )
        raise http_error(e, "build summary")

    return SummaryResponse(
        summary=base64.b64encode(encoded).decode(),
        scheme=params.scheme,
        n=params.n,
        k=params.k,
        L=params.L,
        o=params.o,
        summary_bits=8 * len(encoded),
    )


@router.post("/inspect", response_model=InspectResponse)
def inspect(request: InspectRequest):
    """
    Decode a summary and account for every section of it.
    """
    try:
        _, report = inspect_summary(decode_base64(request.summary, "summary"))
    except Exception as e:
        raise http_error(e, "inspect summary")

    sections = {
        "header": report.header_bytes,
        "seed": report.seed_bytes,
        "level0": report.level0_bytes,
        "final_check": report.final_check_bytes,
        "crc": report.crc_bytes,
    }
    return InspectResponse(
        scheme=report.scheme,
        n=report.n,
        k=report.k,
        o=report.o,
        L=report.L,
        w=report.w,
        sections=sections,
        payload_bytes=report.payload_bytes,
        total_bytes=report.total_bytes,
        accounted_bytes=sum(sections.values()) + sum(report.payload_bytes),
        constants={
            "c": report.c,
            "verify_multiplier": report.verify_multiplier,
            "color_hash_bits": report.color_hash_bits,
            "final_check_bits": report.final_check_bits,
        },
        lane_widths=report.lane_widths,
        enumeration_cap_bits=report.enumeration_cap_bits,
        lane_clamped=report.lane_clamped,
    )
