import base64

from fastapi import APIRouter

from app.api.errors import decode_base64, http_error
from app.models.api import RecoveryRequest, RecoveryResponse
from app.services.recovery.recovery import RepairBudget, reconstruct
from app.services.sketch.codec import deserialize


router = APIRouter()


@router.post("/reconstruct", response_model=RecoveryResponse)
def reconstruct_file(request: RecoveryRequest):
    """
    Reconstruct the summarized file from a nearby copy.
    """
    try:
        summary = deserialize(decode_base64(request.summary, "summary"))
        nearby = decode_base64(request.data, "data")
        budget = RepairBudget(request.witness_cap, request.candidate_cap)
        data, report = reconstruct(summary, nearby, budget=budget, fp_bits=request.data_bits)
    except Exception as e:
        raise http_error(e, "reconstruct file")

    return RecoveryResponse(data=base64.b64encode(data).decode(), report=report)
