from typing import Dict, Any

from fastapi import APIRouter

from app.core.config import settings

router = APIRouter()


@router.get("")
async def get_status() -> Dict[str, Any]:
    """Echo the active search limits and scheme constants"""
    return {
        "environment": settings.ENVIRONMENT,
        "schemes": ["alg1", "det", "alg2"],
        "limits": {
            "enumeration_cap_bits": settings.ENUMERATION_CAP_BITS,
            "witness_cap": settings.WITNESS_CAP,
            "candidate_cap": settings.CANDIDATE_CAP,
            "full_scan_max_bits": settings.FULL_SCAN_MAX_BITS,
            "exact_detect_max_bits": settings.EXACT_DETECT_MAX_BITS,
            "enumerate_value_bits": settings.ENUMERATE_VALUE_BITS,
        },
        "constants": {
            "alg2_hash_width": settings.ALG2_HASH_WIDTH,
            "verify_multiplier": settings.VERIFY_MULTIPLIER,
            "bias_constant": settings.BIAS_CONSTANT,
            "final_check_bits": settings.FINAL_CHECK_BITS,
            "color_hash_bits": settings.COLOR_HASH_BITS,
        },
        "threads": settings.THREADS,
    }
