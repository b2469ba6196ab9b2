import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from loguru import logger
from pydantic import BaseModel

from app.core.config import settings
from app.models.params import Params
from app.models.report import RecoveryReport


class AuditEntry(BaseModel):
    """Model for structured audit log entries"""
    timestamp: str
    action: str
    resource_type: str
    resource_id: Optional[str] = None
    # Exchange context: which scheme and file size the event belongs to
    scheme: Optional[str] = None
    n: Optional[int] = None
    k: Optional[int] = None
    details: Dict[str, Any] = {}
    status: str


class AuditLogger:
    def __init__(self):
        """Initialize the audit logger with rotation and retention policies"""
        # Remove default logger
        logger.remove()

        # Configure console logging for development
        if settings.ENVIRONMENT.lower() != "production":
            logger.add(
                sys.stderr,
                format="{time} | {level} | {message}",
                level="INFO"
            )

        # Configure file logging with rotation and retention
        logger.add(
            settings.AUDIT_LOG_PATH,
            rotation="100 MB",
            retention="90 days",
            compression="zip",
            serialize=True,
            backtrace=True,
            diagnose=True,
            enqueue=True,
            level="INFO"
        )

    def log(
        self,
        action: str,
        resource_type: str,
        status: str,
        resource_id: Optional[str] = None,
        details: Dict[str, Any] = None,
        params: Optional[Params] = None,
    ) -> AuditEntry:
        """
        Create an immutable audit log entry

        Args:
            action: The operation performed (e.g., "summary_built", "level_repaired")
            resource_type: Kind of artifact involved (e.g., "summary", "codeword")
            status: Outcome of the action ("success" or "failure")
            resource_id: Short identifier of the artifact, usually a scheme or level
            details: Additional context about the action
            params: Scheme parameters filling the exchange context fields
        """
        context = {}
        if params is not None:
            context = {"scheme": params.scheme.value, "n": params.n, "k": params.k}
        return self._emit(AuditEntry(
            timestamp=datetime.now(timezone.utc).isoformat(),
            action=action,
            resource_type=resource_type,
            resource_id=resource_id,
            details=details or {},
            status=status,
            **context
        ))

    def _emit(self, entry: AuditEntry) -> AuditEntry:
        logger.info(entry.model_dump_json())

        if entry.status == "failure" and settings.ENVIRONMENT.lower() != "production":
            logger.error(f"AUDIT: {entry.model_dump_json()}")
        return entry

    def summary_built(self, params: Params, w: int, seed_bits: int) -> AuditEntry:
        return self.log(
            action="summary_built",
            resource_type="summary",
            resource_id=params.scheme.value,
            status="success",
            params=params,
            details={"L": params.L, "o": params.o, "w": w, "seed_bits": seed_bits},
        )

    def seed_search(self, params: Params, index: Optional[int], lane_width: int, error: Optional[str] = None) -> AuditEntry:
        """Outcome of the deterministic seed search; index is None when it ran dry."""
        details: Dict[str, Any] = {"lane_width": lane_width}
        if index is not None:
            details["seed_index"] = index
        if error is not None:
            details["error"] = error
        return self.log(
            action="seed_search",
            resource_type="summary",
            resource_id=params.scheme.value,
            status="failure" if error else "success",
            params=params,
            details=details,
        )

    def recovery_finished(self, report: RecoveryReport, error: Optional[str] = None) -> AuditEntry:
        details: Dict[str, Any] = {
            "identity_level": report.identity_level,
            "levels": len(report.levels),
            "corrections": report.total_corrections,
            "final_check_ok": report.final_check_ok,
        }
        if error is not None:
            details["error"] = error
        return self._emit(AuditEntry(
            timestamp=datetime.now(timezone.utc).isoformat(),
            action="recovery_finished",
            resource_type="file",
            resource_id=report.scheme.value,
            scheme=report.scheme.value,
            n=report.n,
            k=report.k,
            details=details,
            status="failure" if error else "success",
        ))

# Create a singleton instance
audit_logger = AuditLogger()
