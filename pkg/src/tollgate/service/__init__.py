"""Central service: journaled state, HTTP API, notification outbox, plaza ingestion."""

from tollgate.service.config import ServiceConfig
from tollgate.service.core import ServiceCore, ApiError
from tollgate.service.journal import CorruptJournalError

__all__ = ["ServiceConfig", "ServiceCore", "ApiError", "CorruptJournalError"]
