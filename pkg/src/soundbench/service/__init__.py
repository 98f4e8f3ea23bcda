from .app import LOG_FILE, SNAPSHOT_FILE, ServiceConfig, create_app
from .schemas import ResponseAck, ResponseIn, SessionCreate, SessionInfo, TrialOut
from .storage import RatingsLog, SessionStore, StorageError

__all__ = [
    "LOG_FILE",
    "SNAPSHOT_FILE",
    "ResponseAck",
    "ResponseIn",
    "RatingsLog",
    "ServiceConfig",
    "SessionCreate",
    "SessionInfo",
    "SessionStore",
    "StorageError",
    "TrialOut",
    "create_app",
]
