from .config import ServerConfig, load_config
from .service import RingVaultService, ServiceError
from .app import create_app

__all__ = ["ServerConfig", "load_config", "RingVaultService", "ServiceError", "create_app"]
