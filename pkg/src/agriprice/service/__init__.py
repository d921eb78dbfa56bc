from .app import ServiceConfig, create_app  # noqa: F401
from .store import Store, seed_demo_data  # noqa: F401
