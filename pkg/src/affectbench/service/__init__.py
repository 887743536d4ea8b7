from .app import create_app
from .sessions import SessionStore, Stimulus

__all__ = ["create_app", "SessionStore", "Stimulus"]
