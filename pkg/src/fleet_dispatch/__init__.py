"""Scheduling and admission control for a shared autonomous-vehicle fleet."""
from .kernel import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
