"""
Utilities package for the sparsification harness

``utils.validation`` depends on ``core`` and is imported directly by its
callers rather than re-exported here.
"""

from .logger import get_logger, setup_logger
from .metrics import MetricsCollector

__all__ = [
    'setup_logger',
    'get_logger',
    'MetricsCollector'
]
