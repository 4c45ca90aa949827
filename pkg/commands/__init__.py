"""
Command groups for the sparsification harness
"""

from .construct_commands import ConstructCommands
from .sample_commands import SampleCommands
from .verify_commands import VerifyCommands
from .sweep_commands import SweepCommands

__all__ = [
    'ConstructCommands',
    'SampleCommands',
    'VerifyCommands',
    'SweepCommands'
]
