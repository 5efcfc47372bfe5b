"""
Harness package initialization.

This package contains scenario loading, experiment orchestration and report output.
"""

__version__ = "1.0.0"
__all__ = []
