"""
Utils package initialization.

This package contains number formatting, validation helpers and the utility plots.
"""

__version__ = "1.0.0"
__all__ = []
