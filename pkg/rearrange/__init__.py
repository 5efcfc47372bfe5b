"""
Rearrange package initialization.

This package contains the grid rearrangement game and its greedy baseline.
"""

__version__ = "1.0.0"
__all__ = []
