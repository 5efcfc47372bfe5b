"""
Solvers package initialization.

This package contains the LP/MILP kernel, the stage Stackelberg solvers and
the feedback Stackelberg planner.
"""

__version__ = "1.0.0"
__all__ = []
