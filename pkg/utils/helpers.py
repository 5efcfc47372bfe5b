"""
Utility helper functions for formatting, parsing, validation and hashing.

This module provides reusable functions for common operations including:
- Locale-independent number formatting for CSV/text artifacts
- Parsing of CLI list arguments
- Range validation of configuration values
- Stable content digests
"""

import hashlib
import math
from decimal import Decimal, InvalidOperation
from typing import List, Optional, Union

from exceptions import ValidationError


# ============================================================================
# NUMBER FORMATTING FUNCTIONS
# ============================================================================

def format_real(value: Union[float, int], decimal_places: Optional[int] = None) -> str:
    """
    Format a real number with '.' as decimal separator, independent of locale.

    Args:
        value: The number to format
        decimal_places: Fixed number of decimals, or None for the shortest
            representation that round-trips

    Returns:
        Formatted number string; negative zero is written as zero

    Example:
        >>> format_real(3.5)
        '3.5'
        >>> format_real(1 / 3, 6)
        '0.333333'
        >>> format_real(-0.0)
        '0.0'
    """
    number = float(value)
    if not math.isfinite(number):
        raise ValueError(f"Cannot format non-finite value: {value}")
    if number == 0.0:
        number = 0.0
    if decimal_places is None:
        return repr(number)
    try:
        text = f"{Decimal(repr(number)):.{decimal_places}f}"
    except InvalidOperation:
        raise ValueError(f"Invalid number: {value}")
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


# ============================================================================
# PARSING FUNCTIONS
# ============================================================================

def parse_index_list(text: str, minimum: int = 1) -> List[int]:
    """
    Parse a comma-separated list of integer indices.

    Args:
        text: String such as '2,5'
        minimum: Smallest allowed index

    Returns:
        Sorted list of distinct indices

    Example:
        >>> parse_index_list('5, 2,2')
        [2, 5]
    """
    indices = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            index = int(token)
        except ValueError:
            raise ValidationError(f"Not an integer index: {token!r}")
        if index < minimum:
            raise ValidationError(f"Index {index} is below the minimum {minimum}")
        indices.add(index)
    return sorted(indices)


# ============================================================================
# VALIDATION FUNCTIONS
# ============================================================================

def require_probability(value: Union[float, int], name: str) -> float:
    """
    Validate that a value is a probability.

    Raises:
        ValidationError: Naming the field when the value is outside [0, 1]
    """
    number = float(value)
    if not (0.0 <= number <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return number


# ============================================================================
# HASHING FUNCTIONS
# ============================================================================

def stable_digest(payload: Union[str, bytes], length: int = 12) -> str:
    """
    Short SHA-1 hex digest of a payload, stable across runs and platforms.

    Example:
        >>> len(stable_digest('abc'))
        12
    """
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    return hashlib.sha1(payload).hexdigest()[:length]
