"""
Latticeworks v1.0 - Validation Module
======================================
Input validation, parsing and the error hierarchy
"""

from fractions import Fraction
from numbers import Real
from typing import Sequence, Tuple, Union
import config
from logger import get_logger

logger = get_logger(__name__)

Number = Union[int, float, Fraction]


class ValidationError(Exception):
    """Bad input: unknown family, out-of-range parameter, malformed spec"""
    pass


class BudgetExceededError(Exception):
    """Enumeration or size cap exceeded; results would be truncated"""
    pass


class InvariantError(Exception):
    """A deterministic identity failed on a computed configuration"""
    pass


def validate_family(family: str) -> str:
    """
    Resolve a family name or alias

    Returns:
        Canonical family name

    Raises:
        ValidationError: If family is unknown
    """
    if not isinstance(family, str) or not family:
        raise ValidationError(f"Unknown lattice family: {family!r}")

    canonical = config.FAMILY_ALIASES.get(family.strip().lower())
    if canonical is None:
        raise ValidationError(
            f"Unknown lattice family: {family}. "
            f"Supported: {', '.join(config.LATTICE_FAMILIES)}"
        )
    return canonical


def validate_dimensions(width: int, height: int) -> bool:
    """
    Validate patch dimensions in cells

    Raises:
        ValidationError: If dimensions are invalid
    """
    if not isinstance(width, int) or not isinstance(height, int):
        raise ValidationError(f"Dimensions must be integers, got: {width!r}x{height!r}")

    if width < 1 or height < 1:
        raise ValidationError(f"Invalid dimensions: {width}x{height} (min: 1x1)")

    return True


def validate_vertex_count(n_vertices: int) -> bool:
    """
    Validate that a patch stays under the configured vertex cap

    Raises:
        BudgetExceededError: If the patch is too large
    """
    if n_vertices > config.MAX_PATCH_VERTICES:
        raise BudgetExceededError(
            f"Patch too large: {n_vertices} vertices "
            f"(max: {config.MAX_PATCH_VERTICES})"
        )
    return True


def parse_probability(value: Union[str, Number], exact: bool = True) -> Number:
    """
    Parse a probability given as decimal or exact rational string

    Args:
        value: "0.37", "347/1000", a Fraction, int or float
        exact: Return a Fraction for string input (decimal strings are exact too)

    Returns:
        Fraction for exact string input, otherwise the numeric value

    Raises:
        ValidationError: If value is not a probability
    """
    if isinstance(value, str):
        text = value.strip()
        try:
            parsed = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"Invalid probability: {value!r}")
        result: Number = parsed if exact else float(parsed)
    elif isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        result = Fraction(value)
    elif isinstance(value, Real) and not isinstance(value, bool):
        result = float(value)
    else:
        raise ValidationError(f"Invalid probability: {value!r}")

    validate_probability(result)
    return result


def validate_probability(p: Number, open_interval: bool = False) -> bool:
    """
    Validate probability range

    Raises:
        ValidationError: If p is outside [0,1] (or (0,1) when open_interval)
    """
    if not isinstance(p, (int, float, Fraction)) or isinstance(p, bool):
        raise ValidationError(f"Probability must be numeric, got: {type(p)}")

    if open_interval:
        if not 0 < p < 1:
            raise ValidationError(f"Probability out of range: {p} (allowed: 0 < p < 1)")
    elif not 0 <= p <= 1:
        raise ValidationError(f"Probability out of range: {p} (allowed: 0-1)")

    return True


def validate_class_probabilities(probs: Sequence[Number], n_classes: int) -> Tuple[Number, ...]:
    """
    Validate one probability per edge class

    Raises:
        ValidationError: On count mismatch or out-of-range entry
    """
    probs = tuple(probs)
    if len(probs) != n_classes:
        raise ValidationError(
            f"Class count mismatch: got {len(probs)} probabilities for {n_classes} edge classes"
        )
    for p in probs:
        validate_probability(p)
    return probs


def validate_cluster_weight(q: Number) -> bool:
    """
    Validate random-cluster weight q >= 1

    Raises:
        ValidationError: If q < 1
    """
    if not isinstance(q, (int, float, Fraction)) or isinstance(q, bool):
        raise ValidationError(f"Cluster weight must be numeric, got: {type(q)}")

    if q < 1:
        raise ValidationError(f"Cluster weight out of range: {q} (allowed: q >= 1)")

    return True


def validate_rectangle(rect: Sequence[Number], allow_square: bool = False) -> Tuple[Number, Number, Number, Number]:
    """
    Validate a rectangle (x0, y0, x1, y1)

    Raises:
        ValidationError: If rectangle is inverted or degenerate
    """
    if len(rect) != 4:
        raise ValidationError(f"Rectangle needs 4 coordinates, got: {rect!r}")

    x0, y0, x1, y1 = rect
    if x1 <= x0 or y1 <= y0:
        raise ValidationError(f"Inverted rectangle: [{x0},{x1}]x[{y0},{y1}]")

    if not allow_square and (x1 - x0) == (y1 - y0):
        raise ValidationError(f"Square rectangle has no longer direction: [{x0},{x1}]x[{y0},{y1}]")

    return x0, y0, x1, y1


def parse_rectangle(text: str) -> Tuple[int, int, int, int]:
    """
    Parse "WxH" into the rectangle [0,W]x[0,H]

    Raises:
        ValidationError: If format is invalid
    """
    try:
        width, height = (int(part) for part in text.lower().split('x'))
    except ValueError:
        raise ValidationError(f"Invalid rectangle: {text!r} (expected WxH)")
    rect = (0, 0, width, height)
    validate_rectangle(rect)
    return rect


def validate_budget(budget: int) -> bool:
    """
    Validate enumeration budget

    Raises:
        ValidationError: If budget is not a positive integer
    """
    if not isinstance(budget, int) or budget < 1:
        raise ValidationError(f"Budget must be a positive integer, got: {budget!r}")
    return True


def validate_workers(workers: int) -> bool:
    """
    Validate worker count

    Raises:
        ValidationError: If out of range
    """
    if not isinstance(workers, int):
        raise ValidationError(f"Workers must be an integer, got: {type(workers)}")

    if workers < config.MIN_WORKERS or workers > config.MAX_WORKERS:
        raise ValidationError(
            f"Workers out of range: {workers} "
            f"(allowed: {config.MIN_WORKERS}-{config.MAX_WORKERS})"
        )
    return True


def validate_positive(name: str, value: int, minimum: int = 1) -> bool:
    """
    Validate an integer parameter against a lower bound

    Raises:
        ValidationError: If value < minimum
    """
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got: {value!r}")

    if value < minimum:
        raise ValidationError(f"{name} out of range: {value} (min: {minimum})")

    return True


def safe_divide(numerator: float, denominator: float, default: float = 0.0) -> float:
    """
    Safely divide with zero check

    Returns:
        Result or default
    """
    if denominator == 0:
        logger.warning(f"Division by zero prevented: {numerator}/{denominator}")
        return default
    return numerator / denominator
