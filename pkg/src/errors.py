"""
Exception hierarchy and error records shared by the library and the batch commands.
"""

from typing import Any, Dict, Optional


class FaceRespError(Exception):
    """Base class for every domain error raised by faceresp."""


class ParseError(FaceRespError):
    """Malformed row, field or document in an input file."""


class ShapeError(FaceRespError):
    """Inconsistent number of points, dimensions or frames."""


class NonFiniteCoordinate(FaceRespError, ValueError):
    """A coordinate is NaN or infinite."""


class MissingReference(FaceRespError):
    """No reference (nose) landmark is known for centering."""


class NoTransition(FaceRespError):
    """The derivative response has no usable maximum."""


class BadBounds(FaceRespError, ValueError):
    pass


class BadShapeParams(FaceRespError, ValueError):
    pass


class BadPath(FaceRespError):
    pass


class EmptySet(FaceRespError):
    pass


class LengthMismatch(FaceRespError, ValueError):
    pass


class BadApex(FaceRespError, ValueError):
    pass


class OneSided(FaceRespError):
    """Apex is undefined for sequences with a single transition."""


class DegenerateAnova(FaceRespError):
    pass


class ZeroVariance(FaceRespError):
    pass


class BadEvent(FaceRespError, ValueError):
    pass


class BadK(FaceRespError, ValueError):
    pass


class BadSpec(FaceRespError, ValueError):
    pass


class BadIndex(FaceRespError, IndexError):
    pass


class MissingTruth(FaceRespError):
    """No ground-truth row for a sequence being evaluated."""


class ConfigError(FaceRespError):
    pass


class SchemaError(FaceRespError):
    """A CSV does not match any known output schema."""


def create_error_info(error: BaseException, processor_name: Optional[str],
                      sequence_id: str) -> Dict[str, Any]:
    """Create the errors.csv record for one failed sequence.

    Args:
        error: The exception that was raised
        processor_name: Name of the chain step where the error occurred
        sequence_id: Id of the sequence being processed

    Returns:
        Dict with sequence_id, processor, error_type and error fields
    """
    return {
        "sequence_id": sequence_id,
        "processor": processor_name or "",
        "error_type": type(error).__name__,
        "error": str(error).replace("\n", " "),
    }
