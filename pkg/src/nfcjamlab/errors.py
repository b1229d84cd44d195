"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all nfcjamlab errors."""


class ParameterError(ToolkitError, ValueError):
    """An argument is outside its documented domain."""


class StructuralError(ToolkitError, ValueError):
    """Inputs are mutually inconsistent (length mismatches, malformed data)."""


class FramingError(StructuralError):
    """Bit stream does not fit any valid frame structure."""


class ParityError(FramingError):
    """Odd-parity check failed for one byte of a standard frame."""

    def __init__(self, byte_index: int):
        self.byte_index = byte_index
        super().__init__(f"parity check failed at byte {byte_index}")


class CrcError(FramingError):
    """Frame checksum does not match its payload."""

    def __init__(self, expected: bytes, actual: bytes):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"checksum mismatch: expected {expected.hex()}, got {actual.hex()}"
        )


class DemodError(ToolkitError):
    """No recognizable modulation pattern in a bit period."""

    def __init__(self, position: int, reason: str = ""):
        self.position = position
        msg = f"demodulation failed at bit period {position}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class FieldNotFound(ToolkitError):
    """No field-activation interval present in the trace."""


class SegmentationEmpty(ToolkitError):
    """Field interval contains no message-like activity."""
