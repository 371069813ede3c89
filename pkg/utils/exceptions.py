class CodecError(Exception):
    """Base class for every error raised by the codec services"""


class FormatError(CodecError):
    """Malformed container or stream; offset is the byte position when known"""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset

    def __str__(self):
        message = super().__str__()
        if self.offset is None:
            return message
        return f"{message} (at byte offset {self.offset})"


class TruncationError(FormatError):
    pass


class UnsupportedError(CodecError):
    pass


class DomainError(CodecError):
    pass


class ShapeError(CodecError):
    pass


class StateError(CodecError):
    pass


class ConfigError(CodecError):
    pass


class UsageError(CodecError):
    pass
