class TanglegramError(ValueError):
    """Base class for every error raised by the tanglegram package."""


class FormatError(TanglegramError):
    """Malformed tree expression, .tgl file or sign matrix text."""


class SizeLimitError(TanglegramError):
    """Instance is larger than the operation is meant to handle."""

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what}: size {size} exceeds limit {limit}")
        self.size = size
        self.limit = limit


class UnknownVertexError(TanglegramError):
    pass


class UnknownLeafError(TanglegramError):
    pass
