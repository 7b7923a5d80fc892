"""Exception hierarchy shared across the package."""


class ShaperError(Exception):
    """Base class for all errors raised by ilpshape."""


class MalformedHeader(ShaperError):
    """A recovery header violates the wire layout; framing cannot resync."""


class TruncatedStream(ShaperError):
    """The byte source ended mid-record or before a stream_end marker."""


class MessageTooLarge(ShaperError):
    """A reassembled message exceeded the receiver's cap."""


class InvalidHeader(ShaperError, ValueError):
    """Attempted to encode a header that breaks its invariants."""


class ClosedSender(ShaperError):
    """Data was submitted after close began."""


class QueueFull(ShaperError):
    """Enqueueing would exceed ``max_queue_bytes``."""


class AlreadyStarted(ShaperError):
    """The sending loop was started twice."""


class ConfigError(ShaperError, ValueError):
    """A distribution or shaper configuration is invalid."""


class TraceError(ShaperError, ValueError):
    """A trace file could not be parsed or failed validation."""


class ConsistencyError(ShaperError):
    """Replay oracle mismatch: reassembled output differs from the input."""


class TransportError(ShaperError, OSError):
    """Connection, bind, or write failure in the live transport."""
