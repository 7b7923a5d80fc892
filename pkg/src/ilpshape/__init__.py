"""Independent link padding for IoT device traffic.

Messages are padded, fragmented and interleaved with cover traffic on a
schedule drawn from fixed distributions, so record sizes and send times carry
no information about device activity.
"""

from ._backend import BACKEND
from .distributions import DistributionSpec, Kind, ShaperConfig, high_latency, low_latency
from .errors import (
    AlreadyStarted,
    ClosedSender,
    ConfigError,
    MalformedHeader,
    MessageTooLarge,
    QueueFull,
    ShaperError,
    TraceError,
    TransportError,
    TruncatedStream,
)
from .shaper import Reassembler, Shaper, TickOutput, reassemble
from .wire import RecordType, RecoveryHeader, ShapedRecord, decode_header, encode_header, read_record

__version__ = "0.1.0"
