from .broker import Broker, ClientQueue, TopicInfo
from .protocol import (
    DEFAULT_PORT, OPS, SCHEMAS, BusMessage, MalformedFrame, ProtocolError,
    SchemaViolation, UnknownOp, decode_frame, encode_frame, payload_error,
    valid_topic,
)
from .server import BridgeServer
from .session import SimSession

__all__ = [
    "Broker", "BridgeServer", "BusMessage", "ClientQueue", "DEFAULT_PORT",
    "MalformedFrame", "OPS", "ProtocolError", "SCHEMAS", "SchemaViolation",
    "SimSession", "TopicInfo", "UnknownOp", "decode_frame", "encode_frame",
    "payload_error", "valid_topic",
]
