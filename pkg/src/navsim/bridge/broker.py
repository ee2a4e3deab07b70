"""Topic table and dispatch: the transport-independent half of the bus.

The broker is synchronous and single-threaded; servers call it from one
task and drain per-client outbound queues. Fan-out order follows
subscription order, and frames from one publisher on one topic are queued
in publish order, so per-(publisher, topic) delivery order is preserved.
Queues drop oldest past 1024 frames and owe the client one status notice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .protocol import BusMessage, payload_error, valid_topic

QUEUE_LIMIT = 1024


@dataclass
class TopicInfo:
    type: str = ""
    publishers: set[str] = field(default_factory=set)
    subscribers: dict[str, None] = field(default_factory=dict)  # ordered set
    last: BusMessage | None = None

    @property
    def empty(self) -> bool:
        return not self.publishers and not self.subscribers and self.last is None


class ClientQueue:
    def __init__(self, limit: int = QUEUE_LIMIT):
        self.frames: deque[BusMessage] = deque()
        self.limit = limit
        self.dropped = 0

    def push(self, frame: BusMessage) -> None:
        if len(self.frames) >= self.limit:
            self.frames.popleft()
            self.dropped += 1
        self.frames.append(frame)

    def drain(self) -> list[BusMessage]:
        out: list[BusMessage] = []
        if self.dropped:
            out.append(BusMessage(op="status", msg={
                "level": "warning", "code": "queue_overflow",
                "detail": f"dropped {self.dropped} oldest frame(s) past "
                          f"{self.limit} queued"}))
            self.dropped = 0
        while self.frames:
            out.append(self.frames.popleft())
        return out


class Broker:
    def __init__(self):
        self.topics: dict[str, TopicInfo] = {}
        self.clients: dict[str, ClientQueue] = {}
        self.latched_topics: set[str] = set()
        self.notify = lambda client_id: None  # server hook: queue has frames
        self.taps: dict[str, object] = {}  # in-process sinks that see the sender

    # -- client lifecycle ----------------------------------------------------

    def connect(self, client_id: str) -> None:
        if client_id in self.clients:
            raise ValueError(f"client id {client_id!r} already connected")
        self.clients[client_id] = ClientQueue()

    def disconnect(self, client_id: str) -> None:
        self.clients.pop(client_id, None)
        for topic in list(self.topics):
            info = self.topics[topic]
            info.publishers.discard(client_id)
            info.subscribers.pop(client_id, None)
            if info.empty:
                del self.topics[topic]

    def set_latched(self, topic: str) -> None:
        self.latched_topics.add(topic)

    def add_tap(self, topic: str, handler) -> None:
        """Register an in-process handler(sender_id, frame) for a topic.
        Taps receive valid publishes regardless of subscriptions."""
        self.taps[topic] = handler

    # -- dispatch -------------------------------------------------------------

    def _enqueue(self, client_id: str, frame: BusMessage) -> None:
        queue = self.clients.get(client_id)
        if queue is None:
            return
        queue.push(frame)
        self.notify(client_id)

    def send_status(self, client_id: str, level: str, code: str, detail: str,
                    topic: str = "", id: str | None = None) -> None:
        self._enqueue(client_id, BusMessage(
            op="status", topic=topic, id=id,
            msg={"level": level, "code": code, "detail": detail}))

    def _reject(self, client_id: str, msg: BusMessage, code: str, detail: str) -> None:
        self.send_status(client_id, "error", code, detail, msg.topic, msg.id)

    def dispatch(self, client_id: str, msg: BusMessage) -> None:
        """Apply one inbound frame from a connected client."""
        if client_id not in self.clients:
            raise KeyError(f"client {client_id!r} is not connected")
        if msg.op == "status":
            self._reject(client_id, msg, "bad_op", "status frames are server-originated")
            return
        if not valid_topic(msg.topic):
            self._reject(client_id, msg, "bad_topic",
                         f"topic {msg.topic!r} does not match (/[a-z0-9_]+)+")
            return
        info = self.topics.setdefault(msg.topic, TopicInfo())
        handler = getattr(self, f"_op_{msg.op}")
        handler(client_id, msg, info)
        if info.empty:
            self.topics.pop(msg.topic, None)

    def _op_advertise(self, client_id: str, msg: BusMessage, info: TopicInfo) -> None:
        if info.type and msg.type and msg.type != info.type:
            self._reject(client_id, msg, "type_conflict",
                         f"topic {msg.topic} already advertised as {info.type!r}")
            return
        if msg.type and not info.type:
            info.type = msg.type
        info.publishers.add(client_id)

    def _op_unadvertise(self, client_id: str, msg: BusMessage, info: TopicInfo) -> None:
        info.publishers.discard(client_id)

    def _op_subscribe(self, client_id: str, msg: BusMessage, info: TopicInfo) -> None:
        info.subscribers[client_id] = None
        if msg.topic in self.latched_topics and info.last is not None:
            self._enqueue(client_id, info.last)

    def _op_unsubscribe(self, client_id: str, msg: BusMessage, info: TopicInfo) -> None:
        info.subscribers.pop(client_id, None)

    def _op_publish(self, client_id: str, msg: BusMessage, info: TopicInfo) -> None:
        if client_id not in info.publishers:
            self._reject(client_id, msg, "not_advertised",
                         f"publish on {msg.topic} before advertise")
            return
        error = payload_error(info.type, msg.msg)
        if error is not None:
            self._reject(client_id, msg, "schema_violation",
                         f"payload does not match {info.type!r}: {error}")
            return
        frame = BusMessage(op="publish", topic=msg.topic, type=info.type,
                           msg=msg.msg, id=msg.id)
        if msg.topic in self.latched_topics:
            info.last = frame
        for subscriber in info.subscribers:
            self._enqueue(subscriber, frame)
        tap = self.taps.get(msg.topic)
        if tap is not None:
            tap(client_id, frame)

    # -- test/introspection helpers -------------------------------------------

    def drain(self, client_id: str) -> list[BusMessage]:
        queue = self.clients.get(client_id)
        return queue.drain() if queue else []
