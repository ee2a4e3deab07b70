"""Asyncio server speaking the bus protocol on one port.

The first bytes of a connection pick the transport: a '{' means
newline-delimited JSON frames over the raw stream; an HTTP request line
means either a WebSocket upgrade (one frame per message) or a static-file
GET for the operator console. Any malformed input becomes a status frame;
nothing a client sends can take the server down.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import mimetypes
import struct
from pathlib import Path

from .broker import Broker
from .protocol import BusMessage, ProtocolError, decode_frame, encode_frame

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_READ_LIMIT = 1 << 20

# WebSocket opcodes
_OP_CONT, _OP_TEXT, _OP_BIN, _OP_CLOSE, _OP_PING, _OP_PONG = 0, 1, 2, 8, 9, 10


def ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_ws_frame(opcode: int, payload: bytes) -> bytes:
    """Server-to-client frame: FIN set, never masked."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


async def read_ws_message(reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> tuple[int, bytes]:
    """One complete data or close message, fragments reassembled. Client
    frames must be masked per RFC 6455. Pings are answered inline so an
    interleaved control frame never discards a partial message."""
    opcode = None
    buffer = b""
    while True:
        header = await reader.readexactly(2)
        fin = header[0] & 0x80
        frame_op = header[0] & 0x0F
        masked = header[1] & 0x80
        length = header[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", await reader.readexactly(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", await reader.readexactly(8))[0]
        if length > _READ_LIMIT:
            raise ValueError("websocket frame too large")
        if not masked:
            raise ValueError("client frames must be masked")
        mask = await reader.readexactly(4)
        data = await reader.readexactly(length)
        data = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        if frame_op == _OP_CLOSE:
            return frame_op, data
        if frame_op == _OP_PING:
            writer.write(encode_ws_frame(_OP_PONG, data))
            await writer.drain()
            continue
        if frame_op == _OP_PONG:
            continue
        if opcode is None:
            opcode = frame_op
        buffer += data
        if fin:
            return opcode, buffer


class BridgeServer:
    """Owns the listening socket and per-client writer pumps."""

    def __init__(self, broker: Broker, host: str = "127.0.0.1", port: int = 9090,
                 static_dir: str | Path | None = None):
        self.broker = broker
        self.host = host
        self.port = port
        self.static_dir = Path(static_dir) if static_dir else None
        self._server: asyncio.AbstractServer | None = None
        self._wakeups: dict[str, asyncio.Event] = {}
        self._next_id = 0
        broker.notify = self._notify

    def _notify(self, client_id: str) -> None:
        event = self._wakeups.get(client_id)
        if event is not None:
            event.set()

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle_connection, self.host, self.port, limit=_READ_LIMIT)

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    @property
    def bound_port(self) -> int:
        assert self._server is not None and self._server.sockets
        return self._server.sockets[0].getsockname()[1]

    # -- connection handling ---------------------------------------------------

    async def _handle_connection(self, reader: asyncio.StreamReader,
                                 writer: asyncio.StreamWriter) -> None:
        try:
            first = await reader.readline()
        except (asyncio.IncompleteReadError, ValueError, ConnectionError):
            writer.close()
            return
        if not first:
            writer.close()
            return
        try:
            if first.lstrip().startswith(b"{"):
                await self._serve_ndjson(first, reader, writer)
            else:
                await self._serve_http(first, reader, writer)
        except (ConnectionError, asyncio.IncompleteReadError, ValueError):
            pass  # ValueError: oversized line / malformed framing
        finally:
            writer.close()

    def _new_client(self, kind: str) -> str:
        self._next_id += 1
        return f"{kind}:{self._next_id}"

    async def _pump(self, client_id: str, send) -> None:
        event = self._wakeups[client_id]
        while True:
            await event.wait()
            event.clear()
            for frame in self.broker.drain(client_id):
                await send(encode_frame(frame))

    async def _run_client(self, client_id: str, recv, send) -> None:
        """Shared read loop: bytes in, dispatch or status-out on bad frames.
        Nothing a client sends may escape as an exception."""
        self.broker.connect(client_id)
        self._wakeups[client_id] = asyncio.Event()
        pump = asyncio.ensure_future(self._pump(client_id, send))
        try:
            while True:
                raw = await recv()
                if raw is None:
                    break
                if not raw.strip():
                    continue
                try:
                    msg = decode_frame(raw)
                except ProtocolError as exc:
                    await send(encode_frame(BusMessage(op="status", msg={
                        "level": "error", "code": exc.code, "detail": str(exc)})))
                    continue
                try:
                    self.broker.dispatch(client_id, msg)
                except Exception as exc:  # tap or handler bug: report, keep going
                    await send(encode_frame(BusMessage(op="status", msg={
                        "level": "error", "code": "internal_error",
                        "detail": f"{type(exc).__name__}: {exc}"})))
        finally:
            pump.cancel()
            self.broker.disconnect(client_id)
            self._wakeups.pop(client_id, None)

    # -- NDJSON over the raw stream ---------------------------------------------

    async def _serve_ndjson(self, first_line: bytes, reader: asyncio.StreamReader,
                            writer: asyncio.StreamWriter) -> None:
        client_id = self._new_client("tcp")
        pending = [first_line]

        async def recv():
            if pending:
                return pending.pop()
            line = await reader.readline()
            return line if line else None

        async def send(payload: bytes):
            writer.write(payload + b"\n")
            await writer.drain()

        await self._run_client(client_id, recv, send)

    # -- HTTP: websocket upgrade or static files ---------------------------------

    async def _serve_http(self, request_line: bytes, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        try:
            method, target, _ = request_line.decode("latin-1").split(" ", 2)
        except ValueError:
            writer.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
            await writer.drain()
            return
        headers: dict[str, str] = {}
        for _ in range(128):  # header count cap
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()

        if headers.get("upgrade", "").lower() == "websocket":
            await self._serve_websocket(headers, reader, writer)
        elif method == "GET":
            await self._serve_static(target, writer)
        else:
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\nConnection: close\r\n\r\n")
            await writer.drain()

    async def _serve_websocket(self, headers: dict[str, str],
                               reader: asyncio.StreamReader,
                               writer: asyncio.StreamWriter) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            writer.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
            await writer.drain()
            return
        writer.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + ws_accept_key(key).encode("ascii") + b"\r\n\r\n")
        await writer.drain()

        client_id = self._new_client("ws")

        async def recv():
            while True:
                try:
                    opcode, data = await read_ws_message(reader, writer)
                except (ValueError, asyncio.IncompleteReadError):
                    return None
                if opcode == _OP_CLOSE:
                    writer.write(encode_ws_frame(_OP_CLOSE, data[:2]))
                    await writer.drain()
                    return None
                if opcode in (_OP_TEXT, _OP_BIN):
                    return data

        async def send(payload: bytes):
            writer.write(encode_ws_frame(_OP_TEXT, payload))
            await writer.drain()

        await self._run_client(client_id, recv, send)

    async def _serve_static(self, target: str, writer: asyncio.StreamWriter) -> None:
        path = target.split("?", 1)[0]
        if self.static_dir is None:
            body = b"navsim bridge: connect via WebSocket or NDJSON\n"
            writer.write(b"HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\n"
                         b"Content-Length: " + str(len(body)).encode()
                         + b"\r\nConnection: close\r\n\r\n" + body)
            await writer.drain()
            return
        if path in ("", "/"):
            path = "/index.html"
        candidate = (self.static_dir / path.lstrip("/")).resolve()
        root = self.static_dir.resolve()
        if not str(candidate).startswith(str(root)) or not candidate.is_file():
            writer.write(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n"
                         b"Connection: close\r\n\r\n")
            await writer.drain()
            return
        body = candidate.read_bytes()
        ctype = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        head = (f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
                f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n")
        writer.write(head.encode("latin-1") + body)
        await writer.drain()
