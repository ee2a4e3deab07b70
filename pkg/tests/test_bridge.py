import asyncio
import json
from pathlib import Path

import pytest

from navsim.bridge import (
    Broker, BusMessage, MalformedFrame, SchemaViolation, UnknownOp,
    decode_frame, encode_frame, payload_error, valid_topic,
)
from navsim.bridge.server import BridgeServer, encode_ws_frame, ws_accept_key
from navsim.rng import Rng

FIXTURES = Path(__file__).parent / "fixtures"


class TestCodec:
    def test_round_trip_publish(self):
        msg = BusMessage("publish", "/cmd_vel", "twist",
                         {"linear": 1.0, "angular": 0.0}, "corr-1")
        assert decode_frame(encode_frame(msg)) == msg

    def test_round_trip_minimal(self):
        msg = BusMessage("subscribe", "/scan")
        assert decode_frame(encode_frame(msg)) == msg

    def test_malformed_frame(self):
        with pytest.raises(MalformedFrame):
            decode_frame(b"not json\n")
        with pytest.raises(MalformedFrame):
            decode_frame(b"[1, 2, 3]")
        with pytest.raises(MalformedFrame):
            decode_frame(b"\xff\xfe")

    def test_unknown_op(self):
        with pytest.raises(UnknownOp):
            decode_frame(b'{"op": "teleport"}')
        with pytest.raises(UnknownOp):
            decode_frame(b'{"topic": "/x"}')

    def test_schema_violation_on_field_types(self):
        with pytest.raises(SchemaViolation):
            decode_frame(b'{"op": "publish", "topic": 5}')
        with pytest.raises(SchemaViolation):
            decode_frame(b'{"op": "publish", "topic": "/x", "id": 7}')

    def test_topic_pattern(self):
        assert valid_topic("/agent0/cmd_vel")
        assert valid_topic("/areas_description")
        assert not valid_topic("no_slash")
        assert not valid_topic("/UPPER")
        assert not valid_topic("/a//b")
        assert not valid_topic("/trailing/")

    def test_payload_schemas(self):
        assert payload_error("twist", {"linear": 1.0, "angular": 2.0}) is None
        assert payload_error("twist", {"linear": "fast"}) is not None
        assert payload_error("unknown_type", {"whatever": 1}) is None
        assert payload_error("string", {"data": "ok"}) is None
        assert payload_error("string", {}) is not None


def connected_broker(*clients) -> Broker:
    broker = Broker()
    for client in clients:
        broker.connect(client)
    return broker


class TestBroker:
    def test_fan_out_to_all_subscribers(self):
        broker = connected_broker("pub", "s1", "s2", "s3")
        broker.dispatch("pub", BusMessage("advertise", "/scan", "scan"))
        for sub in ("s1", "s2", "s3"):
            broker.dispatch(sub, BusMessage("subscribe", "/scan"))
        payload = {"stamp": 1.0, "angle_min": 0.0, "angle_increment": 0.1,
                   "ranges": [1.0]}
        broker.dispatch("pub", BusMessage("publish", "/scan", msg=payload))
        for sub in ("s1", "s2", "s3"):
            frames = broker.drain(sub)
            assert len(frames) == 1
            assert frames[0].msg == payload and frames[0].op == "publish"

    def test_publish_before_advertise_rejected(self):
        broker = connected_broker("a")
        broker.dispatch("a", BusMessage("publish", "/x", msg={"data": "hi"}))
        status = broker.drain("a")[0]
        assert status.op == "status" and status.msg["code"] == "not_advertised"

    def test_latched_topic_replays_to_new_subscriber(self):
        broker = connected_broker("pub", "late")
        broker.set_latched("/areas_description")
        broker.dispatch("pub", BusMessage("advertise", "/areas_description", "string"))
        broker.dispatch("pub", BusMessage("publish", "/areas_description",
                                          msg={"data": "v1"}))
        broker.dispatch("late", BusMessage("subscribe", "/areas_description"))
        frames = broker.drain("late")
        assert len(frames) == 1 and frames[0].msg == {"data": "v1"}

    def test_type_conflict_rejected(self):
        broker = connected_broker("a", "b")
        broker.dispatch("a", BusMessage("advertise", "/t", "twist"))
        broker.dispatch("b", BusMessage("advertise", "/t", "scan"))
        status = broker.drain("b")[0]
        assert status.msg["code"] == "type_conflict"

    def test_schema_violation_on_publish(self):
        broker = connected_broker("a", "s")
        broker.dispatch("a", BusMessage("advertise", "/t", "twist"))
        broker.dispatch("s", BusMessage("subscribe", "/t"))
        broker.dispatch("a", BusMessage("publish", "/t", msg={"linear": "no"}))
        status = broker.drain("a")[0]
        assert status.msg["code"] == "schema_violation"
        assert broker.drain("s") == []  # nothing delivered

    def test_bad_topic_rejected(self):
        broker = connected_broker("a")
        broker.dispatch("a", BusMessage("subscribe", "NotATopic"))
        assert broker.drain("a")[0].msg["code"] == "bad_topic"

    def test_unadvertise_revokes_publishing(self):
        broker = connected_broker("a", "s")
        broker.dispatch("a", BusMessage("advertise", "/t", "string"))
        broker.dispatch("a", BusMessage("unadvertise", "/t"))
        broker.dispatch("a", BusMessage("publish", "/t", msg={"data": "x"}))
        assert broker.drain("a")[0].msg["code"] == "not_advertised"

    def test_unsubscribe_stops_delivery(self):
        broker = connected_broker("a", "s")
        broker.dispatch("a", BusMessage("advertise", "/t", "string"))
        broker.dispatch("s", BusMessage("subscribe", "/t"))
        broker.dispatch("s", BusMessage("unsubscribe", "/t"))
        broker.dispatch("a", BusMessage("publish", "/t", msg={"data": "x"}))
        assert broker.drain("s") == []

    def test_client_sent_status_rejected(self):
        broker = connected_broker("a")
        broker.dispatch("a", BusMessage("status", msg={"level": "info",
                                                       "code": "x", "detail": ""}))
        reply = broker.drain("a")[0]
        assert reply.msg["code"] == "bad_op"

    def test_disconnect_cleans_table(self):
        broker = connected_broker("a", "b")
        broker.dispatch("a", BusMessage("advertise", "/t", "string"))
        broker.dispatch("b", BusMessage("subscribe", "/t"))
        broker.disconnect("a")
        assert "a" not in broker.topics["/t"].publishers
        broker.disconnect("b")
        assert "/t" not in broker.topics

    def test_queue_overflow_drops_oldest_with_notice(self):
        broker = connected_broker("pub", "slow")
        broker.dispatch("pub", BusMessage("advertise", "/t", "string"))
        broker.dispatch("slow", BusMessage("subscribe", "/t"))
        for i in range(1100):
            broker.dispatch("pub", BusMessage("publish", "/t", msg={"data": str(i)}))
        frames = broker.drain("slow")
        assert frames[0].op == "status"
        assert frames[0].msg["code"] == "queue_overflow"
        assert "76" in frames[0].msg["detail"]  # dropped 1100-1024
        payloads = [f.msg["data"] for f in frames[1:]]
        assert payloads == [str(i) for i in range(76, 1100)]  # oldest dropped, once

    def test_interleaved_publishers_preserve_per_publisher_order(self):
        rng = Rng(12)
        for trial in range(20):
            broker = connected_broker("p1", "p2", "s1", "s2", "s3")
            for pub in ("p1", "p2"):
                broker.dispatch(pub, BusMessage("advertise", "/mix", "string"))
            for sub in ("s1", "s2", "s3"):
                broker.dispatch(sub, BusMessage("subscribe", "/mix"))
            counters = {"p1": 0, "p2": 0}
            for _ in range(60):
                pub = "p1" if rng.random() < 0.5 else "p2"
                broker.dispatch(pub, BusMessage(
                    "publish", "/mix", msg={"data": f"{pub}:{counters[pub]}"}))
                counters[pub] += 1
            for sub in ("s1", "s2", "s3"):
                frames = broker.drain(sub)
                assert len(frames) == 60
                for pub in ("p1", "p2"):
                    seqs = [int(f.msg["data"].split(":")[1]) for f in frames
                            if f.msg["data"].startswith(pub)]
                    assert seqs == list(range(counters[pub]))

    def test_golden_transcript_byte_exact(self):
        broker = connected_broker("sim", "bob", "carol")
        broker.set_latched("/areas_description")
        log: list[str] = []

        def drain_into_log(client):
            for frame in broker.drain(client):
                log.append(f"{client}\t{encode_frame(frame).decode('utf-8')}")

        broker.dispatch("sim", BusMessage("advertise", "/areas_description", "string"))
        broker.dispatch("sim", BusMessage("publish", "/areas_description",
                                          msg={"data": "hello world"}))
        broker.dispatch("bob", BusMessage("subscribe", "/areas_description"))
        drain_into_log("bob")
        broker.dispatch("carol", BusMessage("subscribe", "/areas_description"))
        drain_into_log("carol")
        broker.dispatch("sim", BusMessage("publish", "/areas_description",
                                          msg={"data": "update"}))
        drain_into_log("bob")
        drain_into_log("carol")

        expected = (FIXTURES / "golden_transcript.txt").read_text(encoding="utf-8")
        assert "\n".join(log) + "\n" == expected


# ---------------------------------------------------------------------------
# server transport tests

def mask_ws_frame(payload: bytes, opcode: int = 1, fin: bool = True,
                  mask: bytes = b"\x11\x22\x33\x44") -> bytes:
    import struct
    head = bytes([(0x80 if fin else 0x00) | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([0x80 | n])
    elif n < 1 << 16:
        head += bytes([0x80 | 126]) + struct.pack(">H", n)
    else:
        head += bytes([0x80 | 127]) + struct.pack(">Q", n)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return head + mask + masked


def mask_ws_text(payload: bytes, mask: bytes = b"\x11\x22\x33\x44") -> bytes:
    return mask_ws_frame(payload, opcode=1, fin=True, mask=mask)


async def read_ws_server_frame(reader) -> bytes:
    import struct
    header = await reader.readexactly(2)
    assert header[0] & 0x0F in (1, 8)
    length = header[1] & 0x7F
    assert not header[1] & 0x80  # server frames are unmasked
    if length == 126:
        length = struct.unpack(">H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", await reader.readexactly(8))[0]
    return await reader.readexactly(length)


def test_ws_accept_key_rfc_example():
    assert ws_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == \
        "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


def test_ws_frame_lengths():
    small = encode_ws_frame(1, b"x" * 10)
    assert small[1] == 10
    medium = encode_ws_frame(1, b"x" * 300)
    assert medium[1] == 126
    large = encode_ws_frame(1, b"x" * 70000)
    assert large[1] == 127


async def start_test_server(static_dir=None):
    broker = Broker()
    server = BridgeServer(broker, "127.0.0.1", 0, static_dir=static_dir)
    await server.start()
    return broker, server


class TestServerTransports:
    def test_ndjson_pub_sub_and_malformed_frames(self):
        async def scenario():
            broker, server = await start_test_server()
            port = server.bound_port
            r1, w1 = await asyncio.open_connection("127.0.0.1", port)
            r2, w2 = await asyncio.open_connection("127.0.0.1", port)

            w2.write(b'{"op":"subscribe","topic":"/chat"}\n')
            await w2.drain()
            w1.write(b'{"op":"advertise","topic":"/chat","type":"string"}\n')
            w1.write(b"this is not json\n")  # must elicit a status, not a crash
            await w1.drain()
            status = json.loads(await asyncio.wait_for(r1.readline(), 5))
            assert status["op"] == "status"
            assert status["msg"]["code"] == "malformed_frame"

            await asyncio.sleep(0.05)  # let the subscribe settle
            w1.write(b'{"op":"publish","topic":"/chat","msg":{"data":"hi"}}\n')
            await w1.drain()
            frame = json.loads(await asyncio.wait_for(r2.readline(), 5))
            assert frame == {"msg": {"data": "hi"}, "op": "publish",
                             "topic": "/chat", "type": "string"}
            for w in (w1, w2):
                w.close()
            await server.stop()

        asyncio.run(scenario())

    def test_garbage_bytes_do_not_kill_server(self):
        async def scenario():
            broker, server = await start_test_server()
            port = server.bound_port
            r, w = await asyncio.open_connection("127.0.0.1", port)
            w.write(b"\x00\x01\x02garbage\r\n\r\n")
            await w.drain()
            w.close()
            # server still accepts a fresh, well-behaved client
            r2, w2 = await asyncio.open_connection("127.0.0.1", port)
            w2.write(b'{"op":"advertise","topic":"/ok","type":"string"}\n')
            w2.write(b'{"op":"publish","topic":"/bad"}\n')
            await w2.drain()
            status = json.loads(await asyncio.wait_for(r2.readline(), 5))
            assert status["msg"]["code"] == "not_advertised"
            w2.close()
            await server.stop()

        asyncio.run(scenario())

    def test_websocket_handshake_and_frames(self):
        async def scenario():
            broker, server = await start_test_server()
            port = server.bound_port
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            writer.write(b"GET / HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
                         b"Connection: Upgrade\r\n"
                         b"Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
                         b"Sec-WebSocket-Version: 13\r\n\r\n")
            await writer.drain()
            head = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), 5)
            assert b"101 Switching Protocols" in head
            assert b"s3pPLMBiTxaQ9kYGzzhZRbK+xOo=" in head

            # ndjson client publishes; ws client subscribed
            writer.write(mask_ws_text(b'{"op":"subscribe","topic":"/chat"}'))
            await writer.drain()
            await asyncio.sleep(0.05)
            r2, w2 = await asyncio.open_connection("127.0.0.1", port)
            w2.write(b'{"op":"advertise","topic":"/chat","type":"string"}\n'
                     b'{"op":"publish","topic":"/chat","msg":{"data":"over ws"}}\n')
            await w2.drain()
            payload = await asyncio.wait_for(read_ws_server_frame(reader), 5)
            frame = json.loads(payload)
            assert frame["msg"] == {"data": "over ws"}

            # ping is answered with pong
            writer.write(b"\x89\x84\x01\x02\x03\x04" +
                         bytes(b ^ m for b, m in zip(b"ping", b"\x01\x02\x03\x04")))
            await writer.drain()
            pong = await asyncio.wait_for(read_ws_server_frame_any(reader), 5)
            assert pong == (10, b"ping")
            writer.close()
            w2.close()
            await server.stop()

        asyncio.run(scenario())

    def test_fragmented_ws_message_with_interleaved_ping(self):
        async def scenario():
            broker, server = await start_test_server()
            port = server.bound_port
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            writer.write(b"GET / HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
                         b"Connection: Upgrade\r\n"
                         b"Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n\r\n")
            await writer.drain()
            await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), 5)

            # subscribe sent as two fragments with a ping in the middle;
            # the partial message must survive the control frame
            frame = b'{"op":"subscribe","topic":"/frag"}'
            writer.write(mask_ws_frame(frame[:10], opcode=1, fin=False))
            writer.write(mask_ws_frame(b"ping!", opcode=9, fin=True))
            writer.write(mask_ws_frame(frame[10:], opcode=0, fin=True))
            await writer.drain()
            pong = await asyncio.wait_for(read_ws_server_frame_any(reader), 5)
            assert pong == (10, b"ping!")

            r2, w2 = await asyncio.open_connection("127.0.0.1", port)
            w2.write(b'{"op":"advertise","topic":"/frag","type":"string"}\n'
                     b'{"op":"publish","topic":"/frag","msg":{"data":"whole"}}\n')
            await w2.drain()
            payload = await asyncio.wait_for(read_ws_server_frame_any(reader), 5)
            assert json.loads(payload[1])["msg"] == {"data": "whole"}
            writer.close()
            w2.close()
            await server.stop()

        asyncio.run(scenario())

    def test_static_files_served(self, tmp_path):
        (tmp_path / "index.html").write_text("<html>console</html>")
        (tmp_path / "app.js").write_text("// js")

        async def scenario():
            broker, server = await start_test_server(static_dir=tmp_path)
            port = server.bound_port

            async def get(path):
                reader, writer = await asyncio.open_connection("127.0.0.1", port)
                writer.write(f"GET {path} HTTP/1.1\r\nHost: x\r\n\r\n".encode())
                await writer.drain()
                data = await asyncio.wait_for(reader.read(), 5)
                writer.close()
                return data

            root = await get("/")
            assert b"200 OK" in root and b"<html>console</html>" in root
            js = await get("/app.js")
            assert b"text/javascript" in js or b"application/javascript" in js
            missing = await get("/nope.txt")
            assert b"404" in missing
            escape = await get("/../secrets")
            assert b"404" in escape
            await server.stop()

        asyncio.run(scenario())


async def read_ws_server_frame_any(reader):
    import struct
    header = await reader.readexactly(2)
    opcode = header[0] & 0x0F
    length = header[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", await reader.readexactly(8))[0]
    return opcode, await reader.readexactly(length)
