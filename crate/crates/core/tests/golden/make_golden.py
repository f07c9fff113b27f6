"""Writes the wire-format fixtures with struct.pack, independently of the Rust codec."""
import json
import struct
from pathlib import Path

HERE = Path(__file__).parent


def frame(kind, seq, payload):
    return b"NSP1" + struct.pack("<BBII", 1, kind, seq, len(payload)) + payload


def f32s(*xs):
    return struct.pack("<%df" % len(xs), *xs)


joints = [(0.0, 1.5, -1.2), (0.0, 1.3, -1.2), (0.2, 1.2, -1.0), (0.25, 1.0, -0.8)]
points = [((0.1, 1.0, -1.1), (200, 150, 120)), ((-0.1, 0.5, -1.1), (10, 20, 30))]
embodiment = struct.pack("<IQB", 42, 1_000_000, 4)
for j in joints:
    embodiment += f32s(*j)
embodiment += struct.pack("<H", len(points))
for pos, rgb in points:
    embodiment += f32s(*pos) + bytes(rgb)

snapshot = bytes([8, 5])
for rec in [(1, 0, 4, 2, 0), (2, 1, 0, 4, 2), (3, 2, 7, 0, 0), (4, 3, 0, 0, 1), (5, 4, 0xFF, 0xFF, 1)]:
    snapshot += bytes(rec)

fixtures = {
    "join": frame(1, 0, struct.pack("<HB", 7401, 5) + b"alice"),
    "role_assign": frame(2, 1, bytes([1, 2])),
    "task_start": frame(3, 2, struct.pack("<BBI", 3, 0b110, 5)),
    "state_snapshot": frame(4, 3, snapshot),
    "state_delta": frame(5, 4, bytes([3, 2, 5, 1])),
    "highlight": frame(6, 5, bytes([3])),
    "embodiment_frame": frame(7, 6, embodiment),
    "task_complete": frame(8, 7, bytes([4])),
    "pose_sample": frame(9, 100, struct.pack("<Q", 123_456_789) + f32s(0.0, 0.45, -1.25, 0.0, 0.3, -0.9, 0.0, 0.0, 0.0, 1.0)),
    "button_event": frame(10, 101, struct.pack("<QB", 123_456_789, 1)),
    "snapshot_request": frame(11, 8, b""),
    "button_ack": frame(12, 9, struct.pack("<Q", 123_456_789)),
    "reject": frame(13, 10, bytes([1]) + b"session full"),
}

for name, data in fixtures.items():
    (HERE / f"{name}.bin").write_bytes(data)

(HERE / "highlight.json").write_text(json.dumps({"seq": 5, "type": "HIGHLIGHT", "payload": {"cube": 3}}) + "\n")
