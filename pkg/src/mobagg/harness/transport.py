"""Message transports for simulated rounds.

The default transport never leaves the process: it hands each frame straight
to the recipient while tallying exact byte counts per direction. A loopback
TCP transport exists for demos; it pushes every frame through a real socket
on 127.0.0.1 so captured traffic matches the reported sizes, but tests stay
on the in-process bus.
"""

from __future__ import annotations

import socket
import struct

_LEN = struct.Struct("<I")

#: member -> aggregator
UPLOAD = "upload"
#: aggregator -> member
DOWNLOAD = "download"


class InProcessTransport:
    """Counts frame bytes and returns the frame unchanged."""

    def __init__(self) -> None:
        self.bytes_by_direction = {UPLOAD: 0, DOWNLOAD: 0}

    def deliver(self, blob: bytes, direction: str) -> bytes:
        self.bytes_by_direction[direction] += len(blob)
        return blob

    def close(self) -> None:
        pass


class TcpLoopbackTransport:
    """Echoes every frame through a real TCP connection on localhost."""

    def __init__(self) -> None:
        self.bytes_by_direction = {UPLOAD: 0, DOWNLOAD: 0}
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.bind(("127.0.0.1", 0))
        listener.listen(1)
        self._client = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._client.connect(listener.getsockname())
        self._server, _ = listener.accept()
        listener.close()

    def deliver(self, blob: bytes, direction: str) -> bytes:
        self.bytes_by_direction[direction] += len(blob)
        self._client.sendall(_LEN.pack(len(blob)) + blob)
        need = _LEN.size + len(blob)
        chunks = []
        while need:
            chunk = self._server.recv(min(need, 1 << 16))
            if not chunk:
                raise ConnectionError("loopback peer closed early")
            chunks.append(chunk)
            need -= len(chunk)
        data = b"".join(chunks)
        (length,) = _LEN.unpack_from(data)
        if length != len(blob):
            raise ConnectionError("loopback length prefix mismatch")
        return data[_LEN.size :]

    def close(self) -> None:
        self._client.close()
        self._server.close()
