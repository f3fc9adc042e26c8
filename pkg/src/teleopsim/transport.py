"""Message transports: impaired in-process links and a UDP socket wrapper.

The loopback transport is strictly single-threaded and deterministic: each
submitted datagram gets a delivery time of ``send + max(0, base_latency +
U(-jitter, +jitter))`` from a seeded per-link stream (or is dropped with
``drop_prob``), and polls release due messages in delivery order, which
reproduces reordering under jitter. The UDP transport receives on a
background thread that only appends to a bounded queue (drop-oldest with a
counter); node logic stays single-threaded.
"""
from __future__ import annotations

import heapq
import socket
import threading
from collections import deque
from dataclasses import dataclass

from .rng import Xoshiro256StarStar


@dataclass(frozen=True)
class LinkModel:
    """Impairment parameters of one directed link."""

    base_latency: float = 0.0   # s
    jitter: float = 0.0         # s, uniform half-width
    drop_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.base_latency < 0 or self.jitter < 0:
            raise ValueError("latency and jitter must be non-negative")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must lie in [0, 1]")


class ImpairedLink:
    """Directed in-process link applying a :class:`LinkModel`."""

    def __init__(self, model: LinkModel, label: str = "link"):
        self.model = model
        self._rng = Xoshiro256StarStar.for_stream(model.seed, label)
        self._queue: list[tuple[float, int, bytes]] = []
        self._counter = 0
        self.dropped = 0
        # ideal links skip the heap and the rng entirely
        self._ideal = (model.base_latency == 0.0 and model.jitter == 0.0
                       and model.drop_prob == 0.0)
        self._fifo: deque[bytes] = deque()

    def submit(self, data: bytes, now: float) -> None:
        if self._ideal:
            self._fifo.append(data)
            return
        m = self.model
        if m.drop_prob > 0.0 and self._rng.random() < m.drop_prob:
            self.dropped += 1
            return
        delay = m.base_latency
        if m.jitter > 0.0:
            delay += self._rng.uniform(-m.jitter, m.jitter)
        if delay < 0.0:
            delay = 0.0
        heapq.heappush(self._queue, (now + delay, self._counter, data))
        self._counter += 1

    def poll(self, now: float) -> list[bytes]:
        if self._ideal:
            if not self._fifo:
                return []
            out = list(self._fifo)
            self._fifo.clear()
            return out
        out = []
        q = self._queue
        while q and q[0][0] <= now:
            out.append(heapq.heappop(q)[2])
        return out

    @property
    def pending(self) -> int:
        return len(self._fifo) + len(self._queue)


class LoopbackHub:
    """Named directed links between in-process nodes, one shared clock."""

    def __init__(self, model: LinkModel = LinkModel(), seed: int | None = None):
        base = model if seed is None else LinkModel(
            model.base_latency, model.jitter, model.drop_prob, seed
        )
        self._model = base
        self._links: dict[tuple[str, str], ImpairedLink] = {}

    def link(self, src: str, dst: str) -> ImpairedLink:
        key = (src, dst)
        if key not in self._links:
            self._links[key] = ImpairedLink(self._model, label=f"{src}->{dst}")
        return self._links[key]

    def send(self, src: str, dst: str, data: bytes, now: float) -> None:
        self.link(src, dst).submit(data, now)

    def recv(self, src: str, dst: str, now: float) -> list[bytes]:
        return self.link(src, dst).poll(now)

    @property
    def dropped(self) -> int:
        return sum(l.dropped for l in self._links.values())


class UdpEndpoint:
    """One UDP socket with a bounded receive queue (drop-oldest)."""

    def __init__(self, bind: tuple[str, int], queue_size: int = 1024):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind(bind)
        self._sock.settimeout(0.05)
        self._queue: deque[bytes] = deque(maxlen=queue_size)
        self._lock = threading.Lock()
        self.overflow_dropped = 0
        self._running = True
        self._thread = threading.Thread(target=self._reader, daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def _reader(self) -> None:
        while self._running:
            try:
                data, _ = self._sock.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            with self._lock:
                if len(self._queue) == self._queue.maxlen:
                    self.overflow_dropped += 1
                self._queue.append(data)

    def send(self, data: bytes, dest: tuple[str, int]) -> None:
        self._sock.sendto(data, dest)

    def drain(self) -> list[bytes]:
        with self._lock:
            out = list(self._queue)
            self._queue.clear()
        return out

    def close(self) -> None:
        self._running = False
        self._thread.join(timeout=1.0)
        self._sock.close()
