"""Address-event representation: interlaced spike queues and coordinate encodings.

A feature map is tiled into KxK windows. A spike at (x, y) is stored in the
queue selected by its position inside the window (the kernel coordinate,
0..K*K-1) and carries only the window address (i_c, j_c). Queue identity and
window address together restore the absolute position exactly, so the K*K
queues partition the map.

Two wire encodings exist for a stored event: the plain form keeps two
explicit status bits next to the packed window address; the compressed form
drops them and signals status through coordinate bit-patterns that no legal
window address uses. When a map leaves no spare pattern, the encoder falls
back to the plain form for that layer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class QueueError(RuntimeError):
    pass


class CapacityFault(QueueError):
    """Enqueue would exceed the configured per-queue depth."""


class EmptyQueue(QueueError):
    """Dequeue from an empty queue."""


class EncodingScheme(enum.Enum):
    PLAIN = "plain"
    COMPRESSED = "compressed"


# Status markers carried in-band between events.
END_OF_SEGMENT = 0
QUEUE_FLUSH = 1


@dataclass(frozen=True)
class AddressEvent:
    """One spike: queue selector plus window address, channel and timestep."""

    kernel_pos: int
    win_x: int
    win_y: int
    channel: int = 0
    timestep: int = 0


def window_count(width: int, kernel: int) -> int:
    """Number of windows along one axis (edge windows may be partial)."""
    return -(-width // kernel)


def to_address_event(x: int, y: int, kernel: int,
                     channel: int = 0, timestep: int = 0) -> AddressEvent:
    """Map an absolute coordinate to its (queue, window address) pair."""
    if x < 0 or y < 0:
        raise ValueError(f"coordinate ({x}, {y}) out of range")
    return AddressEvent(
        kernel_pos=(y % kernel) * kernel + (x % kernel),
        win_x=x // kernel,
        win_y=y // kernel,
        channel=channel,
        timestep=timestep,
    )


def from_address_event(ev: AddressEvent, kernel: int) -> tuple[int, int]:
    """Inverse of to_address_event: restore the absolute coordinate."""
    kx = ev.kernel_pos % kernel
    ky = ev.kernel_pos // kernel
    return ev.win_x * kernel + kx, ev.win_y * kernel + ky


def coord_bits(width: int, kernel: int) -> int:
    """Bits needed for one window coordinate of a width-`width` map."""
    return (window_count(width, kernel) - 1).bit_length()


def check_fallback(width: int, kernel: int) -> bool:
    """True when the compressed encoding has no spare pattern for status.

    The compressed form needs at least one coordinate bit-pattern that no
    legal window address uses; this runs out exactly when the window count
    approaches a power of two from below (or equals it).
    """
    if width < 1 or kernel < 1:
        raise ValueError("width and kernel must be >= 1")
    windows = window_count(width, kernel)
    return (1 << coord_bits(width, kernel)) - windows - 1 < 0


@dataclass(frozen=True)
class EventEncoding:
    """Resolved wire format for events of one feature-map geometry."""

    scheme: EncodingScheme
    width: int
    kernel: int
    bits_per_coord: int
    word_bits: int
    windows: int

    @property
    def spare_patterns(self) -> int:
        """Unused bit-patterns per coordinate (available for status codes)."""
        return (1 << self.bits_per_coord) - self.windows


def resolve_encoding(width: int, kernel: int,
                     scheme: EncodingScheme = EncodingScheme.COMPRESSED
                     ) -> EventEncoding:
    """Choose the effective encoding for a map, applying the fallback rule.

    Requesting COMPRESSED on a geometry without spare patterns silently
    resolves to PLAIN; callers can detect this via the returned scheme.
    """
    b = coord_bits(width, kernel)
    windows = window_count(width, kernel)
    if scheme is EncodingScheme.COMPRESSED and not check_fallback(width, kernel):
        return EventEncoding(EncodingScheme.COMPRESSED, width, kernel, b, 2 * b, windows)
    return EventEncoding(EncodingScheme.PLAIN, width, kernel, b, 2 * b + 2, windows)


def encode_event(ev: AddressEvent, enc: EventEncoding) -> int:
    """Pack an event's window address into its wire word.

    The queue index (kernel position) is implicit in queue identity and is
    never part of the word. Plain words carry two zeroed status bits in the
    LSBs; compressed words are just the two packed coordinates.
    """
    if not (0 <= ev.win_x < enc.windows and 0 <= ev.win_y < enc.windows):
        raise ValueError(
            f"window address ({ev.win_x}, {ev.win_y}) outside "
            f"{enc.windows}x{enc.windows} grid"
        )
    packed = (ev.win_y << enc.bits_per_coord) | ev.win_x
    if enc.scheme is EncodingScheme.PLAIN:
        return packed << 2
    return packed


def encode_status(marker: int, enc: EventEncoding) -> int:
    """Pack a status marker (END_OF_SEGMENT or QUEUE_FLUSH).

    Plain: the marker travels in the two explicit status bits. Compressed:
    the i-coordinate field holds the first reserved pattern (>= window
    count, which no event uses) and the j field carries the marker id.
    """
    if marker not in (END_OF_SEGMENT, QUEUE_FLUSH):
        raise ValueError(f"unknown status marker {marker}")
    if enc.scheme is EncodingScheme.PLAIN:
        return marker + 1  # status bits 0 mean "event"
    if enc.spare_patterns < 1:
        raise ValueError("compressed encoding without spare patterns cannot carry status")
    return (marker << enc.bits_per_coord) | enc.windows


def decode_word(word: int, enc: EventEncoding, kernel_pos: int = 0,
                channel: int = 0, timestep: int = 0):
    """Decode a wire word to an AddressEvent, or a status marker int.

    Returns ``("status", marker)`` for status words and ``("event", ev)``
    otherwise.
    """
    mask = (1 << enc.bits_per_coord) - 1
    if enc.scheme is EncodingScheme.PLAIN:
        status = word & 0b11
        if status:
            return "status", status - 1
        packed = word >> 2
    else:
        packed = word
        if (packed & mask) >= enc.windows:
            return "status", packed >> enc.bits_per_coord
    win_x = packed & mask
    win_y = packed >> enc.bits_per_coord
    if win_x >= enc.windows or win_y >= enc.windows:
        raise ValueError(f"word {word:#x} decodes outside the window grid")
    return "event", AddressEvent(kernel_pos, win_x, win_y, channel, timestep)


@dataclass
class AeqBank:
    """K*K FIFO queues per core, segmented by (channel, timestep).

    Capacity is per queue per core: a queue holds at most ``depth`` events
    summed across all its segments, and overflowing it raises CapacityFault
    rather than dropping. Events are spread across the ``cores`` replicas
    round-robin in enqueue order. Occupancy peaks are tracked per queue for
    the sizing analysis, and per segment for the optional trace.
    """

    kernel: int
    depth: int
    channels: int
    timesteps: int
    cores: int = 1
    segments: dict = field(default_factory=dict)   # (channel, t) -> list per queue
    _core_load: dict = field(default_factory=dict)  # (core, queue) -> occupancy
    _rr: int = 0
    queue_peaks: dict = field(default_factory=dict)     # (core, queue) -> peak
    segment_peaks: dict = field(default_factory=dict)   # (channel, t, queue) -> peak

    @property
    def queue_count(self) -> int:
        return self.kernel * self.kernel

    def _segment(self, channel: int, timestep: int) -> list:
        if not (0 <= channel < self.channels and 0 <= timestep < self.timesteps):
            raise QueueError(
                f"no segment for channel {channel}, timestep {timestep} "
                f"(bank has {self.channels} channels x {self.timesteps} steps)"
            )
        key = (channel, timestep)
        if key not in self.segments:
            self.segments[key] = [[] for _ in range(self.queue_count)]
        return self.segments[key]

    def enqueue(self, ev: AddressEvent) -> None:
        queues = self._segment(ev.channel, ev.timestep)
        q = ev.kernel_pos
        if not 0 <= q < self.queue_count:
            raise QueueError(f"kernel position {q} outside {self.queue_count} queues")
        core = self._rr % self.cores
        self._rr += 1
        load = self._core_load.get((core, q), 0) + 1
        if load > self.depth:
            raise CapacityFault(
                f"queue {q} on core {core} exceeds depth {self.depth} "
                f"(channel {ev.channel}, t {ev.timestep})"
            )
        self._core_load[(core, q)] = load
        queues[q].append((core, ev))
        self.queue_peaks[(core, q)] = max(self.queue_peaks.get((core, q), 0), load)
        seg_key = (ev.channel, ev.timestep, q)
        self.segment_peaks[seg_key] = max(self.segment_peaks.get(seg_key, 0), len(queues[q]))

    def dequeue(self, queue: int, channel: int, timestep: int) -> AddressEvent:
        queues = self._segment(channel, timestep)
        if not queues[queue]:
            raise EmptyQueue(
                f"queue {queue} empty for channel {channel}, timestep {timestep}"
            )
        core, ev = queues[queue].pop(0)
        self._core_load[(core, queue)] -= 1
        return ev

    def segment_events(self, channel: int, timestep: int) -> list[AddressEvent]:
        """All events of one segment in enqueue order, without consuming them.

        Segments are read once per output-channel pass, so draining is
        non-destructive until release_segment frees the storage.
        """
        queues = self._segment(channel, timestep)
        ordered = []
        for q in range(self.queue_count):
            ordered.extend(ev for _, ev in queues[q])
        return ordered

    def segment_size(self, channel: int, timestep: int) -> int:
        key = (channel, timestep)
        if key not in self.segments:
            return 0
        return sum(len(q) for q in self.segments[key])

    def release_segment(self, channel: int, timestep: int) -> None:
        key = (channel, timestep)
        if key in self.segments:
            for q, held in enumerate(self.segments[key]):
                for core, _ in held:
                    self._core_load[(core, q)] -= 1
            self.segments[key] = [[] for _ in range(self.queue_count)]

    def total_events(self) -> int:
        return sum(len(q) for queues in self.segments.values() for q in queues)
