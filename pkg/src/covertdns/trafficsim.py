"""Simulated covert DoH/DoT resolution traffic at frame-size fidelity.

Each queried domain yields one server response (DoH) or a 97-byte record
followed by the response (DoT). Response frame sizes follow an affine model
in the domain length with calibrated intercept and normal noise, snapped to
a lattice of ``unique_count`` points over ``[size_min, size_max]``.
"""

from __future__ import annotations

import enum
import functools
import ipaddress
import struct
from dataclasses import dataclass, replace
from typing import BinaryIO, Sequence

import numpy as np
from scipy.special import ndtri

from . import _discrete
from .domainsets import DomainRecord, DomainSet
from .errors import EmptyDataset, InvalidModel, IoFailure
from .series import SizeSeries
from .tables import DOMAIN_LENGTHS, DOT_LEAD_RECORD_SIZE, RESPONSE_SIZES


class TransportMode(enum.Enum):
    DOH = "doh"
    DOT = "dot"

    @property
    def port(self) -> int:
        return 443 if self is TransportMode.DOH else 853

    @classmethod
    def parse(cls, value: "str | TransportMode") -> "TransportMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class ResponseSizeModel:
    family: str
    mode: TransportMode
    size_min: int
    size_max: int
    size_avg: float
    size_stdev: float
    unique_count: int
    length_coupling: float = 0.0
    # family average name length; anchors the intercept when no session lengths are known
    length_avg: float | None = None
    # fixed intercept; None means calibrate against the lengths actually queried
    intercept: float | None = None
    # noise scale before snapping; None means solve it from size_stdev
    noise_stdev: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", TransportMode.parse(self.mode))

    def validate(self) -> None:
        if not self.size_min <= self.size_avg <= self.size_max:
            raise InvalidModel(f"{self.family}/{self.mode.value}: average outside [min, max]")
        if self.size_stdev < 0:
            raise InvalidModel(f"{self.family}/{self.mode.value}: negative stdev")
        if self.unique_count < 1:
            raise InvalidModel(f"{self.family}/{self.mode.value}: unique_count must be >= 1")
        if self.unique_count == 1 and self.size_min != self.size_max:
            raise InvalidModel(f"{self.family}/{self.mode.value}: one unique value needs min == max")
        if self.size_min < MIN_FRAME:
            raise InvalidModel(f"{self.family}/{self.mode.value}: frames shorter than {MIN_FRAME} bytes")

    @property
    def lattice(self) -> np.ndarray:
        return _discrete.lattice(self.size_min, self.size_max, self.unique_count)


def response_model(family: str, mode: str | TransportMode, **overrides) -> ResponseSizeModel:
    """Model for one published family/transport row, fitted to that row.

    The coupling starts at the size range spread over the name-length range
    (zero for fixed-length families) and the noise scale is solved so the
    row's stdev is reproduced. Where the coupling alone already exceeds the
    stdev, it is scaled down until the expected number of distinct sizes in
    1000 responses matches the row's unique count.
    """
    mode = TransportMode.parse(mode)
    row = RESPONSE_SIZES[(family, mode.value)]
    lengths = DOMAIN_LENGTHS.get(family)
    params = dict(
        family=family,
        mode=mode,
        size_min=row.min,
        size_max=row.max,
        size_avg=row.average,
        size_stdev=row.stdev,
        unique_count=row.unique_count,
        length_avg=lengths.average if lengths is not None else None,
    )
    if lengths is not None:
        coupling, noise = _fit_row(family, mode)
        params.update(length_coupling=coupling, noise_stdev=noise)
    params.update(overrides)
    return ResponseSizeModel(**params)


REFERENCE_DRAWS = 1000


@functools.lru_cache(maxsize=64)
def _fit_row(family: str, mode: TransportMode) -> tuple[float, float]:
    from .domainsets import family_length_model, length_distribution

    row = RESPONSE_SIZES[(family, mode.value)]
    len_row = DOMAIN_LENGTHS[family]
    support, probs = length_distribution(family_length_model(family))
    points = _discrete.lattice(row.min, row.max, row.unique_count)
    if len_row.max == len_row.min or row.stdev == 0:
        coupling = 0.0
    else:
        coupling = (row.max - row.min) / (len_row.max - len_row.min)
    if row.stdev == 0 or len(points) == 1:
        return coupling, 0.0

    def solve(gamma):
        offsets = gamma * coupling * support
        shift, scale = _discrete.match_moments(offsets, probs, points, row.average, row.stdev, scale_hint=row.stdev)
        return offsets, shift, scale

    offsets, shift, scale = solve(1.0)
    sd = _discrete.moments(shift + offsets, probs, scale, points)[1]
    if coupling == 0 or sd <= row.stdev * 1.02:
        return coupling, scale

    def unique_gap(gamma):
        offsets, shift, scale = solve(gamma)
        return _discrete.expected_unique(shift + offsets, probs, scale, points, REFERENCE_DRAWS) - row.unique_count

    lo, hi = 0.0, 1.0
    if unique_gap(lo) <= 0:
        hi = 0.0
    else:
        for _ in range(30):
            mid = (lo + hi) / 2
            if unique_gap(mid) > 0:
                lo = mid
            else:
                hi = mid
    gamma = lo if hi > 0 else 0.0
    return gamma * coupling, solve(gamma)[2]


@dataclass(frozen=True)
class Calibration:
    intercept: float
    noise: float


@functools.lru_cache(maxsize=256)
def _calibrate_cached(model: ResponseSizeModel, lengths: tuple[int, ...], counts: tuple[int, ...]) -> Calibration:
    offsets = model.length_coupling * np.asarray(lengths, dtype=float)
    weights = np.asarray(counts, dtype=float) / sum(counts)
    if model.size_stdev == 0:
        return Calibration(model.size_avg - float(weights @ offsets), 0.0)
    if model.noise_stdev is not None:
        scale = model.noise_stdev
        shift = _discrete.solve_shift(offsets, weights, scale, model.lattice, model.size_avg)
        return Calibration(float(shift), float(scale))
    shift, scale = _discrete.match_moments(
        offsets, weights, model.lattice, model.size_avg, model.size_stdev, scale_hint=model.size_stdev
    )
    return Calibration(float(shift), float(scale))


def calibrate(model: ResponseSizeModel, lengths=None) -> Calibration:
    """Intercept and noise scale that reproduce the model's mean and stdev.

    Moments are matched over the empirical distribution of `lengths` (the
    names actually queried); without lengths the family average is used.
    A fixed ``model.intercept`` is honoured and only the noise is kept.
    """
    model.validate()
    if lengths is None:
        lengths = [model.length_avg if model.length_avg is not None else 0.0]
    values, counts = np.unique(np.asarray(lengths, dtype=float), return_counts=True)
    cal = _calibrate_cached(model, tuple(values.tolist()), tuple(counts.tolist()))
    if model.intercept is not None:
        return Calibration(model.intercept, cal.noise)
    return cal


def _snap(value: float, points: np.ndarray) -> int:
    if value <= points[0]:
        return int(points[0])
    if value >= points[-1]:
        return int(points[-1])
    idx = int(np.searchsorted(points, value))
    lo, hi = points[idx - 1], points[idx]
    return int(hi if value - lo >= hi - value else lo)


def simulate_response(
    domain: DomainRecord,
    model: ResponseSizeModel,
    rng: np.random.Generator,
    calibration: Calibration | None = None,
    noise: float | None = None,
) -> list[int]:
    """Frame sizes the resolver sends back for one query.

    `noise` is the standard-normal draw for this response; when omitted it
    is taken from `rng`.
    """
    cal = calibration if calibration is not None else calibrate(model)
    if noise is None:
        noise = rng.standard_normal()
    size = _snap(cal.intercept + model.length_coupling * domain.length + cal.noise * noise, model.lattice)
    if model.mode is TransportMode.DOT:
        return [DOT_LEAD_RECORD_SIZE, size]
    return [size]


@dataclass(frozen=True)
class SimSession:
    domains: DomainSet
    mode: TransportMode
    model: ResponseSizeModel
    seed: int
    resolver_addr: str = "1.1.1.1"
    client_addr: str = "10.0.0.23"

    def __post_init__(self):
        object.__setattr__(self, "mode", TransportMode.parse(self.mode))
        if self.model.family != self.domains.family:
            raise InvalidModel(f"model family {self.model.family!r} != domain family {self.domains.family!r}")
        if self.model.mode is not self.mode:
            raise InvalidModel(f"model mode {self.model.mode.value} != session mode {self.mode.value}")
        ipaddress.IPv4Address(self.resolver_addr)
        ipaddress.IPv4Address(self.client_addr)


def stratified_normal(n: int, rng: np.random.Generator) -> np.ndarray:
    """`n` standard-normal draws, one from each of `n` equal-probability strata, in random order.

    Every draw is marginally N(0, 1), but the sample's empirical
    distribution tracks the normal far more closely than iid draws, so a
    session's size statistics land near the model's moments.
    """
    u = (rng.permutation(n) + rng.random(n)) / n
    return ndtri(u)


def simulate_session(session: SimSession) -> SizeSeries:
    """Response sizes for every domain of the session, in query order."""
    if not len(session.domains):
        raise EmptyDataset("session has no domains")
    cal = calibrate(session.model, session.domains.lengths)
    rng = np.random.default_rng(session.seed)
    noise = stratified_normal(len(session.domains), rng)
    sizes: list[int] = []
    for record, z in zip(session.domains, noise):
        sizes.extend(simulate_response(record, session.model, rng, cal, noise=float(z)))
    return SizeSeries(sizes, session.domains.family)


# --- pcap output -------------------------------------------------------------

ETH_LEN = 14
IPV4_LEN = 20
TCP_LEN = 20
TLS_HEADER_LEN = 5
MIN_FRAME = ETH_LEN + IPV4_LEN + TCP_LEN + TLS_HEADER_LEN

# Synthetic handshake frame sizes (content type 22); they only need to be
# realistic enough for the capture filter to discard them.
CLIENT_HELLO_FRAME = 571
SERVER_HELLO_FRAME = 1434
CLIENT_FINISHED_FRAME = 134
# fixed placeholder for client->resolver query records
QUERY_FRAME = {TransportMode.DOH: 186, TransportMode.DOT: 118}

TLS_HANDSHAKE = 22
TLS_APPLICATION_DATA = 23
CLIENT_PORT = 50123
CLIENT_MAC = bytes.fromhex("020000000017")
SERVER_MAC = bytes.fromhex("0200000000fe")
START_TIME_US = 1_600_000_000 * 1_000_000
PACKET_GAP_US = 250
QUERY_GAP_US = 20_000


def _ipv4_checksum(header: bytes) -> int:
    total = sum(struct.unpack("!10H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


class _PcapWriter:
    def __init__(self, sink: BinaryIO, byteorder: str):
        self.sink = sink
        self.endian = "<" if byteorder == "little" else ">"
        self.written = 0

    def write(self, data: bytes) -> None:
        try:
            self.sink.write(data)
        except OSError as exc:
            raise IoFailure(f"writing pcap failed: {exc}") from exc
        self.written += len(data)

    def global_header(self) -> None:
        self.write(struct.pack(self.endian + "IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1))

    def packet(self, ts_us: int, frame: bytes) -> None:
        sec, usec = divmod(ts_us, 1_000_000)
        self.write(struct.pack(self.endian + "IIII", sec, usec, len(frame), len(frame)))
        self.write(frame)


class _TcpFlow:
    """Builds Ethernet/IPv4/TCP frames for one client<->resolver connection."""

    def __init__(self, client: str, server: str, server_port: int):
        self.client = ipaddress.IPv4Address(client).packed
        self.server = ipaddress.IPv4Address(server).packed
        self.server_port = server_port
        self.seq = {True: 1000, False: 5000}  # keyed by "sent by client"
        self.ip_id = 0

    def frame(self, from_client: bool, content_type: int, frame_len: int, body: bytes | None = None) -> bytes:
        if frame_len < MIN_FRAME:
            raise ValueError(f"frame length {frame_len} below minimum {MIN_FRAME}")
        payload_len = frame_len - ETH_LEN - IPV4_LEN - TCP_LEN
        body_len = payload_len - TLS_HEADER_LEN
        if body is None:
            body = bytes(body_len)
        tls = struct.pack("!BHH", content_type, 0x0303, body_len) + body
        src, dst = (self.client, self.server) if from_client else (self.server, self.client)
        sport, dport = (CLIENT_PORT, self.server_port) if from_client else (self.server_port, CLIENT_PORT)
        seq = self.seq[from_client]
        ack = self.seq[not from_client]
        self.seq[from_client] = (seq + payload_len) & 0xFFFFFFFF
        # checksum left zero, as captured with transmit offload
        tcp = struct.pack("!HHIIBBHHH", sport, dport, seq, ack, 5 << 4, 0x18, 65535, 0, 0)
        self.ip_id = (self.ip_id + 1) & 0xFFFF
        ip = struct.pack("!BBHHHBBH4s4s", 0x45, 0, IPV4_LEN + TCP_LEN + payload_len, self.ip_id, 0x4000, 64, 6, 0, src, dst)
        ip = ip[:10] + struct.pack("!H", _ipv4_checksum(ip)) + ip[12:]
        eth = (SERVER_MAC + CLIENT_MAC if not from_client else CLIENT_MAC + SERVER_MAC) + b"\x08\x00"
        return eth + ip + tcp + tls


def write_pcap(
    session: SimSession, series: SizeSeries | Sequence[int], sink: BinaryIO, byteorder: str = "little"
) -> int:
    """Write `series` as a classic pcap capture and return the number of bytes written.

    Layout: a three-record TLS handshake, then for every domain one client
    query record followed by the server response record(s), one TLS record
    per TCP segment. Only response bodies depend on the session seed. An
    empty `series` yields the handshake alone.
    """
    if byteorder not in ("little", "big"):
        raise ValueError("byteorder must be 'little' or 'big'")
    group = 2 if session.mode is TransportMode.DOT else 1
    sizes = [int(round(v)) for v in series]
    if len(sizes) % group:
        raise ValueError(f"{session.mode.value} series length must be a multiple of {group}")
    writer = _PcapWriter(sink, byteorder)
    flow = _TcpFlow(session.client_addr, session.resolver_addr, session.mode.port)
    body_rng = np.random.default_rng([session.seed, 0x70636170])
    ts = START_TIME_US
    writer.global_header()
    for from_client, size in ((True, CLIENT_HELLO_FRAME), (False, SERVER_HELLO_FRAME), (True, CLIENT_FINISHED_FRAME)):
        writer.packet(ts, flow.frame(from_client, TLS_HANDSHAKE, size))
        ts += PACKET_GAP_US
    for start in range(0, len(sizes), group):
        ts += QUERY_GAP_US
        writer.packet(ts, flow.frame(True, TLS_APPLICATION_DATA, QUERY_FRAME[session.mode]))
        for size in sizes[start : start + group]:
            ts += PACKET_GAP_US
            body = body_rng.bytes(size - MIN_FRAME)
            writer.packet(ts, flow.frame(False, TLS_APPLICATION_DATA, size, body))
    return writer.written


def family_session(
    family: str,
    mode: str | TransportMode,
    seed: int,
    count: int = 1000,
    *,
    domain_seed: int | None = None,
    **session_kwargs,
) -> SimSession:
    """Session over a parametric domain set for a published family."""
    from .domainsets import family_length_model, generate_parametric

    mode = TransportMode.parse(mode)
    domains = generate_parametric(family_length_model(family), count, seed if domain_seed is None else domain_seed)
    return SimSession(domains, mode, response_model(family, mode), seed, **session_kwargs)


def with_stdev(model: ResponseSizeModel, stdev: float) -> ResponseSizeModel:
    return replace(model, size_stdev=stdev)
