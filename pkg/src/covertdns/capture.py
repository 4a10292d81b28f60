"""Classic pcap parsing and extraction of resolver response-size series."""

from __future__ import annotations

import ipaddress
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .errors import BadMagic, EmptySeries, TruncatedHeader, UnsupportedLinkType
from .series import SizeSeries

LINKTYPE_ETHERNET = 1
ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100
TLS_CONTENT_TYPES = frozenset({20, 21, 22, 23})
TLS_APPLICATION_DATA = 23
PCAPNG_MAGIC = 0x0A0D0D0A


@dataclass(frozen=True)
class PacketRecord:
    ts_sec: int
    ts_usec: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    frame_len: int
    tls_content_type: int | None = None
    # TLS record headers found in the payload; >1 flags coalesced records
    tls_record_count: int = 0

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6


@dataclass(frozen=True)
class FlowFilter:
    resolver_addrs: frozenset[str]
    server_ports: frozenset[int] = field(default_factory=lambda: frozenset({443, 853}))

    def __post_init__(self):
        addrs = frozenset(str(ipaddress.IPv4Address(a)) for a in self.resolver_addrs)
        if not addrs:
            raise ValueError("FlowFilter needs at least one resolver address")
        object.__setattr__(self, "resolver_addrs", addrs)
        object.__setattr__(self, "server_ports", frozenset(int(p) for p in self.server_ports))

    def accepts(self, rec: PacketRecord) -> bool:
        return (
            rec.src_ip in self.resolver_addrs
            and rec.src_port in self.server_ports
            and rec.tls_content_type == TLS_APPLICATION_DATA
        )


@dataclass(frozen=True)
class SizeStats:
    min: int
    max: int
    average: float
    stdev: float
    unique_count: int


def _read_source(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _tls_records(payload: bytes) -> tuple[int | None, int]:
    """First record content type and the number of record headers walked."""
    if not payload or payload[0] not in TLS_CONTENT_TYPES:
        return None, 0
    count = 0
    pos = 0
    while pos + 5 <= len(payload) and payload[pos] in TLS_CONTENT_TYPES:
        (length,) = struct.unpack_from("!H", payload, pos + 3)
        count += 1
        pos += 5 + length
    return payload[0], max(count, 1)


def _decode_frame(data: bytes, ts_sec: int, ts_usec: int, orig_len: int) -> PacketRecord | None:
    if len(data) < 14:
        return None
    off = 12
    (ethertype,) = struct.unpack_from("!H", data, off)
    off += 2
    while ethertype == ETHERTYPE_VLAN and len(data) >= off + 4:
        (ethertype,) = struct.unpack_from("!H", data, off + 2)
        off += 4
    if ethertype != ETHERTYPE_IPV4 or len(data) < off + 20:
        return None
    ver_ihl = data[off]
    if ver_ihl >> 4 != 4:
        return None
    ihl = (ver_ihl & 0x0F) * 4
    (total_len,) = struct.unpack_from("!H", data, off + 2)
    if data[off + 9] != 6 or ihl < 20:
        return None
    src_ip = str(ipaddress.IPv4Address(data[off + 12 : off + 16]))
    dst_ip = str(ipaddress.IPv4Address(data[off + 16 : off + 20]))
    tcp = off + ihl
    if len(data) < tcp + 20:
        return None
    src_port, dst_port = struct.unpack_from("!HH", data, tcp)
    data_off = (data[tcp + 12] >> 4) * 4
    # the IP total length excludes Ethernet padding; the capture may be shorter still
    end = min(len(data), off + total_len) if total_len else len(data)
    payload = data[tcp + data_off : end]
    content_type, records = _tls_records(payload)
    return PacketRecord(ts_sec, ts_usec, src_ip, dst_ip, src_port, dst_port, orig_len, content_type, records)


def iter_pcap(source: bytes | BinaryIO | str | os.PathLike) -> Iterator[PacketRecord]:
    raw = _read_source(source)
    if len(raw) < 24:
        raise TruncatedHeader(f"pcap global header needs 24 bytes, got {len(raw)}")
    (magic_le,) = struct.unpack_from("<I", raw, 0)
    if magic_le == 0xA1B2C3D4:
        endian = "<"
    elif magic_le == 0xD4C3B2A1:
        endian = ">"
    elif magic_le == PCAPNG_MAGIC:
        raise BadMagic("pcapng captures are not supported; convert to classic pcap")
    else:
        raise BadMagic(f"unrecognised pcap magic 0x{magic_le:08x}")
    _, major, minor, _, _, _, linktype = struct.unpack_from(endian + "IHHiIII", raw, 0)
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {linktype} is not Ethernet")
    pos = 24
    while pos < len(raw):
        if pos + 16 > len(raw):
            raise TruncatedHeader(f"packet header at offset {pos} is truncated")
        ts_sec, ts_usec, incl_len, orig_len = struct.unpack_from(endian + "IIII", raw, pos)
        pos += 16
        if pos + incl_len > len(raw):
            raise TruncatedHeader(f"packet at offset {pos - 16} declares {incl_len} bytes, file ends first")
        rec = _decode_frame(raw[pos : pos + incl_len], ts_sec, ts_usec, orig_len)
        pos += incl_len
        if rec is not None:
            yield rec


def parse_pcap(source: bytes | BinaryIO | str | os.PathLike) -> list[PacketRecord]:
    """All IPv4/TCP packets in capture order; other traffic is skipped."""
    return list(iter_pcap(source))


def extract_size_series(records: Iterable[PacketRecord], flt: FlowFilter, label: str | None = None) -> SizeSeries:
    """Frame lengths of resolver->client application-data records, in capture order."""
    sizes = [r.frame_len for r in records if flt.accepts(r)]
    if not sizes:
        raise EmptySeries("no resolver application-data packets matched the filter")
    return SizeSeries(sizes, label)


FlowKey = tuple[str, str, int]


def extract_flows(records: Iterable[PacketRecord], flt: FlowFilter) -> dict[FlowKey, SizeSeries]:
    """Split matching packets by ``(client ip, resolver ip, server port)``, sorted by key."""
    flows: dict[FlowKey, list[int]] = {}
    for r in records:
        if flt.accepts(r):
            flows.setdefault((r.dst_ip, r.src_ip, r.src_port), []).append(r.frame_len)
    return {key: SizeSeries(flows[key]) for key in sorted(flows, key=_flow_sort_key)}


def _flow_sort_key(key: FlowKey):
    return (ipaddress.IPv4Address(key[0]), ipaddress.IPv4Address(key[1]), key[2])


def size_stats(series: SizeSeries | Iterable[float], exclude: Iterable[float] = ()) -> SizeStats:
    """Min/max/average/population-stdev/unique count after dropping `exclude` values."""
    values = series.values if isinstance(series, SizeSeries) else np.asarray(list(series), dtype=float)
    exclude = list(exclude)
    if exclude:
        values = values[~np.isin(values, exclude)]
    if values.size == 0:
        raise EmptySeries("nothing left to summarise")
    mean = float(values.mean())
    return SizeStats(
        min=int(values.min()),
        max=int(values.max()),
        average=mean,
        stdev=float(np.sqrt(np.mean((values - mean) ** 2))),
        unique_count=int(np.unique(values).size),
    )
