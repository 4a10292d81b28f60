"""Candidate C&C domain lists: loading, length statistics and parametric synthesis."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

import numpy as np

from . import _discrete
from .errors import EmptyDataset, InvalidModel, MalformedDomain
from .tables import DOMAIN_LENGTHS

DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
DEFAULT_TLD = ".com"
MAX_DOMAIN_LENGTH = 253


@dataclass(frozen=True)
class DomainRecord:
    name: str
    family: str
    length: int = field(init=False)

    def __post_init__(self):
        if not self.name or "." not in self.name:
            raise MalformedDomain(f"not a domain name: {self.name!r}")
        object.__setattr__(self, "length", len(self.name))


@dataclass(frozen=True)
class DomainSet:
    family: str
    records: tuple[DomainRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise EmptyDataset(f"domain set for {self.family!r} is empty")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.records]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([r.length for r in self.records], dtype=int)


@dataclass(frozen=True)
class LengthStats:
    min: int
    max: int
    average: float
    stdev: float
    unique_count: int


@dataclass(frozen=True)
class FamilyLengthModel:
    family: str
    min: int
    max: int
    average: float
    stdev: float
    alphabet: str = DEFAULT_ALPHABET
    tld: str = DEFAULT_TLD

    def validate(self) -> None:
        if self.min > self.max:
            raise InvalidModel(f"{self.family}: min {self.min} > max {self.max}")
        if not self.min <= self.average <= self.max:
            raise InvalidModel(f"{self.family}: average {self.average} outside [{self.min}, {self.max}]")
        if self.stdev < 0:
            raise InvalidModel(f"{self.family}: negative stdev")
        if not self.alphabet:
            raise InvalidModel(f"{self.family}: empty alphabet")
        if not self.tld.startswith(".") or len(self.tld) < 2:
            raise InvalidModel(f"{self.family}: tld must look like '.com', got {self.tld!r}")
        if self.min - len(self.tld) < 1:
            raise InvalidModel(f"{self.family}: min length {self.min} leaves no room before {self.tld!r}")
        if self.max > MAX_DOMAIN_LENGTH:
            raise InvalidModel(f"{self.family}: max length {self.max} exceeds {MAX_DOMAIN_LENGTH}")


def family_length_model(family: str, **overrides) -> FamilyLengthModel:
    """Length model for one of the published datasets."""
    row = DOMAIN_LENGTHS[family]
    params = dict(family=family, min=row.min, max=row.max, average=row.average, stdev=row.stdev)
    if row.min <= len(DEFAULT_TLD):
        params["tld"] = ".io"
    params.update(overrides)
    return FamilyLengthModel(**params)


def _check_name(line: str, lineno: int) -> str:
    if any(ch.isspace() for ch in line):
        raise MalformedDomain(f"line {lineno}: whitespace inside {line!r}")
    if "." not in line:
        raise MalformedDomain(f"line {lineno}: no dot in {line!r}")
    if len(line) > MAX_DOMAIN_LENGTH:
        raise MalformedDomain(f"line {lineno}: {len(line)} characters exceeds {MAX_DOMAIN_LENGTH}")
    return line


def load_domain_list(source: bytes | BinaryIO | str | os.PathLike, family: str, *, dedupe: bool = False) -> DomainSet:
    """Read one domain per line (UTF-8, LF or CRLF).

    Blank lines and ``#`` comments are skipped; names are stripped and
    lowercased. Duplicates are kept unless `dedupe` is set, in which case
    only the first occurrence survives.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()
    text = raw.decode("utf-8")
    records = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name = _check_name(line.lower(), lineno)
        if dedupe:
            if name in seen:
                continue
            seen.add(name)
        records.append(DomainRecord(name, family))
    if not records:
        raise EmptyDataset(f"no domains found for {family!r}")
    return DomainSet(family, tuple(records))


def dump_domain_list(domains: DomainSet) -> bytes:
    return "".join(name + "\n" for name in domains.names).encode("utf-8")


def length_stats(domains: DomainSet | Iterable[int]) -> LengthStats:
    """Summary of name lengths; stdev is the population value."""
    lengths = domains.lengths if isinstance(domains, DomainSet) else np.asarray(list(domains), dtype=int)
    if lengths.size == 0:
        raise EmptyDataset("no lengths to summarise")
    mean = float(lengths.mean())
    return LengthStats(
        min=int(lengths.min()),
        max=int(lengths.max()),
        average=mean,
        stdev=float(np.sqrt(np.mean((lengths - mean) ** 2))),
        unique_count=int(np.unique(lengths).size),
    )


def length_distribution(model: FamilyLengthModel) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of the name-length distribution used by the generator.

    A rounded normal truncated to ``[min, max]`` whose location and scale are
    solved so that the truncated distribution keeps the model's average and
    stdev (where the range permits).
    """
    model.validate()
    support = np.arange(model.min, model.max + 1, dtype=float)
    if model.min == model.max:
        return support.astype(int), np.ones(1)
    loc, scale = _discrete.match_moments([0.0], [1.0], support, model.average, model.stdev, mode="truncate")
    probs = _discrete.pmf(loc, scale, support, mode="truncate")[0]
    return support.astype(int), probs


def generate_parametric(model: FamilyLengthModel, count: int, seed: int) -> DomainSet:
    """Random names whose length distribution follows `model`; deterministic in its inputs."""
    if count < 1:
        raise InvalidModel(f"count must be positive, got {count}")
    support, probs = length_distribution(model)
    rng = np.random.default_rng(seed)
    lengths = rng.choice(support, size=count, p=probs)
    alphabet = np.array(list(model.alphabet))
    records = []
    for total in lengths:
        body = "".join(rng.choice(alphabet, size=int(total) - len(model.tld)))
        records.append(DomainRecord(body + model.tld, model.family))
    return DomainSet(model.family, tuple(records))
