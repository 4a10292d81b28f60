"""Lightweight covert-DNS heuristics and the per-flow detection pipeline.

Two patterns are checked on the resolver's response sizes:

* DoT answers arrive as a fixed 97-byte record followed by the payload
  record, so 97 fills every other slot.
* Domains of a fixed (or narrow) length produce answers of a fixed (or
  narrow) size, so a DGA session shows very few distinct sizes.

When an IoC database is supplied, the flow is also fingerprinted and
ranked against it.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .capture import FlowFilter, FlowKey, extract_flows, parse_pcap
from .errors import (
    ConfigError,
    EmptySeries,
    IoFailure,
    NotReached,
    SeriesTooShort,
    SingularDesign,
)
from .ioc import IocDatabase, build_ioc, match_ioc, min_observations
from .series import SizeSeries
from .tables import DOT_LEAD_RECORD_SIZE


class Verdict(enum.Enum):
    FLAGGED = "Flagged"
    CLEAR = "Clear"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class HeuristicResult:
    verdict: Verdict
    score: float | None


@dataclass(frozen=True)
class DetectionConfig:
    """Thresholds for both heuristics.

    The window of 100 and the 37-value cut separate simulated DGA sessions
    from simulated benign (Alexa) sessions in both transports; see the
    README for the measurements behind them.
    """

    min_packets: int = 100
    static_unique_threshold: int = 37
    dot_97_fraction_band: tuple[float, float] = (0.45, 0.55)
    alternation_threshold: float = 0.9
    attribution_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dot_97_fraction_band", tuple(float(v) for v in self.dot_97_fraction_band))
        if isinstance(self.min_packets, bool) or int(self.min_packets) != self.min_packets or self.min_packets < 8:
            raise ConfigError(f"min_packets must be an integer >= 8, got {self.min_packets}")
        if int(self.static_unique_threshold) != self.static_unique_threshold or not (
            1 <= self.static_unique_threshold <= self.min_packets
        ):
            raise ConfigError("static_unique_threshold must be an integer in [1, min_packets]")
        lo, hi = self.dot_97_fraction_band if len(self.dot_97_fraction_band) == 2 else (1.0, 0.0)
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError(f"dot_97_fraction_band must satisfy 0 <= lo <= hi <= 1, got {self.dot_97_fraction_band}")
        if not 0.0 <= self.alternation_threshold <= 1.0:
            raise ConfigError("alternation_threshold must lie in [0, 1]")


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_value(key: str, text: str):
    try:
        if key in ("min_packets", "static_unique_threshold"):
            return int(text)
        if key == "alternation_threshold":
            return float(text)
        if key == "dot_97_fraction_band":
            parts = [p for p in text.replace(",", " ").split() if p]
            if len(parts) != 2:
                raise ValueError("expected two numbers")
            return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"bad value for {key}: {text!r} (expected true or false)")


def parse_detection_config(text: str, base: DetectionConfig | None = None) -> DetectionConfig:
    """Apply ``key = value`` lines to `base` (defaults if omitted).

    Blank lines and ``#`` comments are ignored. Unknown keys are rejected so
    that a misspelt threshold cannot silently fall back to its default.
    """
    known = {f.name for f in fields(DetectionConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; known keys are {sorted(known)}")
        if key in updates:
            raise ConfigError(f"line {lineno}: {key!r} set twice")
        updates[key] = _parse_value(key, value)
    return replace(base or DetectionConfig(), **updates)


def load_detection_config(path: str | os.PathLike) -> DetectionConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_detection_config(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {os.fspath(path)}: {exc.strerror}") from exc


def detect_dot_pattern(series: SizeSeries, config: DetectionConfig = DetectionConfig()) -> HeuristicResult:
    """Look for the alternating 97-byte lead record of DoT answers.

    The score is the fraction of entries equal to 97. The flow is flagged
    when that fraction lies in the configured band and nearly all 97s sit
    at odd positions (1st, 3rd, ...).
    """
    values = series.values
    if values.size < config.min_packets:
        return HeuristicResult(Verdict.INCONCLUSIVE, None)
    is_lead = values == DOT_LEAD_RECORD_SIZE
    n_lead = int(is_lead.sum())
    score = n_lead / values.size
    lo, hi = config.dot_97_fraction_band
    alternation = float(is_lead[0::2].sum()) / n_lead if n_lead else 0.0
    flagged = lo <= score <= hi and alternation >= config.alternation_threshold
    return HeuristicResult(Verdict.FLAGGED if flagged else Verdict.CLEAR, score)


def payload_count(series: SizeSeries) -> int:
    """Entries left once the 97-byte DoT lead records are removed."""
    return int(np.count_nonzero(series.values != DOT_LEAD_RECORD_SIZE))


def detect_static_length(series: SizeSeries, config: DetectionConfig = DetectionConfig()) -> HeuristicResult:
    """Flag flows whose most recent `min_packets` payload sizes take few distinct values.

    With ``u`` distinct sizes in the window, the score is
    ``1 - (u - 1) / (min_packets - 1)``: 1 for a single repeated size.
    """
    payload = series.values[series.values != DOT_LEAD_RECORD_SIZE]
    window = config.min_packets
    if payload.size < window:
        return HeuristicResult(Verdict.INCONCLUSIVE, None)
    u = int(np.unique(payload[-window:]).size)
    score = 1.0 - (u - 1) / (window - 1)
    flagged = u <= config.static_unique_threshold
    return HeuristicResult(Verdict.FLAGGED if flagged else Verdict.CLEAR, score)


@dataclass(frozen=True)
class RankedFamily:
    family: str
    distance: float


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of analysing one flow.

    `status` is ``"ok"`` or the name and message of the error that stopped
    the analysis; `notes` collects non-fatal remarks such as skipped
    attribution.
    """

    flow: FlowKey | None
    n_packets: int
    n_payload: int
    dot_pattern: HeuristicResult
    static_length: HeuristicResult
    covert_dns_suspected: bool
    attribution: tuple[RankedFamily, ...] | None = None
    min_obs_estimate: int | None = None
    status: str = "ok"
    notes: tuple[str, ...] = ()
    min_packets: int = field(default=DetectionConfig.min_packets, repr=False)

    def __post_init__(self):
        flagged = Verdict.FLAGGED in (self.dot_pattern.verdict, self.static_length.verdict)
        if self.covert_dns_suspected != flagged:
            raise AssertionError("covert_dns_suspected must equal 'some heuristic flagged'")
        if (self.dot_pattern.verdict is Verdict.INCONCLUSIVE) != (self.n_packets < self.min_packets):
            raise AssertionError("DoT verdict is inconclusive exactly when the flow is below min_packets")
        if (self.static_length.verdict is Verdict.INCONCLUSIVE) != (self.n_payload < self.min_packets):
            raise AssertionError("static-length verdict is inconclusive exactly when payload is below min_packets")

    @property
    def top_family(self) -> str | None:
        return self.attribution[0].family if self.attribution else None


def _skipped(config: DetectionConfig, flow: FlowKey | None, status: str) -> DetectionReport:
    empty = HeuristicResult(Verdict.INCONCLUSIVE, None)
    return DetectionReport(flow, 0, 0, empty, empty, False, status=status, min_packets=config.min_packets)


def analyze_series(
    series: SizeSeries,
    db: IocDatabase | None = None,
    config: DetectionConfig = DetectionConfig(),
    flow: FlowKey | None = None,
) -> DetectionReport:
    """Run both heuristics and, if possible, attribution on one size series."""
    dot = detect_dot_pattern(series, config)
    static = detect_static_length(series, config)
    suspected = Verdict.FLAGGED in (dot.verdict, static.verdict)
    notes: list[str] = []
    attribution = None
    min_obs = None
    if config.attribution_enabled and db is not None:
        try:
            candidate = build_ioc(series, config=db.config)
            ranked = match_ioc(candidate, db, db.config)
            attribution = tuple(RankedFamily(m.family, m.distance) for m in ranked)
        except (SeriesTooShort, SingularDesign, EmptySeries) as exc:
            notes.append(f"AttributionSkipped: {type(exc).__name__}: {exc}")
        else:
            try:
                min_obs = min_observations(series, db.entries[ranked[0].family], db.config)
            except (NotReached, SeriesTooShort) as exc:
                notes.append(f"MinObservationsUnavailable: {type(exc).__name__}: {exc}")
    return DetectionReport(
        flow=flow,
        n_packets=len(series),
        n_payload=payload_count(series),
        dot_pattern=dot,
        static_length=static,
        covert_dns_suspected=suspected,
        attribution=attribution,
        min_obs_estimate=min_obs,
        notes=tuple(notes),
        min_packets=config.min_packets,
    )


def analyze_flows(
    source,
    flt: FlowFilter,
    db: IocDatabase | None = None,
    config: DetectionConfig = DetectionConfig(),
) -> list[DetectionReport]:
    """One report per matching flow in a pcap, ordered by flow key.

    A capture without any matching packets yields a single report whose
    status carries the `EmptySeries` error.
    """
    flows = extract_flows(parse_pcap(source), flt)
    if not flows:
        return [_skipped(config, None, "EmptySeries: no resolver application-data packets matched the filter")]
    return [analyze_series(series, db, config, flow=key) for key, series in flows.items()]


def analyze(
    source,
    flt: FlowFilter | None = None,
    db: IocDatabase | None = None,
    config: DetectionConfig = DetectionConfig(),
) -> DetectionReport:
    """Analyse a pcap (path, bytes or stream) or an already extracted `SizeSeries`.

    For a pcap the first flow in key order is reported and the number of
    other flows is noted; use `analyze_flows` to get all of them.
    """
    if isinstance(source, SizeSeries):
        return analyze_series(source, db, config)
    if flt is None:
        raise ValueError("a FlowFilter is required when analysing a capture")
    reports = analyze_flows(source, flt, db, config)
    first = reports[0]
    if len(reports) > 1:
        first = replace(first, notes=first.notes + (f"{len(reports) - 1} further flow(s) not shown",))
    return first


def report_to_dict(report: DetectionReport) -> dict:
    """Plain, JSON-ready view of a report with a fixed key order."""
    flow = report.flow
    return {
        "flow": None if flow is None else {"client": flow[0], "resolver": flow[1], "port": flow[2]},
        "n_packets": report.n_packets,
        "n_payload": report.n_payload,
        "dot_pattern": {"verdict": report.dot_pattern.verdict.value, "score": report.dot_pattern.score},
        "static_length": {"verdict": report.static_length.verdict.value, "score": report.static_length.score},
        "covert_dns_suspected": report.covert_dns_suspected,
        "attribution": None
        if report.attribution is None
        else [{"family": r.family, "distance": r.distance} for r in report.attribution],
        "min_obs_estimate": report.min_obs_estimate,
        "status": report.status,
        "notes": list(report.notes),
    }

