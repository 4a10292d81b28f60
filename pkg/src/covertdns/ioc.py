"""AR fingerprints as indicators of compromise: building, storing and comparing them.

Besides the fingerprint database this module carries the one-way ANOVA
and Duncan's multiple range test used to show that families separate by
response size at all.
"""

from __future__ import annotations

import json
import math
import os
from importlib import resources
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import studentized
from .errors import (
    ConfigMismatch,
    DegenerateGroups,
    DuplicateFamily,
    EmptyDatabase,
    IoFailure,
    NotReached,
    SchemaViolation,
    SeriesTooShort,
    SingularDesign,
    ZeroWithinVariance,
)
from .series import SizeSeries
from .tables import DOT_LEAD_RECORD_SIZE
from .tsa import DEFAULT_LAMBDA, DEFAULT_ORDER, ArmaIoc, fit_ar, hp_filter, min_length_for_ar

STABILITY_STEPS = 5


@dataclass(frozen=True)
class IocConfig:
    """How a fingerprint is derived from a size series."""

    lam: float = DEFAULT_LAMBDA
    order: int = DEFAULT_ORDER
    use_trend: bool = True
    exclude: tuple[float, ...] = (float(DOT_LEAD_RECORD_SIZE),)

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "exclude", tuple(sorted({float(v) for v in self.exclude})))
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be a finite non-negative number, got {self.lam}")
        if isinstance(self.order, bool) or int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order}")
        object.__setattr__(self, "order", int(self.order))


def _prepare(series: SizeSeries, config: IocConfig) -> np.ndarray:
    kept = series.without(config.exclude) if config.exclude else series
    return kept.values


def _fit_values(values: np.ndarray, family: str | None, config: IocConfig) -> ArmaIoc:
    if config.use_trend:
        values = hp_filter(values, config.lam).trend
    return fit_ar(values, order=config.order, family=family)


def build_ioc(series: SizeSeries, family: str | None = None, config: IocConfig = IocConfig()) -> ArmaIoc:
    """Fingerprint one size series: drop excluded sizes, optionally take the HP trend, fit AR.

    >>> s = SizeSeries([97, 200, 97, 211, 97, 203, 97, 217, 97, 190, 97, 208, 97, 199,
    ...                 97, 214, 97, 201, 97, 195, 97, 222, 97, 206, 97, 193])
    >>> build_ioc(s, "x", IocConfig(use_trend=False)).n_obs
    9
    """
    label = family if family is not None else series.label
    return _fit_values(_prepare(series, config), label, config)


class IocDatabase:
    """Immutable set of fingerprints keyed by family, all built under one `IocConfig`."""

    def __init__(self, config: IocConfig, entries: Iterable[ArmaIoc] = ()):
        table: dict[str, ArmaIoc] = {}
        for entry in entries:
            if not entry.family:
                raise ValueError("database entries need a family label")
            if entry.family in table:
                raise DuplicateFamily(f"family {entry.family!r} appears twice")
            if entry.order != config.order:
                raise ConfigMismatch(f"entry {entry.family!r} has order {entry.order}, database uses {config.order}")
            table[entry.family] = entry
        self._config = config
        self._entries = MappingProxyType(dict(sorted(table.items())))

    @property
    def config(self) -> IocConfig:
        return self._config

    @property
    def entries(self) -> Mapping[str, ArmaIoc]:
        return self._entries

    @property
    def families(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def with_entry(self, entry: ArmaIoc, replace: bool = False) -> "IocDatabase":
        """Copy of this database with `entry` added (or swapped in when `replace`)."""
        others = [e for f, e in self._entries.items() if not (replace and f == entry.family)]
        return IocDatabase(self._config, others + [entry])

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IocDatabase):
            return NotImplemented
        return self._config == other._config and dict(self._entries) == dict(other._entries)

    __hash__ = None

    def __repr__(self) -> str:
        return f"IocDatabase({self._config!r}, families={list(self._entries)})"


class Match(NamedTuple):
    family: str
    distance: float
    t_stats: tuple[float, ...]


def _standardized_gap(a: ArmaIoc, b: ArmaIoc) -> np.ndarray:
    pooled = np.hypot(a.errors, b.errors)
    diff = a.coefficients - b.coefficients
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(pooled > 0, diff / np.where(pooled > 0, pooled, 1.0), np.where(diff == 0, 0.0, np.inf))
    return t


def match_ioc(candidate: ArmaIoc, db: IocDatabase, config: IocConfig | None = None) -> list[Match]:
    """Rank database families by standardized distance to `candidate`.

    The distance is the Euclidean norm of the per-coefficient t statistics
    ``(a - b) / sqrt(se_a**2 + se_b**2)``. Equal distances are ordered by
    family label. Passing the `config` the candidate was built with lets the
    database reject fingerprints built differently.
    """
    if len(db) == 0:
        raise EmptyDatabase("the IoC database has no entries")
    if config is not None and config != db.config:
        raise ConfigMismatch(f"candidate built with {config}, database uses {db.config}")
    if candidate.order != db.config.order:
        raise ConfigMismatch(f"candidate has order {candidate.order}, database uses {db.config.order}")
    ranked = []
    for family, entry in db.entries.items():
        t = _standardized_gap(candidate, entry)
        ranked.append(Match(family, float(np.sqrt(np.sum(t * t))), tuple(float(v) for v in t)))
    ranked.sort(key=lambda m: (m.distance, m.family))
    return ranked


def min_observations(series: SizeSeries, reference: ArmaIoc, config: IocConfig = IocConfig()) -> int:
    """Shortest prefix whose fingerprint agrees with `reference`, coefficient by coefficient.

    A prefix of length ``n`` (counted after exclusion) agrees when each
    reference coefficient lies inside the prefix fit's two-sided 95%
    t interval. The returned ``n`` must agree and so must the next
    ``STABILITY_STEPS`` lengths that the series allows.

    Raises
    ------
    NotReached
        If no prefix length satisfies the criterion.
    """
    values = _prepare(series, config)
    if values.size < 2 * reference.order:
        raise SeriesTooShort(f"need at least {2 * reference.order} observations, got {values.size}")
    start = min_length_for_ar(config.order)
    target = reference.coefficients

    def agrees(n: int) -> bool:
        try:
            fit = _fit_values(values[:n], None, config)
        except (SingularDesign, SeriesTooShort):
            return False
        half_width = stats.t.ppf(0.975, fit.df_resid) * fit.errors
        return bool(np.all(np.abs(fit.coefficients - target) <= half_width))

    cache: dict[int, bool] = {}

    def cached(n: int) -> bool:
        if n not in cache:
            cache[n] = agrees(n)
        return cache[n]

    for n in range(start, values.size + 1):
        last = min(n + STABILITY_STEPS, values.size)
        if all(cached(m) for m in range(n, last + 1)):
            return n
    raise NotReached("no prefix length reproduces the reference coefficients")


# --- one-way ANOVA and Duncan's multiple range test ----------------------------------


@dataclass(frozen=True)
class AnovaResult:
    ss_between: float
    ss_within: float
    ss_total: float
    df_between: int
    df_within: int
    df_total: int
    ms_between: float
    ms_within: float
    f_stat: float
    p_value: float


def _check_groups(groups: Sequence[tuple[str, Sequence[float]]]) -> list[tuple[str, np.ndarray]]:
    if len(groups) < 2:
        raise DegenerateGroups(f"ANOVA needs at least 2 groups, got {len(groups)}")
    labels = [label for label, _ in groups]
    if len(set(labels)) != len(labels):
        raise ValueError("group labels must be unique")
    out = []
    for label, sample in groups:
        arr = np.asarray(sample, dtype=float).ravel()
        if arr.size < 2:
            raise DegenerateGroups(f"group {label!r} has {arr.size} samples, need at least 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"group {label!r} has non-finite samples")
        out.append((label, arr))
    return out


def anova(groups: Sequence[tuple[str, Sequence[float]]]) -> AnovaResult:
    """One-way fixed-effects ANOVA over labelled samples."""
    checked = _check_groups(groups)
    samples = [arr for _, arr in checked]
    stacked = np.concatenate(samples)
    grand = stacked.mean()
    means = [arr.mean() for arr in samples]
    ss_within = float(sum(((arr - m) ** 2).sum() for arr, m in zip(samples, means)))
    ss_between = float(sum(arr.size * (m - grand) ** 2 for arr, m in zip(samples, means)))
    ss_total = float(((stacked - grand) ** 2).sum())
    df_between = len(samples) - 1
    df_within = stacked.size - len(samples)
    if ss_within <= 1e-13 * max(ss_total, np.finfo(float).tiny):
        raise ZeroWithinVariance("every group is constant; the F statistic is undefined")
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    f_stat = ms_between / ms_within
    return AnovaResult(
        ss_between=ss_between,
        ss_within=ss_within,
        ss_total=ss_total,
        df_between=df_between,
        df_within=df_within,
        df_total=stacked.size - 1,
        ms_between=ms_between,
        ms_within=ms_within,
        f_stat=f_stat,
        p_value=float(stats.f.sf(f_stat, df_between, df_within)),
    )


@dataclass(frozen=True)
class Grouping:
    """Families partitioned into clusters; clusters and members ordered by mean."""

    clusters: tuple[tuple[str, ...], ...]
    means: Mapping[str, float] = field(default_factory=dict, compare=False)

    def cluster_of(self, label: str) -> int:
        for i, members in enumerate(self.clusters):
            if label in members:
                return i
        raise KeyError(label)

    def __len__(self) -> int:
        return len(self.clusters)


def least_significant_ranges(k: int, df_within: int, ms_within: float, n_h: float, alpha: float) -> np.ndarray:
    """Duncan's critical ranges ``R_p`` for spans ``p = 2..k`` (index ``p - 2``)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    scale = math.sqrt(ms_within / n_h)
    return np.array([studentized.ppf((1.0 - alpha) ** (p - 1), p, float(df_within)) * scale for p in range(2, k + 1)])


def duncan_grouping(groups: Sequence[tuple[str, Sequence[float]]], alpha: float = 0.05) -> Grouping:
    """Cluster groups with Duncan's multiple range test.

    Means are sorted and cut into consecutive blocks. Each block is the
    longest run in which no pair of means differs by more than the
    critical range for its span. Unequal group sizes use the harmonic
    mean size.
    """
    result = anova(groups)
    checked = _check_groups(groups)
    means = {label: float(arr.mean()) for label, arr in checked}
    order = sorted(means, key=lambda lab: (means[lab], lab))
    sizes = np.array([arr.size for _, arr in checked], dtype=float)
    n_h = len(sizes) / float(np.sum(1.0 / sizes))
    ranges = least_significant_ranges(len(order), result.df_within, result.ms_within, n_h, alpha)
    values = [means[lab] for lab in order]

    clusters: list[tuple[str, ...]] = []
    start = 0
    for j in range(1, len(order) + 1):
        if j == len(order) or any(values[j] - values[i] > ranges[j - i - 1] for i in range(start, j)):
            clusters.append(tuple(order[start:j]))
            start = j
    return Grouping(tuple(clusters), MappingProxyType(means))


# --- persistence -----------------------------------------------------------------------

_CONFIG_KEYS = {"lambda", "order", "use_trend", "exclude"}
_ENTRY_KEYS = {"family", "constant", "lags", "std_errors", "p_values", "n_obs"}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number_list(obj, key: str, length: int, where: str) -> list[float]:
    seq = obj.get(key)
    if not isinstance(seq, list) or len(seq) != length or not all(_is_number(v) for v in seq):
        raise SchemaViolation(f"{where}: {key!r} must be a list of {length} numbers")
    return [float(v) for v in seq]


def db_to_dict(db: IocDatabase) -> dict:
    cfg = db.config
    return {
        "config": {"lambda": cfg.lam, "order": cfg.order, "use_trend": cfg.use_trend, "exclude": list(cfg.exclude)},
        "entries": [
            {
                "family": e.family,
                "constant": e.constant,
                "lags": list(e.lags),
                "std_errors": list(e.std_errors),
                "p_values": list(e.p_values),
                "n_obs": e.n_obs,
            }
            for e in db.entries.values()
        ],
    }


def db_from_dict(doc) -> IocDatabase:
    if not isinstance(doc, dict) or set(doc) != {"config", "entries"}:
        raise SchemaViolation("database must be an object with exactly 'config' and 'entries'")
    raw_cfg = doc["config"]
    if not isinstance(raw_cfg, dict) or set(raw_cfg) != _CONFIG_KEYS:
        raise SchemaViolation(f"config must have exactly the keys {sorted(_CONFIG_KEYS)}")
    if not _is_number(raw_cfg["lambda"]) or not isinstance(raw_cfg["order"], int) or isinstance(raw_cfg["order"], bool):
        raise SchemaViolation("config: 'lambda' must be a number and 'order' an integer")
    if not isinstance(raw_cfg["use_trend"], bool):
        raise SchemaViolation("config: 'use_trend' must be a boolean")
    exclude = raw_cfg["exclude"]
    if not isinstance(exclude, list) or not all(_is_number(v) for v in exclude):
        raise SchemaViolation("config: 'exclude' must be a list of numbers")
    try:
        config = IocConfig(lam=raw_cfg["lambda"], order=raw_cfg["order"], use_trend=raw_cfg["use_trend"], exclude=exclude)
    except ValueError as exc:
        raise SchemaViolation(f"config: {exc}") from None

    if not isinstance(doc["entries"], list):
        raise SchemaViolation("'entries' must be a list")
    entries = []
    for i, raw in enumerate(doc["entries"]):
        where = f"entries[{i}]"
        if not isinstance(raw, dict) or set(raw) != _ENTRY_KEYS:
            missing = _ENTRY_KEYS - set(raw) if isinstance(raw, dict) else _ENTRY_KEYS
            raise SchemaViolation(f"{where}: expected keys {sorted(_ENTRY_KEYS)}; missing {sorted(missing)}")
        if not isinstance(raw["family"], str) or not raw["family"]:
            raise SchemaViolation(f"{where}: 'family' must be a non-empty string")
        if not _is_number(raw["constant"]):
            raise SchemaViolation(f"{where}: 'constant' must be a number")
        if not isinstance(raw["n_obs"], int) or isinstance(raw["n_obs"], bool) or raw["n_obs"] < 1:
            raise SchemaViolation(f"{where}: 'n_obs' must be a positive integer")
        try:
            entries.append(
                ArmaIoc(
                    constant=float(raw["constant"]),
                    lags=_number_list(raw, "lags", config.order, where),
                    std_errors=_number_list(raw, "std_errors", config.order + 1, where),
                    p_values=_number_list(raw, "p_values", config.order + 1, where),
                    n_obs=raw["n_obs"],
                    family=raw["family"],
                )
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SchemaViolation):
                raise
            raise SchemaViolation(f"{where}: {exc}") from None
    return IocDatabase(config, entries)


def save_db(db: IocDatabase, sink) -> None:
    """Write `db` as JSON to a path or text stream. Floats keep full precision."""
    text = json.dumps(db_to_dict(db), indent=2, allow_nan=False) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        try:
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {os.fspath(sink)}: {exc.strerror}") from exc
    else:
        sink.write(text)


def load_db(source) -> IocDatabase:
    """Read a database written by `save_db` from a path or text stream."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoFailure(f"cannot read {os.fspath(source)}: {exc.strerror}") from exc
    else:
        text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from None
    return db_from_dict(doc)


def load_demo_db() -> IocDatabase:
    """The small DoH database shipped with the package (one simulated session per family)."""
    with resources.files("covertdns").joinpath("data/demo_ioc_db.json").open("r", encoding="utf-8") as fh:
        return load_db(fh)
