"""The size series: ordered server-response frame sizes for one flow."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import EmptySeries


class SizeSeries:
    """Immutable ordered sequence of non-negative sizes with an optional family label."""

    __slots__ = ("_values", "label")

    def __init__(self, values: Iterable[float], label: str | None = None):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise EmptySeries("a size series needs at least one value")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("series values must be finite and non-negative")
        arr.setflags(write=False)
        self._values = arr
        self.label = label

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __iter__(self):
        return iter(self._values)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return SizeSeries(self._values[item], self.label)
        return self._values[item]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SizeSeries):
            return NotImplemented
        return self.label == other.label and np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash((self.label, self._values.tobytes()))

    def __repr__(self) -> str:
        head = ", ".join(f"{v:g}" for v in self._values[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SizeSeries([{head}{more}], n={len(self)}, label={self.label!r})"

    def without(self, exclude: Iterable[float]) -> "SizeSeries":
        """Copy with every value in `exclude` removed; raises EmptySeries if nothing is left."""
        exclude = list(exclude)
        if not exclude:
            return self
        keep = ~np.isin(self._values, exclude)
        if not keep.any():
            raise EmptySeries(f"no values left after excluding {sorted(exclude)}")
        return SizeSeries(self._values[keep], self.label)

    def as_ints(self) -> list[int]:
        return [int(round(v)) for v in self._values]


def read_series(text: str, label: str | None = None) -> SizeSeries:
    """Parse the one-integer-per-line series file format."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ValueError(f"line {lineno}: expected an integer byte count, got {line!r}") from None
    return SizeSeries(values, label)


def format_series(series: SizeSeries) -> str:
    return "".join(f"{v}\n" for v in series.as_ints())
