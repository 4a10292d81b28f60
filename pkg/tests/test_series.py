import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covertdns.errors import EmptySeries
from covertdns.series import SizeSeries, format_series, read_series


def test_basic_container():
    s = SizeSeries([97, 185, 97, 185], "Pushdo")
    assert len(s) == 4
    assert s[1] == 185
    assert s[1:3] == SizeSeries([185, 97], "Pushdo")
    with pytest.raises(ValueError):
        s.values[0] = 1


def test_rejects_bad_values():
    with pytest.raises(EmptySeries):
        SizeSeries([])
    with pytest.raises(ValueError):
        SizeSeries([1, -2])
    with pytest.raises(ValueError):
        SizeSeries([1, float("nan")])


def test_without():
    s = SizeSeries([97, 97, 97])
    with pytest.raises(EmptySeries):
        s.without([97])
    assert SizeSeries([97, 200, 97]).without([97]) == SizeSeries([200])


def test_read_series_reports_line():
    with pytest.raises(ValueError, match="line 2"):
        read_series("12\nabc\n")


@given(st.lists(st.integers(0, 65535), min_size=1, max_size=300))
def test_text_round_trip(values):
    s = SizeSeries(values, "x")
    assert read_series(format_series(s), "x") == s
    assert np.array_equal(s.as_ints(), values)
