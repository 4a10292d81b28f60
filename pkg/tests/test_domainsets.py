import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covertdns.domainsets import (
    DomainRecord,
    DomainSet,
    FamilyLengthModel,
    dump_domain_list,
    family_length_model,
    generate_parametric,
    length_distribution,
    length_stats,
    load_domain_list,
)
from covertdns.errors import EmptyDataset, InvalidModel, MalformedDomain
from covertdns.tables import DOMAIN_LENGTHS, FAMILIES


def test_load_counts_lengths():
    ds = load_domain_list(b"google.com\nfacebook.com", "Alexa")
    assert len(ds) == 2
    assert list(ds.lengths) == [10, 12]
    assert ds.family == "Alexa"


def test_load_normalises_and_skips():
    raw = b"# header\r\n\r\n  Example.COM  \r\nfoo.org\n#tail\n"
    ds = load_domain_list(io.BytesIO(raw), "x")
    assert ds.names == ["example.com", "foo.org"]


def test_load_only_comments_is_empty():
    with pytest.raises(EmptyDataset):
        load_domain_list(b"#comment\n\n", "x")


@pytest.mark.parametrize("line", [b"exa mple.com", b"nodot", b"a" * 250 + b".com"])
def test_load_rejects_malformed(line):
    with pytest.raises(MalformedDomain):
        load_domain_list(line + b"\n", "x")


def test_load_dedupe_flag():
    raw = b"a.com\nb.com\na.com\n"
    assert len(load_domain_list(raw, "x")) == 3
    assert load_domain_list(raw, "x", dedupe=True).names == ["a.com", "b.com"]


def test_load_from_path(tmp_path):
    path = tmp_path / "list.txt"
    path.write_bytes(b"abc.ru\n")
    assert load_domain_list(path, "x").names == ["abc.ru"]


def test_record_invariants():
    with pytest.raises(MalformedDomain):
        DomainRecord("", "x")
    assert DomainRecord("abc.ru", "x").length == 6
    with pytest.raises(EmptyDataset):
        DomainSet("x", ())


def test_length_stats_single_record():
    stats = length_stats(DomainSet("x", (DomainRecord("abc.ru", "x"),)))
    assert (stats.min, stats.max, stats.average, stats.stdev, stats.unique_count) == (6, 6, 6.0, 0.0, 1)


def test_length_stats_is_population_stdev():
    stats = length_stats([10, 12])
    assert stats.stdev == pytest.approx(1.0)


def test_pushdo_like_list_is_fixed_length():
    ds = generate_parametric(family_length_model("Pushdo"), 1000, 3)
    stats = length_stats(ds)
    assert (stats.min, stats.max, stats.stdev, stats.unique_count) == (11, 11, 0.0, 1)


def test_degenerate_model_every_length_equal():
    model = FamilyLengthModel("x", 11, 11, 11.0, 0.0)
    assert set(generate_parametric(model, 1000, 0).lengths) == {11}


def test_conficker_moments_close_to_table():
    row = DOMAIN_LENGTHS["Conficker"]
    stats = length_stats(generate_parametric(family_length_model("Conficker"), 1000, 0))
    assert abs(stats.average - row.average) <= 0.3
    assert abs(stats.stdev - row.stdev) <= 0.4


@pytest.mark.parametrize("family", FAMILIES)
def test_length_distribution_matches_row_moments(family):
    row = DOMAIN_LENGTHS[family]
    support, probs = length_distribution(family_length_model(family))
    mean = float(support @ probs)
    sd = float(np.sqrt(((support - mean) ** 2) @ probs))
    assert probs.sum() == pytest.approx(1.0)
    assert mean == pytest.approx(row.average, abs=0.05)
    assert sd == pytest.approx(row.stdev, abs=0.05)


def test_generation_is_deterministic():
    model = family_length_model("Goz")
    a = generate_parametric(model, 200, 42)
    b = generate_parametric(model, 200, 42)
    assert dump_domain_list(a) == dump_domain_list(b)
    assert dump_domain_list(generate_parametric(model, 200, 43)) != dump_domain_list(a)


def test_generated_names_use_alphabet_and_tld():
    model = FamilyLengthModel("x", 8, 12, 10.0, 1.0, alphabet="ab", tld=".net")
    for name in generate_parametric(model, 50, 1).names:
        assert name.endswith(".net")
        assert set(name[:-4]) <= {"a", "b"}


@pytest.mark.parametrize(
    "kwargs",
    [dict(min=12, max=10, average=11, stdev=1), dict(min=8, max=10, average=11, stdev=1), dict(min=8, max=10, average=9, stdev=-1)],
)
def test_invalid_models(kwargs):
    with pytest.raises(InvalidModel):
        generate_parametric(FamilyLengthModel("x", **kwargs), 10, 0)


def test_alexa_model_fits_short_names():
    model = family_length_model("Alexa")
    assert model.tld == ".io"
    assert length_stats(generate_parametric(model, 500, 1)).min >= 4


@given(st.lists(st.integers(1, 300), min_size=1, max_size=200))
def test_length_stats_invariants(lengths):
    s = length_stats(lengths)
    assert s.min <= s.average + 1e-9 and s.average <= s.max + 1e-9
    assert s.stdev >= 0
    assert s.unique_count <= s.max - s.min + 1
    assert (s.stdev == 0) == (s.unique_count == 1)


names = st.from_regex(r"[a-z0-9]{1,20}\.[a-z]{2,6}", fullmatch=True)


@given(st.lists(names, min_size=1, max_size=50))
def test_dump_load_round_trip(name_list):
    ds = DomainSet("x", tuple(DomainRecord(n, "x") for n in name_list))
    assert load_domain_list(dump_domain_list(ds), "x") == ds


@given(
    st.integers(6, 40).flatmap(
        lambda lo: st.tuples(st.just(lo), st.integers(lo, lo + 15), st.floats(0.0, 5.0), st.integers(0, 2**32))
    ),
    st.floats(0.0, 1.0),
)
def test_generated_lengths_within_bounds(params, frac):
    lo, hi, sd, seed = params
    model = FamilyLengthModel("x", lo, hi, lo + frac * (hi - lo), sd)
    lengths = generate_parametric(model, 50, seed).lengths
    assert lengths.min() >= lo and lengths.max() <= hi
