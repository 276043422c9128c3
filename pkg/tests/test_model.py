import pytest
from hypothesis import given, strategies as st

from genobank.model import (
    DuplicateContig,
    Genotype,
    GlobalInterval,
    InvalidCell,
    NonPositiveLength,
    PositionOutOfRange,
    SampleRegistry,
    UnknownContig,
    VariantCall,
    build_contig_map,
    genotype_count,
)


class TestContigMap:
    def test_single_contig(self):
        m = build_contig_map([("1", 249_000_000)])
        assert m.offset("1") == 0
        assert m.total_columns == 249_000_000

    def test_prefix_sum_offsets(self, two_contig_map):
        assert two_contig_map.offset("2") == 249_000_000
        assert two_contig_map.total_columns == 492_000_000

    def test_duplicate_contig_rejected(self):
        with pytest.raises(DuplicateContig):
            build_contig_map([("1", 10), ("1", 20)])

    def test_non_positive_length_rejected(self):
        with pytest.raises(NonPositiveLength):
            build_contig_map([("1", 0)])

    def test_to_global(self, two_contig_map):
        assert two_contig_map.to_global("1", 100000222) == 100000222
        assert two_contig_map.to_global("2", 10) == 249_000_010

    def test_to_global_unknown_contig(self, two_contig_map):
        with pytest.raises(UnknownContig):
            two_contig_map.to_global("MT", 5)

    def test_to_global_out_of_range(self, two_contig_map):
        with pytest.raises(PositionOutOfRange):
            two_contig_map.to_global("1", 249_000_000)

    def test_from_global(self, two_contig_map):
        assert two_contig_map.from_global(249_000_010) == ("2", 10)
        assert two_contig_map.from_global(0) == ("1", 0)

    def test_from_global_out_of_range(self, two_contig_map):
        with pytest.raises(PositionOutOfRange):
            two_contig_map.from_global(two_contig_map.total_columns)

    def test_json_round_trip(self, two_contig_map):
        from genobank.model import ContigMap

        assert ContigMap.from_json(two_contig_map.to_json()) == two_contig_map


@st.composite
def contig_positions(draw):
    lengths = draw(st.lists(st.integers(1, 10_000), min_size=1, max_size=6))
    entries = [(f"c{i}", n) for i, n in enumerate(lengths)]
    i = draw(st.integers(0, len(entries) - 1))
    pos = draw(st.integers(0, lengths[i] - 1))
    return entries, entries[i][0], pos


@given(contig_positions())
def test_global_round_trip(case):
    entries, contig, pos = case
    m = build_contig_map(entries)
    assert m.from_global(m.to_global(contig, pos)) == (contig, pos)


@given(contig_positions())
def test_to_global_monotone(case):
    entries, contig, pos = case
    m = build_contig_map(entries)
    g = m.to_global(contig, pos)
    if pos > 0:
        assert m.to_global(contig, pos - 1) == g - 1
    assert 0 <= g < m.total_columns


class TestSampleRegistry:
    def test_bijection(self):
        reg = SampleRegistry(("a", "b", "c"))
        assert reg.row_of("b") == 1
        assert reg.name_of(2) == "c"
        assert len(reg) == 3

    def test_duplicate_names_rejected(self):
        with pytest.raises(Exception):
            SampleRegistry(("a", "a"))


class TestGenotypeCount:
    def test_single_alt(self):
        assert genotype_count(1) == 3

    def test_no_alt(self):
        assert genotype_count(0) == 1

    def test_two_alts_matches_enumeration(self):
        # oracle: enumerate unordered pairs over alleles {0, 1, 2}
        pairs = {(min(a, b), max(a, b)) for a in range(3) for b in range(3)}
        assert genotype_count(2) == len(pairs) == 6


def _cell(**kw):
    defaults = dict(
        row=0, interval=GlobalInterval(5, 5), ref="C", alt=("T",),
        gt=Genotype(0, 1), pl=(641, 0, 480), ad=(19, 23), dp=43,
    )
    defaults.update(kw)
    return VariantCall(**defaults)


class TestVariantCall:
    def test_valid(self):
        cell = _cell()
        assert str(cell.gt) == "0/1"

    def test_alt_equal_ref_rejected(self):
        with pytest.raises(InvalidCell):
            _cell(alt=("C",))

    def test_gt_index_out_of_range(self):
        with pytest.raises(InvalidCell):
            _cell(gt=Genotype(0, 2))

    def test_ad_length(self):
        with pytest.raises(InvalidCell):
            _cell(ad=(19, 23, 1))

    def test_pl_length(self):
        with pytest.raises(InvalidCell):
            _cell(pl=(641, 0))

    def test_negative_dp(self):
        with pytest.raises(InvalidCell):
            _cell(dp=-1)

    def test_missing_format_fields_allowed(self):
        cell = _cell(pl=None, ad=None, dp=None)
        assert cell.pl is None and cell.ad is None and cell.dp is None

    def test_symbolic_alt_rejected(self):
        with pytest.raises(InvalidCell):
            _cell(alt=("<DEL>",))

    def test_json_round_trip(self):
        cell = _cell()
        assert VariantCall.from_json(cell.to_json()) == cell


@given(
    alt_count=st.integers(1, 3),
    gt_a=st.integers(-1, 4),
    gt_b=st.integers(-1, 4),
    ad_len=st.integers(0, 6),
    pl_len=st.integers(0, 12),
)
def test_variant_call_validation_is_exact(alt_count, gt_a, gt_b, ad_len, pl_len):
    alts = tuple("ACGT"[i] * (i + 2) for i in range(alt_count))
    should_fail = (
        not (0 <= gt_a <= alt_count)
        or not (0 <= gt_b <= alt_count)
        or ad_len != 1 + alt_count
        or pl_len != genotype_count(alt_count)
    )
    try:
        VariantCall(
            row=0, interval=GlobalInterval(0, 0), ref="A", alt=alts,
            gt=Genotype(gt_a, gt_b), pl=tuple(range(pl_len)),
            ad=tuple(range(ad_len)), dp=1,
        )
        failed = False
    except InvalidCell:
        failed = True
    assert failed == should_fail
