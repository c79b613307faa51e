import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textnorm.corpus import (
    NORM_CLOSE,
    NORM_OPEN,
    SELF,
    SIL,
    CorpusError,
    SemioticClass,
    Sentence,
    SplitSpec,
    TokenRecord,
    WindowedExample,
    downsample_trivial,
    extract_windows,
    overlap_report,
    parse_corpus,
    serialize_corpus,
    split_corpus,
)

CLASS_ORDER = ["PLAIN", "PUNCT", "DATE", "TRANS", "LETTERS", "CARDINAL", "VERBATIM",
                "MEASURE", "ORDINAL", "DECIMAL", "ELECTRONIC", "DIGIT", "MONEY", "FRACTION",
                "TIME", "ADDRESS"]


def sent(*tokens: str, output=(SELF,)) -> Sentence:
    return Sentence(tuple(TokenRecord(SemioticClass.PLAIN, t, output) for t in tokens))


def test_semiotic_classes_are_exactly_sixteen():
    assert [c.value for c in SemioticClass] == CLASS_ORDER
    with pytest.raises(ValueError):
        SemioticClass.parse("NUMBER")


def test_parse_measure_line():
    [s] = parse_corpus(io.StringIO("MEASURE\t6ft\tsix feet\n<eos>\n"))
    assert s.records == (TokenRecord(SemioticClass.MEASURE, "6ft", ("six", "feet")),)


def test_parse_empty_stream():
    assert parse_corpus(io.StringIO("")) == []


def test_parse_punctuation_silence():
    [s] = parse_corpus(["PUNCT\t.\tsil\n", "<eos>\n"])
    assert s[0].output == (SIL,)


@pytest.mark.parametrize("line", [
    "MEASURE\t6ft\n",
    "NUMBER\t6\tsix\n",
    "PLAIN\t\t<self>\n",
    "PLAIN\tx\t\n",
    "PUNCT\t.\tsil sil\n",
    "PLAIN\tx\t<self> x\n",
])
def test_parse_errors_carry_line_numbers(line):
    with pytest.raises(CorpusError) as exc:
        parse_corpus(["PLAIN\ta\t<self>\n", line, "<eos>\n"])
    assert exc.value.lineno == 2


def test_parse_requires_terminator():
    with pytest.raises(CorpusError):
        parse_corpus(["PLAIN\ta\t<self>\n"])


def test_internal_space_token_survives():
    [s] = parse_corpus(["CARDINAL\t100 000\tone hundred thousand\n", "<eos>\n"])
    assert s[0].input == "100 000"


record_st = st.builds(
    TokenRecord,
    st.sampled_from(list(SemioticClass)),
    st.text(st.characters(blacklist_characters="\t\n\r", blacklist_categories=("Cs",)),
            min_size=1).filter(lambda t: t != "<eos>"),
    st.one_of(st.just((SELF,)), st.just((SIL,)),
              st.lists(st.from_regex(r"[a-z_]{1,8}", fullmatch=True), min_size=1,
                       max_size=4).map(tuple)),
)
corpus_st = st.lists(st.lists(record_st, min_size=1, max_size=5).map(
    lambda rs: Sentence(tuple(rs))), max_size=5)


@settings(max_examples=200)
@given(corpus_st)
def test_serialize_parse_round_trip(sentences):
    buf = io.StringIO()
    serialize_corpus(sentences, buf)
    buf.seek(0)
    assert parse_corpus(buf) == sentences


# ---------------------------------------------------------------------------
# splitting


def test_split_draws_test_slice_from_final_file():
    files = [[sent(f"f{i}a", f"f{i}b")] * 3 for i in range(100)]
    spec = SplitSpec(frozenset(range(90)), frozenset(range(90, 95)),
                     frozenset(range(95, 100)), test_token_limit=100_000)
    out = split_corpus(files, spec)
    assert len(out.train) == 270 and len(out.dev) == 15
    assert out.test == files[99]


def test_split_keeps_boundary_sentence_whole():
    files = [[sent("a", "b", "c"), sent("d", "e", "f"), sent("g")]]
    spec = SplitSpec(frozenset(), frozenset(), frozenset({0}), test_token_limit=4)
    out = split_corpus(files, spec)
    assert out.test == files[0][:2]


def test_split_rejects_overlap():
    with pytest.raises(ValueError):
        split_corpus([[sent("a")]], SplitSpec(frozenset({0}), frozenset({0}), frozenset({0})))


def test_split_zero_limit_gives_empty_test():
    out = split_corpus([[sent("a")], [sent("b")]],
                       SplitSpec(frozenset({0}), frozenset(), frozenset({1}), 0))
    assert out.test == []


def test_split_rejects_out_of_range():
    with pytest.raises(ValueError):
        split_corpus([[sent("a")]], SplitSpec(frozenset({3}), frozenset(), frozenset()))


def test_contiguous_spec():
    spec = SplitSpec.contiguous(100)
    assert spec.train_files == frozenset(range(90))
    assert spec.dev_files == frozenset(range(90, 95))
    assert spec.test_files == frozenset(range(95, 100))


# ---------------------------------------------------------------------------
# windows


def king_ave() -> Sentence:
    recs = [TokenRecord(SemioticClass.PLAIN, w, (SELF,)) for w in ["I", "live", "at"]]
    recs.append(TokenRecord(SemioticClass.ADDRESS, "123", ("one", "twenty", "three")))
    recs += [TokenRecord(SemioticClass.PLAIN, "King", (SELF,)),
             TokenRecord(SemioticClass.PLAIN, "Ave", ("avenue",)),
             TokenRecord(SemioticClass.PUNCT, ".", (SIL,))]
    return Sentence(tuple(recs))


def test_window_around_address():
    ex = extract_windows(king_ave())[3]
    assert ex.source == "I live at <norm> 123 </norm> King Ave ."
    assert ex.target == ("one", "twenty", "three")


def test_single_record_window_has_no_context():
    [ex] = extract_windows(sent("tok"))
    assert ex.source == "<norm> tok </norm>"


def test_zero_width_windows():
    for ex in extract_windows(king_ave(), width=0):
        assert ex.source == f"{NORM_OPEN} {ex.token} {NORM_CLOSE}"


def test_source_symbols_keep_tags_atomic():
    ex = WindowedExample(("a",), "12", (), ("twelve",))
    assert ex.source_symbols() == ["a", " ", NORM_OPEN, " ", "1", "2", " ", NORM_CLOSE]


@given(st.lists(st.from_regex(r"[A-Za-z0-9.]{1,6}", fullmatch=True), min_size=1, max_size=12),
       st.integers(0, 5))
def test_windows_cover_every_token(tokens, width):
    s = sent(*tokens)
    windows = extract_windows(s, width)
    assert len(windows) == len(s)
    for i, ex in enumerate(windows):
        symbols = ex.source_symbols()
        assert symbols.count(NORM_OPEN) == 1 and symbols.count(NORM_CLOSE) == 1
        inner = symbols[symbols.index(NORM_OPEN) + 2:symbols.index(NORM_CLOSE) - 1]
        assert "".join(inner) == tokens[i]
        assert len(ex.left) == min(width, i)
        assert len(ex.right) == min(width, len(tokens) - i - 1)


# ---------------------------------------------------------------------------
# downsampling


def trivial(n: int) -> list[WindowedExample]:
    return [WindowedExample((), f"w{i}", (), (SELF,)) for i in range(n)]


def test_downsample_keep_all():
    ex = trivial(20) + [WindowedExample((), "5", (), ("five",))]
    assert downsample_trivial(ex, 1.0, seed=3) == ex


def test_downsample_keep_none_leaves_nontrivial():
    ex = trivial(20) + [WindowedExample((), "5", (), ("five",))]
    assert downsample_trivial(ex, 0.0, seed=3) == ex[-1:]


def test_downsample_rate_pinned():
    kept = downsample_trivial(trivial(10_000), 0.1, seed=0)
    assert 800 <= len(kept) <= 1200
    assert len(kept) == 1003


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_downsample_deterministic_and_ordered(seed, rate):
    ex = trivial(50)
    a = downsample_trivial(ex, rate, seed)
    assert a == downsample_trivial(ex, rate, seed)
    idx = [ex.index(x) for x in a]
    assert idx == sorted(idx)


def test_downsample_rejects_bad_rate():
    with pytest.raises(ValueError):
        downsample_trivial([], 1.5)


# ---------------------------------------------------------------------------
# overlap


def test_overlap_subset():
    assert overlap_report([sent("a", "b")], [sent("a")]).seen_fraction == 1.0


def test_overlap_disjoint():
    assert overlap_report([sent("a")], [sent("z")]).seen_fraction == 0.0


def test_overlap_hand_count():
    r = overlap_report([sent("a", "b")], [sent("a", "a", "c")])
    assert (r.seen_count, r.unseen_count) == (2, 1)
    assert r.seen_fraction == pytest.approx(2 / 3)
