import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textnorm.corpus import SELF, CorpusError, SemioticClass, Sentence, TokenRecord
from textnorm.evaluation import (
    ABSENT,
    ALL,
    REPORT_HEADER,
    UNDEFINED,
    AccuracyReport,
    AlignmentError,
    ClassScore,
    compare_runs,
    dump_errors,
    plot_comparison,
    plot_report,
    read_predictions,
    read_report,
    score_predictions,
    seen_unseen_scores,
    write_comparison,
    write_predictions,
    write_report,
)
from textnorm.synth import synthetic_corpus

M = SemioticClass.MEASURE
P = SemioticClass.PLAIN


def rec(cls, token, output):
    return TokenRecord(cls, token, tuple(output.split()))


def test_nine_of_ten():
    gold = [rec(P, f"w{i}", SELF) for i in range(10)]
    pred = [(SELF,)] * 9 + [("wrong",)]
    assert score_predictions(gold, pred)[ALL].accuracy == pytest.approx(0.9)


def test_exact_match_on_measure():
    gold = [rec(M, "6ft", "six feet")]
    assert score_predictions(gold, [("six", "feet")])[M].correct == 1
    assert score_predictions(gold, [("six", "foot")])[M].correct == 0


def test_self_expands_on_both_sides():
    gold = [rec(P, "baby", SELF), rec(P, "Ave", "avenue")]
    assert score_predictions(gold, [("baby",), (SELF,)])[ALL].correct == 1


def test_absent_prediction_is_dropped():
    gold = [rec(M, f"{i}kg", "x") for i in range(10)]
    r = score_predictions(gold, [("x",)] * 9 + [None])
    assert (r[M].n, r[M].dropped, r[M].accuracy) == (9, 1, 1.0)


def test_misaligned_predictions():
    with pytest.raises(AlignmentError):
        score_predictions([rec(P, "a", SELF)], [])


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from(list(SemioticClass)), st.booleans(), st.booleans()),
                max_size=40))
def test_report_invariants_and_round_trip(rows):
    gold = [rec(cls, f"t{i}", "x") for i, (cls, _, _) in enumerate(rows)]
    pred = [None if drop else (("x",) if ok else ("y",)) for _, ok, drop in rows]
    report = score_predictions(gold, pred)
    assert report.all.n == sum(s.n for s in report.classes.values())
    for _, s in report.rows():
        assert s.accuracy is None or 0 <= s.accuracy <= 1
    buf = io.StringIO()
    write_report(report, buf)
    buf.seek(0)
    assert read_report(buf) == report


def test_report_layout():
    buf = io.StringIO()
    write_report(score_predictions([rec(M, "1kg", "x")], [("x",)]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split("\t") == list(REPORT_HEADER)
    assert [ln.split("\t")[0] for ln in lines[1:]] == [ALL] + [c.value for c in SemioticClass]
    assert lines[1] == "ALL\t1\t1\t1.000\t0"
    assert f"PLAIN\t0\t0\t{UNDEFINED}\t0" in lines


def test_read_report_rejects_garbage():
    with pytest.raises(CorpusError):
        read_report(["not\ta\treport\n"])


def test_prediction_file_round_trip():
    gold = synthetic_corpus(300, seed=21)
    n = sum(len(s) for s in gold)
    pred = [None if i % 17 == 0 else ("w", str(i)) for i in range(n)]
    buf = io.StringIO()
    write_predictions(gold, pred, buf)
    assert ABSENT in buf.getvalue()
    buf.seek(0)
    gold_back, pred_back = read_predictions(buf)
    assert gold_back == gold and pred_back == pred
    assert score_predictions(gold_back, pred_back) == score_predictions(gold, pred)


def test_prediction_file_needs_four_columns():
    with pytest.raises(CorpusError):
        read_predictions(["PLAIN\ta\t<self>\n", "<eos>\n"])


# ---------------------------------------------------------------------------
# seen / unseen


def test_all_seen_leaves_unseen_undefined():
    train = [Sentence((rec(P, "a", SELF),))]
    su = seen_unseen_scores(train, train, [(SELF,)])
    assert su.unseen.n == 0 and su.unseen_accuracy is None


def test_seen_unseen_hand_case():
    train = [Sentence((rec(P, "a", SELF), rec(P, "b", SELF)))]
    gold = [Sentence((rec(P, "a", SELF), rec(P, "b", SELF), rec(P, "c", SELF),
                      rec(P, "d", SELF)))]
    su = seen_unseen_scores(train, gold, [(SELF,), (SELF,), (SELF,), ("no",)])
    assert (su.seen_accuracy, su.unseen_accuracy) == (1.0, 0.5)
    assert su.seen.n + su.unseen.n == 4


# ---------------------------------------------------------------------------
# comparisons


def report_with(**acc) -> AccuracyReport:
    r = AccuracyReport()
    for name, correct in acc.items():
        r.classes[SemioticClass.parse(name)] = ClassScore(1000, correct)
    return r


def test_identical_reports_have_zero_deltas():
    r = report_with(PLAIN=990, MEASURE=972)
    assert all(not d.changed for d in compare_runs(r, r))


def test_measure_gain_is_the_only_change():
    a = report_with(PLAIN=990, MEASURE=972, MONEY=950)
    b = report_with(PLAIN=990, MEASURE=993, MONEY=950)
    changed = [d for d in compare_runs(a, b) if d.changed and d.name != ALL]
    assert [d.name for d in changed] == ["MEASURE"]
    assert changed[0].delta == pytest.approx(0.021)


def test_money_gain():
    [d] = [d for d in compare_runs(report_with(MONEY=972), report_with(MONEY=1000))
           if d.name == "MONEY"]
    assert d.delta == pytest.approx(0.028)


def test_comparison_layout():
    buf = io.StringIO()
    write_comparison(compare_runs(report_with(MONEY=972), report_with(MONEY=1000)), buf)
    lines = buf.getvalue().splitlines()
    assert "MONEY\t1000\t0.972\t1000\t1.000\t+0.028\t*" in lines
    assert f"PLAIN\t0\t{UNDEFINED}\t0\t{UNDEFINED}\t{UNDEFINED}\t" in lines


def test_dump_errors():
    gold = [rec(M, "6ft", "six feet"), rec(P, "a", SELF)]
    buf = io.StringIO()
    assert dump_errors(gold, [("six", "foot"), None], buf) == 2
    assert "MEASURE\t6ft\tsix feet\tsix foot" in buf.getvalue()


def test_figures_are_written(tmp_path):
    a = report_with(PLAIN=990, MEASURE=972)
    b = report_with(PLAIN=990, MEASURE=993)
    for path in (plot_report(a, tmp_path / "r.png", "run"),
                 plot_comparison(compare_runs(a, b), tmp_path / "c.png")):
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
