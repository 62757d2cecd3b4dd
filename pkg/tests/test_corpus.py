import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probcascade.corpus import (
    Document,
    IdfTable,
    corpus_from_documents,
    format_document,
    parse_corpus,
    tfidf_transform,
)
from probcascade.errors import EmptyCorpus, MalformedLine, NegativeValue, NonLeafLabel, NonMonotoneFeatureIds

from oracles import tfidf_oracle


def rows(c):
    return [dict(d.features) for d in c.documents]


class TestParse:
    def test_counts(self):
        c = parse_corpus(["3 0:2 5:1", "4 0:1"])
        assert len(c) == 2
        assert c.df(0) == 2 and c.df(5) == 1
        assert c.num_features == 6
        assert c.labels.tolist() == [3, 4]
        assert rows(c) == [{0: 2.0, 5: 1.0}, {0: 1.0}]

    def test_empty(self):
        c = parse_corpus([])
        assert len(c) == 0
        assert c.num_features == 0

    def test_non_monotone(self):
        with pytest.raises(NonMonotoneFeatureIds) as exc:
            parse_corpus(["3 5:1 0:2"])
        assert exc.value.line_no == 1

    def test_repeated_feature_is_non_monotone(self):
        with pytest.raises(NonMonotoneFeatureIds):
            parse_corpus(["3 1:1 1:2"])

    def test_negative_value(self):
        with pytest.raises(NegativeValue) as exc:
            parse_corpus(["3 0:1", "4 2:-1"])
        assert exc.value.line_no == 2

    @pytest.mark.parametrize("line", ["x 0:1", "3 0-1", "3 0:1.5", "3 a:1", "-2 0:1"])
    def test_malformed(self, line):
        with pytest.raises(MalformedLine) as exc:
            parse_corpus(["1 0:1", line])
        assert exc.value.line_no == 2

    def test_unlabeled_and_featureless_lines(self):
        c = parse_corpus(["0:1 3:2", "7", ""])
        assert [d.label for d in c.documents] == [None, 7]
        assert rows(c)[1] == {}

    def test_zero_count_not_counted_in_df(self):
        c = parse_corpus(["1 0:0 1:1"])
        assert c.df(0) == 0 and c.df(1) == 1

    def test_format_round_trip(self):
        lines = ["3 0:2 5:1", "4 0:1", "2"]
        c = parse_corpus(lines)
        again = [format_document(d.label, sorted((f, int(v)) for f, v in d.features.items())) for d in c.documents]
        assert again == lines

    def test_label_check(self, arts_health):
        parse_corpus(["3 0:1", "6 1:1"]).check_labels(arts_health)
        with pytest.raises(NonLeafLabel):
            parse_corpus(["1 0:1"]).check_labels(arts_health)


class TestTfidf:
    def test_feature_in_every_document_vanishes(self):
        c = tfidf_transform(parse_corpus(["1 0:3 1:1", "2 0:1", "3 0:5 2:2"]))
        for d in c.documents:
            assert 0 not in d.features

    def test_single_component_normalizes_to_one(self):
        c = tfidf_transform(corpus_from_documents([Document({0: 1}), Document({1: 1})]))
        assert rows(c)[0] == {0: 1.0}

    def test_three_doc_oracle(self):
        docs = [{0: 2, 1: 1}, {0: 1}, {1: 3}]
        got = rows(tfidf_transform(corpus_from_documents([Document(d) for d in docs])))
        expected = tfidf_oracle(docs)
        # frozen from the oracle: ln(3/2) cancels under normalization
        assert expected[0] == pytest.approx({0: 2 / math.sqrt(5), 1: 1 / math.sqrt(5)}, abs=1e-15)
        for g, e in zip(got, expected):
            assert g.keys() == e.keys()
            for f in e:
                assert abs(g[f] - e[f]) <= 1e-12

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            tfidf_transform(parse_corpus([]))

    def test_doc_frequency_preserved(self):
        raw = parse_corpus(["1 0:2 1:1", "2 0:1", "3 1:3"])
        out = tfidf_transform(raw)
        assert out.doc_frequency.tolist() == raw.doc_frequency.tolist()

    def test_unseen_test_features_dropped(self):
        train = parse_corpus(["1 0:1 1:1", "2 1:2"])
        idf = IdfTable.from_corpus(train)
        test = parse_corpus(["1 0:1 3:5 9:2"])
        assert rows(idf.transform(test)) == [{0: 1.0}]

    def test_all_zero_document_stays_zero(self):
        c = tfidf_transform(parse_corpus(["1 0:1", "2 0:4 1:1", "3 0:2"]))
        assert rows(c) == [{}, {1: 1.0}, {}]


sparse_docs = st.lists(
    st.dictionaries(st.integers(0, 30), st.integers(0, 9), max_size=8),
    min_size=1,
    max_size=15,
)


@settings(max_examples=80, deadline=None)
@given(sparse_docs)
def test_tfidf_matches_oracle_and_is_unit_norm(docs):
    got = rows(tfidf_transform(corpus_from_documents([Document(d) for d in docs])))
    expected = tfidf_oracle(docs)
    for g, e, raw in zip(got, expected, docs):
        assert set(g) == set(e)
        for f in e:
            assert abs(g[f] - e[f]) <= 1e-12
        if g:
            assert abs(math.sqrt(sum(v * v for v in g.values())) - 1.0) <= 1e-9
        # sparsity never grows
        assert set(g) <= {f for f, v in raw.items() if v}


@settings(max_examples=50, deadline=None)
@given(sparse_docs)
def test_parse_matches_documents(docs):
    lines = [format_document(i % 3, sorted(d.items())) for i, d in enumerate(docs)]
    c = parse_corpus(lines)
    assert rows(c) == [{f: float(v) for f, v in d.items()} for d in docs]
    df = np.zeros(c.num_features, dtype=int)
    for d in docs:
        for f, v in d.items():
            if v:
                df[f] += 1
    assert c.doc_frequency.tolist() == df.tolist()
