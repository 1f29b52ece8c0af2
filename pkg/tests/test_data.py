import numpy as np
import pytest

from emogen.data import (
    COARSE_TO_POLARITY,
    E2_LABELS,
    E6_LABELS,
    E12_LABELS,
    FINE_TO_COARSE,
    KEYWORDS,
    ClassificationExample,
    GenerationExample,
    TaskSpec,
    gen_synthetic,
    load_task,
    save_examples,
    split_811,
    subsample,
)
from emogen.errors import DataError
from emogen.text import tokenize


def keyword_oracle(text: str, granularity: str) -> str:
    """Independent bag-of-keywords classifier over the planted families."""
    lookup = {kw: fine for fine, kws in KEYWORDS.items() for kw in kws}
    hits = {lookup[tok] for tok in tokenize(text) if tok in lookup}
    assert len(hits) == 1, f"expected exactly one keyword family in {text!r}"
    fine = hits.pop()
    if granularity == "e12":
        return fine
    if granularity == "e6":
        return FINE_TO_COARSE[fine]
    return COARSE_TO_POLARITY[FINE_TO_COARSE[fine]]


class TestLoadTask:
    def _spec(self, tmp_path, kind, labels=()):
        path = tmp_path / "data.tsv"
        return TaskSpec(
            name="t", kind=kind, labels=labels, paths={"train": path}
        ), path

    def test_counts_lines(self, tmp_path):
        spec, path = self._spec(tmp_path, "generation")
        path.write_text("".join(f"utt {i}\tresp {i}\n" for i in range(10)))
        assert len(load_task(spec)["train"]) == 10

    def test_unknown_label_reports_line(self, tmp_path):
        spec, path = self._spec(tmp_path, "classification", E6_LABELS)
        path.write_text("fine text\tjoy\nweird text\tecstatic\n")
        with pytest.raises(DataError, match=":2"):
            load_task(spec)

    def test_empty_response_reports_line(self, tmp_path):
        spec, path = self._spec(tmp_path, "generation")
        path.write_text("utt a\tresp\nutt b\t\n")
        with pytest.raises(DataError, match=":2"):
            load_task(spec)

    def test_malformed_line_reports_line(self, tmp_path):
        spec, path = self._spec(tmp_path, "generation")
        path.write_text("only one field\n")
        with pytest.raises(DataError, match=":1"):
            load_task(spec)

    def test_missing_file(self, tmp_path):
        spec, _ = self._spec(tmp_path, "generation")
        with pytest.raises(DataError, match="missing file"):
            load_task(spec)

    def test_save_load_round_trip(self, tmp_path):
        examples = gen_synthetic("generation", 25, seed=3)
        spec, path = self._spec(tmp_path, "generation")
        save_examples(path, examples)
        assert load_task(spec)["train"] == examples

    def test_save_load_round_trip_classification(self, tmp_path):
        examples = gen_synthetic("e6", 25, seed=3)
        spec, path = self._spec(tmp_path, "classification", E6_LABELS)
        save_examples(path, examples)
        assert load_task(spec)["train"] == examples


class TestTaskSpec:
    def test_generation_weight_must_be_one(self):
        with pytest.raises(DataError):
            TaskSpec(name="g", kind="generation", weight=0.5)

    def test_weight_range(self):
        with pytest.raises(DataError):
            TaskSpec(name="c", kind="classification", labels=("a", "b"), weight=1.5)

    def test_duplicate_labels(self):
        with pytest.raises(DataError):
            TaskSpec(name="c", kind="classification", labels=("a", "a"))


class TestSplit811:
    def test_hundred_splits_80_10_10(self):
        tr, va, te = split_811(list(range(100)), seed=0)
        assert (len(tr), len(va), len(te)) == (80, 10, 10)

    def test_minimal_ten(self):
        tr, va, te = split_811(list(range(10)), seed=0)
        assert (len(tr), len(va), len(te)) == (8, 1, 1)

    def test_odd_leftover_goes_to_test(self):
        tr, va, te = split_811(list(range(11)), seed=0)
        assert (len(tr), len(va), len(te)) == (8, 1, 2)

    def test_deterministic(self):
        a = split_811(list(range(57)), seed=9)
        b = split_811(list(range(57)), seed=9)
        assert a == b

    def test_disjoint_and_exhaustive(self):
        items = list(range(143))
        tr, va, te = split_811(items, seed=4)
        assert sorted(tr + va + te) == items
        assert not (set(tr) & set(va)) and not (set(va) & set(te)) and not (set(tr) & set(te))

    def test_too_few_examples(self):
        with pytest.raises(DataError):
            split_811(list(range(9)), seed=0)


class TestSubsample:
    def test_fraction_one_is_identity(self):
        items = list(range(20))
        assert subsample(items, 1.0, seed=0) == items

    def test_quarter_of_large_list(self):
        n = 16837
        kept = subsample(list(range(n)), 0.25, seed=1)
        assert abs(len(kept) - n * 0.25) <= 1

    def test_deterministic(self):
        items = list(range(100))
        assert subsample(items, 0.5, seed=3) == subsample(items, 0.5, seed=3)

    def test_order_stable(self):
        kept = subsample(list(range(100)), 0.3, seed=7)
        assert kept == sorted(kept)

    def test_fraction_out_of_range(self):
        for f in (0.0, -0.5, 1.5):
            with pytest.raises(DataError):
                subsample(list(range(10)), f, seed=0)


class TestSynthetic:
    def test_deterministic(self):
        assert gen_synthetic("generation", 50, seed=5) == gen_synthetic("generation", 50, seed=5)
        assert gen_synthetic("e6", 50, seed=5) == gen_synthetic("e6", 50, seed=5)

    def test_size_too_small(self):
        with pytest.raises(DataError):
            gen_synthetic("e6", 5, seed=0)

    def test_unknown_kind(self):
        with pytest.raises(DataError):
            gen_synthetic("e7", 50, seed=0)

    def test_keyword_families_disjoint(self):
        all_kws = [kw for kws in KEYWORDS.values() for kw in kws]
        assert len(all_kws) == len(set(all_kws))

    def test_six_label_corpus_perfectly_separable(self):
        examples = gen_synthetic("e6", 300, seed=2)
        correct = sum(
            1 for ex in examples if keyword_oracle(ex.text, "e6") == ex.label
        )
        assert correct == len(examples)

    @pytest.mark.parametrize("granularity", ["e2", "e12"])
    def test_other_granularities_separable(self, granularity):
        examples = gen_synthetic(granularity, 200, seed=8)
        assert all(
            keyword_oracle(ex.text, granularity) == ex.label for ex in examples
        )

    def test_hierarchy_consistent_across_granularities(self):
        fine = gen_synthetic("e12", 200, seed=13)
        mid = gen_synthetic("e6", 200, seed=13)
        coarse = gen_synthetic("e2", 200, seed=13)
        for f, m, c in zip(fine, mid, coarse):
            assert f.text == m.text == c.text
            assert FINE_TO_COARSE[f.label] == m.label
            assert COARSE_TO_POLARITY[m.label] == c.label

    def test_hierarchy_is_a_function(self):
        assert set(FINE_TO_COARSE) == set(E12_LABELS)
        assert set(FINE_TO_COARSE.values()) == set(E6_LABELS)
        assert set(COARSE_TO_POLARITY) == set(E6_LABELS)
        assert set(COARSE_TO_POLARITY.values()) == set(E2_LABELS)

    def test_all_six_labels_present_at_600(self):
        examples = gen_synthetic("e6", 600, seed=21)
        assert {ex.label for ex in examples} == set(E6_LABELS)

    def test_generation_response_keyed_by_topic(self):
        from emogen.data import RESPONSE_TEMPLATES, TOPICS

        for ex in gen_synthetic("generation", 100, seed=4):
            topics = [t for t in TOPICS if t in tokenize(ex.utterance)]
            assert len(topics) == 1
            assert ex.response == RESPONSE_TEMPLATES[topics[0]]

    def test_response_template_independent_of_emotion_family(self):
        # the same topic must answer identically whatever the planted emotion
        from emogen.data import RESPONSE_TEMPLATES

        by_topic = {}
        for ex in gen_synthetic("generation", 400, seed=9):
            topic = next(t for t in RESPONSE_TEMPLATES if t in tokenize(ex.utterance))
            by_topic.setdefault(topic, set()).add(ex.response)
        assert all(len(responses) == 1 for responses in by_topic.values())
