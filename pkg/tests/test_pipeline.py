import json

import pytest

from lpatd import lda
from lpatd.corpus import Document
from lpatd.pipeline import (
    FixedLabeler,
    PipelineError,
    RunConfig,
    RunReport,
    RunResult,
    SimulatedAnnotator,
    TopicLabeling,
    build_shared_graph,
    macro_f1,
    run_lpa_td,
    run_lpa_td_coh,
    run_only_lpa,
    select_seed_documents,
    simulate_annotator,
)

from conftest import MED_WORDS, hand_model

FAST = RunConfig(n_topics=2, alpha=0.1, gibbs_iters=50, fold_in_iters=20, n_runs=2)


class TopWordLabeler:
    """Names each topic after the class whose prototype contains its most probable word."""

    def __call__(self, model, corpus, run):
        med = set(MED_WORDS.split())
        labels = []
        for t in range(model.n_topics):
            word = lda.top_words(model, t, 1).top_words[0]
            labels.append("med" if word in med else "space")
        return TopicLabeling(tuple(labels))


class TestMacroF1:
    def test_perfect(self):
        g = {"a": "x", "b": "y"}
        assert macro_f1(g, g, ["x", "y"]).macro_f1 == 1.0

    def test_all_one_class(self):
        gold = {"a": "1", "b": "1", "c": "2", "d": "2"}
        s = macro_f1({k: "1" for k in gold}, gold, ["1", "2"])
        assert s.per_class["1"]["f1"] == pytest.approx(2 / 3)
        assert s.per_class["2"]["f1"] == 0.0
        assert s.macro_f1 == pytest.approx(1 / 3)

    def test_empty(self):
        with pytest.raises(PipelineError):
            macro_f1({}, {}, ["x"])

    def test_key_mismatch(self):
        with pytest.raises(PipelineError):
            macro_f1({"a": "x"}, {"b": "x"}, ["x"])


class TestTopicLabeling:
    def test_tsv_round_trip(self):
        lab = TopicLabeling(("med", None, "space"))
        assert lab.to_tsv() == "0\tmed\n1\tDROP\n2\tspace\n"
        assert TopicLabeling.from_tsv(lab.to_tsv()) == lab

    def test_unknown_class(self):
        with pytest.raises(PipelineError, match="unknown class"):
            TopicLabeling(("med", "biology")).validate(["med", "space"])

    def test_class_without_topics(self):
        with pytest.raises(PipelineError, match="none left for"):
            TopicLabeling(("med", None, "med", None)).validate(["med", "space"])

    def test_wrong_topic_count(self):
        with pytest.raises(PipelineError):
            TopicLabeling(("med", "space")).validate(["med", "space"], 3)

    def test_malformed_tsv(self):
        with pytest.raises(PipelineError, match="line 2"):
            TopicLabeling.from_tsv("0\tmed\nspace\n")
        with pytest.raises(PipelineError, match="0..n-1"):
            TopicLabeling.from_tsv("0\tmed\n2\tspace\n")


class TestSimulatedAnnotator:
    def _train(self, labels):
        return [Document(f"d{i}", "", "train", l) for i, l in enumerate(labels)]

    def test_argmax(self):
        # topic 0 lives in the space document, topic 1 in the med one
        m = hand_model([[1, 1], [1, 1]], [[0, 40], [40, 0]], alpha=0.01)
        lab = simulate_annotator(m, self._train(["med", "space"]), ["med", "space"])
        assert lab.labels == ("space", "med")

    def test_tie_goes_to_first_class(self):
        m = hand_model([[1, 1], [1, 1]], [[5, 5], [5, 5]])
        lab = simulate_annotator(m, self._train(["med", "space"]), ["med", "space"])
        assert lab.labels == ("med", "med")

    def test_aligned_synthetic(self, toy_corpus):
        m = lda.fit(toy_corpus.train(), toy_corpus.vocabulary, 2, alpha=0.1, iterations=50, seed=1)
        assert simulate_annotator(m, toy_corpus.train(), ["med", "space"]) == TopWordLabeler()(m, toy_corpus, 0)


class TestRunConfig:
    def test_tau_range(self):
        for tau in (0.0, 1.0, 1.5):
            with pytest.raises(PipelineError, match="tau"):
                RunConfig(tau=tau)

    def test_resolved_defaults(self):
        c = RunConfig().resolved(2)
        assert c.n_topics == 4 and c.alpha == 12.5

    def test_seeds(self):
        assert RunConfig(n_runs=3, base_seed=42).seeds() == [42, 43, 44]


class TestReport:
    def test_sample_stddev(self):
        runs = [RunResult(s, f, {}, 1, True) for s, f in [(0, 0.5), (1, 0.7), (2, 0.9)]]
        r = RunReport("lpa-td", {}, {}, runs)
        assert r.mean_macro_f1 == pytest.approx(0.7)
        assert r.stddev_macro_f1 == pytest.approx(0.2)
        assert RunReport("lpa-td", {}, {}, runs[:1]).stddev_macro_f1 == 0.0


class TestLpaTd:
    def test_separable_corpus_is_perfect(self, toy_corpus):
        report = run_lpa_td(toy_corpus, FAST, TopWordLabeler())
        assert report.scores == [1.0, 1.0]
        assert report.all_converged

    def test_simulated_annotator_separable(self, toy_corpus):
        assert run_lpa_td(toy_corpus, FAST, SimulatedAnnotator()).scores == [1.0, 1.0]

    def test_deterministic(self, toy_corpus):
        a = run_lpa_td(toy_corpus, FAST, SimulatedAnnotator())
        b = run_lpa_td(toy_corpus, FAST, SimulatedAnnotator())
        assert a.to_json() == b.to_json()

    def test_same_seed_same_score(self, toy_corpus):
        cfg = RunConfig(n_topics=2, gibbs_iters=30, fold_in_iters=10, n_runs=1, base_seed=7)
        assert run_lpa_td(toy_corpus, cfg, SimulatedAnnotator()).scores == run_lpa_td(
            toy_corpus, cfg, SimulatedAnnotator()
        ).scores

    def test_report_fields(self, toy_corpus):
        d = json.loads(run_lpa_td(toy_corpus, FAST, TopWordLabeler()).to_json())
        assert d["method"] == "lpa-td" and d["config"]["tau"] == 0.05
        assert len(d["runs"]) == 2 and len(d["runs"][0]["topics"]) == 2
        assert d["graph"]["threshold"] == pytest.approx(1.0)

    def test_drop_needs_coherent(self, toy_corpus):
        cfg = RunConfig(n_topics=3, alpha=0.1, gibbs_iters=20, fold_in_iters=5, n_runs=1)
        lab = FixedLabeler(TopicLabeling(("med", "space", None)))
        with pytest.raises(PipelineError, match="coherent"):
            run_lpa_td(toy_corpus, cfg, lab)
        assert run_lpa_td_coh(toy_corpus, cfg, lab).runs[0].topic_labels == ["med", "space", None]


class TestCoherent:
    def test_no_drop_is_identical(self, toy_corpus):
        a = run_lpa_td(toy_corpus, FAST, SimulatedAnnotator())
        b = run_lpa_td_coh(toy_corpus, FAST, SimulatedAnnotator())
        assert a.to_json() == b.to_json()

    def test_dropping_a_whole_class(self, toy_corpus):
        lab = FixedLabeler(TopicLabeling(("med", None)))
        with pytest.raises(PipelineError, match="none left for"):
            run_lpa_td_coh(toy_corpus, FAST, lab)

    def test_dropped_topic_removed_from_graph(self, toy_corpus):
        cfg = RunConfig(n_topics=3, alpha=0.1, gibbs_iters=20, fold_in_iters=5, n_runs=1)
        sizes = []
        run_lpa_td_coh(toy_corpus, cfg, FixedLabeler(TopicLabeling(("med", None, "space"))),
                       on_run=lambda r, eg, res: sizes.append(eg.n_topics))
        assert sizes == [2]


class TestOnlyLpa:
    def test_separable_corpus_is_perfect(self, toy_corpus):
        report = run_only_lpa(toy_corpus, RunConfig(), n_labeled=2)
        assert report.scores == [1.0]
        assert report.runs[0].seed is None
        assert len(report.runs[0].seed_documents) == 2

    def test_seed_documents_are_training_docs(self, toy_corpus):
        shared = build_shared_graph(toy_corpus, 1)
        seeds = select_seed_documents(toy_corpus, shared.graph, ["med", "space"], 2)
        assert all(toy_corpus[i].split == "train" for i, _ in seeds)
        # equal degrees within a class: lowest positions win
        assert [toy_corpus[i].id for i, _ in seeds] == ["med-03", "med-04", "space-03", "space-04"]

    def test_too_few_labels(self, toy_corpus):
        with pytest.raises(PipelineError):
            run_only_lpa(toy_corpus, RunConfig(), n_labeled=1)
