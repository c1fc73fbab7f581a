import numpy as np
import pytest

from app.services.decoder_service import (
    Candidate,
    DecoderConfig,
    beam_search,
    build_context,
    combine,
    diagnose_split,
    mmi_rerank,
)
from tests.conftest import FixedLm


class ReverseStub:
    """Reverse model whose log P(X|Y) is a fixed number per response Y."""

    def __init__(self, scores, V: int = 16) -> None:
        self.scores = scores
        self.V = V

    def next_logprobs(self, source, prefix):
        value = self.scores[tuple(source)] if not prefix else 0.0
        return np.full(self.V, value)


def candidate(i: int, loglik: float, T: float = 0.0, S: float = 0.0, alpha: float = 0.0, beta: float = 0.0):
    return Candidate(ids=(i + 4,), tokens=(f"w{i}",), loglik=loglik, topic_score=T, semantic_score=S, bias=0.0,
                     total=combine(loglik, 0.0, T, S, alpha, beta), finished=True)


def test_zero_weight_keeps_beam_order(make_models):
    models = make_models(seed=21)
    config = DecoderConfig(beam_size=6, max_len=4, min_len=1, mmi_lambda=0.0)
    ctx = build_context(["w1", "w2"], models.stats, models.sif, config, models.vocab)
    candidates = beam_search(models.lm, ctx, config).candidates
    reranked = mmi_rerank(candidates, models.lm, ctx.source, config)
    assert [c.ids for c in reranked] == [c.ids for c in candidates]
    assert all(c.reverse_score == 0.0 for c in reranked)
    assert [c.rerank_score for c in reranked] == [c.total for c in candidates]


def test_reverse_score_breaks_forward_ties():
    candidates = [candidate(0, -2.0), candidate(1, -2.0)]
    reverse = ReverseStub({(4,): -3.0, (5,): -1.0})
    reranked = mmi_rerank(candidates, reverse, [9], DecoderConfig(alpha=0.0, beta=0.0, mmi_lambda=1.0))
    assert [c.ids for c in reranked] == [(5,), (4,)]
    assert reranked[0].reverse_score == pytest.approx(-1.0)


def test_hand_permutation():
    forward = [-1.0, -2.0, -3.0, -4.0, -5.0]
    reverse = [-10.0, -1.0, -5.0, 0.0, -20.0]
    candidates = [candidate(i, f) for i, f in enumerate(forward)]
    stub = ReverseStub({(i + 4,): r for i, r in enumerate(reverse)})

    combined = mmi_rerank(candidates, stub, [9], DecoderConfig(alpha=0.0, beta=0.0, mmi_lambda=1.0))
    assert [c.ids[0] - 4 for c in combined] == [1, 3, 2, 0, 4]
    assert [c.rerank_score for c in combined] == pytest.approx([-3.0, -4.0, -8.0, -11.0, -25.0])

    reverse_only = mmi_rerank(candidates, stub, [9],
                              DecoderConfig(alpha=0.0, beta=0.0, mmi_lambda=1.0, keep_forward_score=False))
    assert [c.ids[0] - 4 for c in reverse_only] == [3, 1, 2, 0, 4]


def test_forward_part_uses_rerank_weights():
    candidates = [candidate(0, -1.0, T=0.1), candidate(1, -1.5, T=0.9)]
    stub = ReverseStub({(4,): 0.0, (5,): 0.0})
    low = mmi_rerank(candidates, stub, [9], DecoderConfig(alpha=0.0, beta=0.0, mmi_lambda=1.0))
    high = mmi_rerank(candidates, stub, [9], DecoderConfig(alpha=2.0, beta=0.0, mmi_lambda=1.0))
    assert low[0].ids == (4,)
    assert high[0].ids == (5,)


def test_rerank_needs_candidates():
    with pytest.raises(ValueError):
        mmi_rerank([], ReverseStub({}), [9], DecoderConfig(mmi_lambda=1.0))


@pytest.mark.parametrize("weight", ["alpha", "beta", "mmi_lambda"])
def test_top_candidate_term_grows_with_its_weight(weight):
    """Raising one weight never lowers that term's value on the top-ranked candidate."""
    rng = np.random.default_rng({"alpha": 1, "beta": 2, "mmi_lambda": 3}[weight])
    grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    for _ in range(100):
        loglik = rng.normal(-10.0, 3.0, size=50)
        T, S = rng.uniform(0, 1, size=50), rng.normal(0, 0.5, size=50)
        reverse = rng.normal(-10.0, 3.0, size=50)
        candidates = [candidate(i, loglik[i], T[i], S[i]) for i in range(50)]
        stub = ReverseStub({(i + 4,): reverse[i] for i in range(50)})
        term = {"alpha": T, "beta": S, "mmi_lambda": reverse}[weight]
        previous = -np.inf
        for value in grid:
            settings = {"alpha": 0.5, "beta": 0.5, "mmi_lambda": 0.5, weight: value}
            top = mmi_rerank(candidates, stub, [9], DecoderConfig(**settings))[0]
            current = term[top.ids[0] - 4]
            assert current >= previous
            previous = current


@pytest.fixture
def diagnose_setup(make_models):
    models = make_models(seed=31)
    ctx = build_context(["w2", "w3"], models.stats, models.sif, DecoderConfig(), models.vocab)
    return models, ctx


def test_diagnose_split_tables_are_disjoint_and_sorted(diagnose_setup):
    models, ctx = diagnose_setup
    stop_table, topic_table = diagnose_split(models.lm, ctx, ["w4"], frozenset({"w0", "w1"}), ["w1", "w2", "w3"])
    assert {w for w, _ in stop_table} == {"w0", "w1"}
    assert {w for w, _ in topic_table} == {"w2", "w3"}
    for table in (stop_table, topic_table):
        values = [lp for _, lp in table]
        assert values == sorted(values, reverse=True)
    logprobs = models.lm.next_logprobs(ctx.source, models.vocab.encode(["w4"]))
    assert dict(stop_table)["w0"] == pytest.approx(logprobs[models.vocab.id("w0")])


def test_diagnose_split_skips_unknown_words(diagnose_setup):
    models, ctx = diagnose_setup
    stop_table, topic_table = diagnose_split(models.lm, ctx, [], frozenset({"w0", "zebra"}), ["nowhere"])
    assert [w for w, _ in stop_table] == ["w0"]
    assert topic_table == []


def test_diagnose_split_uniform_model(diagnose_setup):
    models, ctx = diagnose_setup
    V = len(models.vocab)
    stop_table, topic_table = diagnose_split(FixedLm(np.full(V, 1.0 / V)), ctx, ["w1"],
                                             frozenset({"w0", "w5"}), ["w2", "w6"])
    assert all(lp == pytest.approx(np.log(1.0 / V)) for _, lp in stop_table + topic_table)
    # equal values fall back to vocabulary order
    assert [w for w, _ in stop_table] == ["w0", "w5"]
