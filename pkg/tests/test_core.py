from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eloarena import (
    DataFormatError,
    Leaderboard,
    LeaderboardEntry,
    MatchLedger,
    MatchRecord,
    Prompt,
    PromptSet,
    RatingTable,
)
from eloarena.core import validate_model_id

from conftest import make_ledger


class TestModelId:
    def test_accepts_plain_tokens(self):
        assert validate_model_id("gpt-4o-mini") == "gpt-4o-mini"

    @pytest.mark.parametrize("bad", ["", "two words", "tab\tsep", "a,b", "nl\n"])
    def test_rejects_whitespace_and_commas(self, bad):
        with pytest.raises(DataFormatError):
            validate_model_id(bad)


class TestPromptSet:
    def test_preserves_order_and_indexes(self):
        ps = PromptSet((Prompt("z"), Prompt("a"), Prompt("m")))
        assert ps.ids == ("z", "a", "m")
        assert ps.index_of("m") == 2

    def test_rejects_duplicates(self):
        with pytest.raises(DataFormatError, match="duplicate"):
            PromptSet((Prompt("x"), Prompt("x")))

    def test_rejects_empty(self):
        with pytest.raises(DataFormatError, match="empty"):
            PromptSet(())

    def test_synthetic(self):
        ps = PromptSet.synthetic(3)
        assert len(ps) == 3 and ps[0].instruction == ""


class TestMatchRecord:
    def test_winner_must_be_in_pair(self):
        with pytest.raises(DataFormatError, match="neither"):
            MatchRecord("p1", "a", "b", "c", "j")

    def test_self_match_rejected(self):
        with pytest.raises(DataFormatError, match="itself"):
            MatchRecord("p1", "a", "a", "a", "j")

    def test_loser_and_pair(self):
        rec = MatchRecord("p1", "b", "a", "a", "j")
        assert rec.loser == "b"
        assert rec.pair == ("a", "b")


class TestMatchLedger:
    def test_concatenation_is_associative(self):
        l1 = make_ledger(("a", "b", "a"))
        l2 = make_ledger(("b", "c", "c"))
        l3 = make_ledger(("a", "c", "a"))
        assert (l1 + l2) + l3 == l1 + (l2 + l3)

    def test_models(self):
        ledger = make_ledger(("a", "b", "a"), ("c", "d", "d"))
        assert ledger.models() == {"a", "b", "c", "d"}

    def test_append_only_growth(self):
        ledger = MatchLedger()
        ledger.append(MatchRecord("p1", "a", "b", "a", "j"))
        ledger.extend([MatchRecord("p2", "a", "b", "b", "j")])
        assert len(ledger) == 2


class TestRatingTable:
    def test_mean_must_match_anchor(self):
        with pytest.raises(DataFormatError, match="anchor mean"):
            RatingTable({"a": 1000.0, "b": 1200.0}, anchor_mean=1000.0)

    def test_from_ratings_sets_mean(self):
        t = RatingTable.from_ratings({"a": 900.0, "b": 1100.0})
        assert t.anchor_mean == 1000.0

    def test_rejects_non_finite(self):
        with pytest.raises(DataFormatError, match="non-finite"):
            RatingTable.from_ratings({"a": float("inf"), "b": 1.0})

    def test_unknown_model(self, four_ratings):
        with pytest.raises(DataFormatError):
            four_ratings.rating("nope")


class TestLeaderboard:
    def test_competition_ranking_accepted(self):
        Leaderboard(
            (
                LeaderboardEntry(1, "a", 0.9),
                LeaderboardEntry(2, "b", 0.5),
                LeaderboardEntry(2, "c", 0.5),
                LeaderboardEntry(4, "d", 0.1),
            )
        )

    def test_dense_ranking_rejected(self):
        with pytest.raises(DataFormatError, match="competition"):
            Leaderboard(
                (
                    LeaderboardEntry(1, "a", 0.9),
                    LeaderboardEntry(2, "b", 0.5),
                    LeaderboardEntry(2, "c", 0.5),
                    LeaderboardEntry(3, "d", 0.1),
                )
            )

    def test_scores_must_descend(self):
        with pytest.raises(DataFormatError, match="descending"):
            Leaderboard(
                (LeaderboardEntry(2, "a", 0.4), LeaderboardEntry(1, "b", 0.6))
            )

    def test_ci_must_bracket_score(self):
        with pytest.raises(DataFormatError, match="CI"):
            LeaderboardEntry(1, "a", 0.9, ci_low=0.91, ci_high=0.95)


@given(
    st.lists(
        st.tuples(st.sampled_from("abcdef"), st.sampled_from("abcdef")).filter(
            lambda t: t[0] != t[1]
        ),
        min_size=1,
        max_size=30,
    ),
    st.randoms(),
)
def test_ledger_permutation_preserves_models(pairs, rnd):
    records = [
        MatchRecord(f"p{i}", a, b, a, "j") for i, (a, b) in enumerate(pairs)
    ]
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert MatchLedger(records).models() == MatchLedger(shuffled).models()
