from __future__ import annotations

import math

import pytest

from eloarena import (
    DataFormatError,
    DeterministicOracleJudge,
    MatchLedger,
    MatchRecord,
    PromptSet,
    RatingTable,
    anchored_insertion,
    binary_search_placement,
    expected_win_rate,
    imputed_winrate_insertion,
)
from eloarena.judges import Judge


def ladder(n: int, top: float = 1600.0, step: float = 50.0):
    """Descending leaderboard of n incumbents plus their rating table."""
    ratings = {f"rank{i:02d}": top - step * i for i in range(n)}
    order = sorted(ratings, key=lambda m: -ratings[m])
    return order, ratings


def oracle_with(ratings: dict, **extra) -> DeterministicOracleJudge:
    return DeterministicOracleJudge(RatingTable.from_ratings({**ratings, **extra}))


class TestBinarySearchPlacement:
    def test_probe_arithmetic_at_arena_scale(self):
        order, ratings = ladder(20)
        judge = oracle_with(ratings, newcomer=2000.0)
        result = binary_search_placement(
            order, "newcomer", PromptSet.synthetic(500), judge, seed=1
        )
        assert result.n_comparisons == 4  # floor(log2 20)
        assert result.n_matches == 125  # floor(500 / 4)

    def test_above_all_places_at_zero(self):
        order, ratings = ladder(8)
        judge = oracle_with(ratings, newcomer=9000.0)
        result = binary_search_placement(
            order, "newcomer", PromptSet.synthetic(40), judge, seed=3
        )
        assert result.position == 0 and not result.is_tie

    def test_below_all_places_at_end(self):
        order, ratings = ladder(8)
        judge = oracle_with(ratings, newcomer=1.0)
        result = binary_search_placement(
            order, "newcomer", PromptSet.synthetic(40), judge, seed=3
        )
        assert result.position == 8 and not result.is_tie

    @pytest.mark.parametrize("size", [4, 8, 16])
    def test_every_adjacent_gap(self, size):
        order, ratings = ladder(size)
        prompts = PromptSet.synthetic(4 * size)
        for gap in range(size - 1):
            target = (ratings[order[gap]] + ratings[order[gap + 1]]) / 2
            judge = oracle_with(ratings, newcomer=target)
            result = binary_search_placement(order, "newcomer", prompts, judge, seed=7)
            assert result.position == gap + 1, f"gap {gap} at size {size}"
            assert not result.is_tie

    def test_monotone_in_newcomer_rating(self):
        order, ratings = ladder(8)
        prompts = PromptSet.synthetic(40)
        positions = []
        for target in range(1200, 1700, 25):
            judge = oracle_with(ratings, newcomer=float(target) + 0.5)
            positions.append(
                binary_search_placement(order, "newcomer", prompts, judge, seed=2).position
            )
        assert positions == sorted(positions, reverse=True)

    def test_probe_budget(self):
        order, ratings = ladder(16)
        prompts = PromptSet.synthetic(48)
        judge = oracle_with(ratings, newcomer=1.0)  # worst case: walks to the bottom
        result = binary_search_placement(order, "newcomer", prompts, judge, seed=5)
        max_probes = math.floor(math.log2(16)) + 1
        assert result.matches_used <= max_probes * result.n_matches
        assert result.matches_used <= 2 * len(prompts)

    def test_precondition_prompt_count(self):
        order, ratings = ladder(8)
        judge = oracle_with(ratings, newcomer=1.0)
        with pytest.raises(DataFormatError, match=r"\|X\| > \|L\|"):
            binary_search_placement(order, "newcomer", PromptSet.synthetic(8), judge, 0)

    def test_precondition_board_size(self):
        order, ratings = ladder(1)
        judge = oracle_with(ratings, newcomer=1.0)
        with pytest.raises(DataFormatError, match="two incumbents"):
            binary_search_placement(order, "newcomer", PromptSet.synthetic(10), judge, 0)

    def test_new_model_must_be_new(self):
        order, ratings = ladder(4)
        judge = oracle_with(ratings)
        with pytest.raises(DataFormatError, match="already"):
            binary_search_placement(order, order[0], PromptSet.synthetic(10), judge, 0)

    def test_deterministic(self):
        order, ratings = ladder(8)
        judge = oracle_with(ratings, newcomer=1333.0)
        prompts = PromptSet.synthetic(40)
        r1 = binary_search_placement(order, "newcomer", prompts, judge, seed=11)
        r2 = binary_search_placement(order, "newcomer", prompts, judge, seed=11)
        assert r1 == r2


class HalfSplitJudge(Judge):
    """Alternates winners so every even-sized probe splits exactly in half."""

    judge_id = "half-split"

    def __init__(self):
        self.flip = False

    def decide(self, prompt_id, model_a, model_b, **kwargs):
        self.flip = not self.flip
        return (model_a if self.flip else model_b), False


class TestBinarySearchTies:
    def test_exact_split_reprobes_until_exhausted_then_ties(self):
        order, _ = ladder(4)
        prompts = PromptSet.synthetic(8)  # n_comparisons=2, n_matches=4 (even)
        result = binary_search_placement(order, "newcomer", prompts, HalfSplitJudge(), 0)
        assert result.is_tie
        assert result.position == 1  # first midpoint of (0, 3)
        assert result.matches_used == 2 * len(prompts)  # drained the doubled list


class TestAnchoredInsertion:
    def setup_method(self):
        self.prompts = PromptSet.synthetic(12)

    def test_sweep_goes_on_top(self):
        judge = oracle_with({"newcomer": 1500.0, "ref": 1000.0})
        result = anchored_insertion(
            {"inc1": 0.9, "inc2": 0.4}, "newcomer", self.prompts, judge, "ref"
        )
        assert result.position == 0
        assert result.new_score == 1.0
        assert result.matches_used == len(self.prompts)

    def test_tie_goes_below_incumbent(self):
        class SplitJudge(Judge):
            judge_id = "split"

            def decide(self, prompt_id, model_a, model_b, **kwargs):
                index = int(prompt_id[-2:])
                return (model_a if index < 6 else model_b), False

        result = anchored_insertion(
            {"inc1": 0.9, "inc2": 0.5, "inc3": 0.1},
            "newcomer", self.prompts, SplitJudge(), "ref",
        )
        assert result.new_score == 0.5
        assert result.position == 2  # below the incumbent at 0.5

    def test_uses_exactly_one_match_per_prompt(self):
        judge = oracle_with({"newcomer": 900.0, "ref": 1100.0})
        result = anchored_insertion({}, "newcomer", self.prompts, judge, "ref")
        assert result.matches_used == len(self.prompts)
        assert len(result.records) == len(self.prompts)
        assert result.new_score == 0.0


class TestImputedInsertion:
    def make_table_and_ledger(self):
        ratings = {"anchor": 1100.0, "strong": 1300.0, "weak": 900.0}
        # the fit that produced these ratings met the anchor-strong pair a lot
        records = []
        for i in range(30):
            records.append(MatchRecord(f"d{i}", "strong", "anchor", "strong" if i < 24 else "anchor", "hist"))
        for i in range(5):
            records.append(MatchRecord(f"e{i}", "weak", "anchor", "weak" if i == 0 else "anchor", "hist"))
        return RatingTable.from_ratings(ratings), MatchLedger(records)

    def test_direct_counts_beat_conversion_when_plentiful(self):
        table, ledger = self.make_table_and_ledger()
        judge = oracle_with(dict(table.ratings), newcomer=1100.0 + 1.0)
        result = imputed_winrate_insertion(
            table, ledger, "anchor", "newcomer", PromptSet.synthetic(10), judge
        )
        scores = dict(result.incumbent_scores)
        assert scores["strong"] == 0.8  # 24/30 observed, not the curve value
        assert scores["weak"] == pytest.approx(
            expected_win_rate(900.0, 1100.0)
        )  # only 5 direct matches -> conversion fallback
        assert scores["anchor"] == 0.5

    def test_newcomer_score_is_fresh_win_fraction(self):
        table, ledger = self.make_table_and_ledger()
        judge = oracle_with(dict(table.ratings), newcomer=1200.0)
        result = imputed_winrate_insertion(
            table, ledger, "anchor", "newcomer", PromptSet.synthetic(10), judge
        )
        assert result.new_score == 1.0  # oracle: newcomer above anchor on every prompt
        assert result.matches_used == 10

    def test_equal_rating_newcomer_is_deterministic(self):
        # strict-winner oracle with the lexicographic tie-break: the newcomer
        # either sweeps or is swept, never 0.5
        table, ledger = self.make_table_and_ledger()
        judge = oracle_with(dict(table.ratings), newcomer=1100.0)
        result = imputed_winrate_insertion(
            table, ledger, "anchor", "newcomer", PromptSet.synthetic(8), judge
        )
        assert result.new_score in (0.0, 1.0)
        # "anchor" < "newcomer" lexicographically, so the anchor wins ties
        assert result.new_score == 0.0

    def test_missing_anchor_rejected(self):
        table, ledger = self.make_table_and_ledger()
        judge = oracle_with(dict(table.ratings), newcomer=1.0)
        with pytest.raises(DataFormatError, match="ghost"):
            imputed_winrate_insertion(
                table, ledger, "ghost", "newcomer", PromptSet.synthetic(5), judge
            )
