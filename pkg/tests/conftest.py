from __future__ import annotations

import pytest

from eloarena import MatchLedger, MatchRecord, PromptSet, RatingTable


@pytest.fixture
def four_ratings() -> RatingTable:
    return RatingTable.from_ratings(
        {"alpha": 1400.0, "bravo": 1250.0, "charlie": 1100.0, "delta": 1000.0}
    )


@pytest.fixture
def ten_prompts() -> PromptSet:
    return PromptSet.synthetic(10)


def make_ledger(*triples: tuple[str, str, str], judge_id: str = "test") -> MatchLedger:
    """Ledger from (model_a, model_b, winner) triples on distinct prompts."""
    return MatchLedger(
        MatchRecord(f"p{i:04d}", a, b, w, judge_id)
        for i, (a, b, w) in enumerate(triples)
    )
