"""Placing one new model on an existing leaderboard.

Three strategies: binary-search placement by probing midpoint incumbents,
anchored insertion by win rate against a reference model, and imputed
insertion that scores incumbents against an anchor from recorded matches
(falling back to the rating-curve conversion) and the newcomer from fresh
matches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import MatchLedger, MatchRecord, ModelId, OutputStore, PromptSet, RatingTable
from .errors import DataFormatError
from .judges import Judge, judge_match
from .rating import expected_win_rate
from .seeding import rng_from


@dataclass(frozen=True)
class PlacementResult:
    """Where the new model landed and what it cost to find out.

    ``position`` indexes the leaderboard order (0 = top, len = below all);
    ``is_tie`` marks an exact probe split that exhausted the prompt list,
    in which case the newcomer shares the midpoint's rank.
    """

    position: int
    is_tie: bool
    records: tuple[MatchRecord, ...]
    matches_used: int
    n_comparisons: int | None = None
    n_matches: int | None = None
    new_score: float | None = None
    incumbent_scores: tuple[tuple[ModelId, float], ...] | None = None


def binary_search_placement(
    leaderboard: Sequence[ModelId],
    new_model: ModelId,
    prompts: PromptSet,
    judge: Judge,
    seed: int,
    *,
    outputs: OutputStore | None = None,
) -> PlacementResult:
    """Probe midpoint incumbents with batches of matches to find a slot.

    Pops n_matches = floor(|X| / floor(log2 |L|)) prompts per probe from a
    shuffled-then-doubled prompt list. A majority of wins moves the search
    toward rank 1, a majority of losses away from it; an exact split
    re-probes the same midpoint while prompts remain and otherwise returns
    a tie at the midpoint. Requires |X| > |L| > floor(log2 |L|).
    """
    order = list(leaderboard)
    if len(order) != len(set(order)):
        raise DataFormatError("leaderboard contains duplicate models")
    if new_model in order:
        raise DataFormatError(f"{new_model!r} is already on the leaderboard")
    if len(order) < 2:
        raise DataFormatError("binary-search placement needs at least two incumbents")
    n_comparisons = int(math.floor(math.log2(len(order))))
    if not len(prompts) > len(order) > n_comparisons:
        raise DataFormatError(
            f"requires |X| > |L| > floor(log2 |L|); got |X|={len(prompts)}, "
            f"|L|={len(order)}, floor(log2 |L|)={n_comparisons}"
        )
    n_matches = len(prompts) // n_comparisons

    indices = list(range(len(prompts)))
    rng_from(seed, "insertion-shuffle").shuffle(indices)
    pool = indices + indices  # doubled so re-probes cannot run out early
    records: list[MatchRecord] = []

    def result(position: int, is_tie: bool) -> PlacementResult:
        return PlacementResult(
            position=position,
            is_tie=is_tie,
            records=tuple(records),
            matches_used=len(records),
            n_comparisons=n_comparisons,
            n_matches=n_matches,
        )

    low, high = 0, len(order) - 1
    while low <= high:
        mid = (low + high) // 2
        wins = 0
        probed = 0
        while probed < n_matches and pool:
            prompt_index = pool.pop()
            prompt = prompts[prompt_index]
            record = judge_match(
                judge,
                prompt.prompt_id,
                new_model,
                order[mid],
                outputs=outputs,
                prompt_index=prompt_index,
                instruction=prompt.instruction,
            )
            records.append(record)
            probed += 1
            if record.winner == new_model:
                wins += 1
        if 2 * wins > probed:
            high = mid - 1
        elif 2 * wins < probed:
            low = mid + 1
        elif pool:
            continue  # exact split, prompts remain: replay the same midpoint
        else:
            return result(mid, is_tie=True)
    return result(low, is_tie=False)


def anchored_insertion(
    existing_scores: Mapping[ModelId, float],
    new_model: ModelId,
    prompts: PromptSet,
    judge: Judge,
    ref_model: ModelId,
    *,
    outputs: OutputStore | None = None,
) -> PlacementResult:
    """Score the newcomer against the reference on all prompts and slot it.

    Uses exactly |X| judge calls. Insertion is by descending win rate with
    ties broken below the incumbent.
    """
    if new_model == ref_model:
        raise DataFormatError("new model cannot be the reference model")
    if new_model in existing_scores:
        raise DataFormatError(f"{new_model!r} is already on the leaderboard")
    records = []
    wins = 0
    for i, prompt in enumerate(prompts):
        record = judge_match(
            judge,
            prompt.prompt_id,
            new_model,
            ref_model,
            outputs=outputs,
            prompt_index=i,
            instruction=prompt.instruction,
        )
        records.append(record)
        if record.winner == new_model:
            wins += 1
    score = wins / len(prompts)
    position = sum(1 for s in existing_scores.values() if s >= score)
    return PlacementResult(
        position=position,
        is_tie=False,
        records=tuple(records),
        matches_used=len(records),
        new_score=score,
    )


def imputed_winrate_insertion(
    table: RatingTable,
    ledger: MatchLedger,
    anchor: ModelId,
    new_model: ModelId,
    prompts: PromptSet,
    judge: Judge,
    *,
    min_direct_matches: int = 20,
    outputs: OutputStore | None = None,
) -> PlacementResult:
    """Anchor-scored insertion reusing the ledger that built the leaderboard.

    Incumbents are scored against the anchor from observed win frequency
    when the pair has at least ``min_direct_matches`` recorded matches,
    else from the rating-curve conversion of their fitted ratings. The
    newcomer's score is its fresh win count against the anchor over all
    prompts, divided by |X|.
    """
    if anchor not in table:
        raise DataFormatError(f"anchor {anchor!r} not in rating table")
    if new_model in table:
        raise DataFormatError(f"{new_model!r} is already on the leaderboard")

    direct_wins: dict[ModelId, int] = {}
    direct_total: dict[ModelId, int] = {}
    for record in ledger:
        if anchor not in (record.model_a, record.model_b):
            continue
        other = record.model_b if record.model_a == anchor else record.model_a
        direct_total[other] = direct_total.get(other, 0) + 1
        if record.winner == other:
            direct_wins[other] = direct_wins.get(other, 0) + 1

    anchor_rating = table.rating(anchor)
    scores: dict[ModelId, float] = {}
    for m in table.models:
        if m == anchor:
            scores[m] = 0.5
        elif direct_total.get(m, 0) >= min_direct_matches:
            scores[m] = direct_wins.get(m, 0) / direct_total[m]
        else:
            scores[m] = expected_win_rate(table.rating(m), anchor_rating)

    records = []
    wins = 0
    for i, prompt in enumerate(prompts):
        record = judge_match(
            judge,
            prompt.prompt_id,
            new_model,
            anchor,
            outputs=outputs,
            prompt_index=i,
            instruction=prompt.instruction,
        )
        records.append(record)
        if record.winner == new_model:
            wins += 1
    new_score = wins / len(prompts)
    position = sum(1 for s in scores.values() if s >= new_score)
    return PlacementResult(
        position=position,
        is_tie=False,
        records=tuple(records),
        matches_used=len(records),
        new_score=new_score,
        incumbent_scores=tuple(sorted(scores.items())),
    )
