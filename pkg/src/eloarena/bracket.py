"""Single-elimination bracket scheduling and the iterated-tournament driver.

One independent randomized-bracket tournament per benchmark prompt, all
matches pooled into one ledger. A field of n real models always plays
exactly n - 1 matches per prompt: byes pad the field to a power of two and
advance their opponents silently, producing no records.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ._parallel import parallel_map_settled
from .core import MatchLedger, MatchRecord, ModelId, OutputStore, PromptSet, validate_model_id
from .errors import DataFormatError, JudgeError, TournamentAborted
from .judges import Judge, judge_match
from .seeding import rng_from

#: A bye slot; its opponent advances without a match.
BYE = None


@dataclass(frozen=True)
class Bracket:
    """First-round slot assignment for one prompt's tournament.

    Slot count is the smallest power of two holding every real model; each
    pair of adjacent slots meets in round one. Byes only ever face a real
    model (one bye per pair at most).
    """

    slots: tuple[ModelId | None, ...]
    prompt_id: str

    @property
    def n_models(self) -> int:
        return sum(1 for s in self.slots if s is not BYE)

    @property
    def n_byes(self) -> int:
        return sum(1 for s in self.slots if s is BYE)

    @property
    def rounds(self) -> int:
        return (self.n_models - 1).bit_length()


def expected_match_count(n_models: int, n_prompts: int) -> int:
    """Total matches an iterated-tournament run performs.

    Each prompt's single elimination plays n_models - 1 real matches, so the
    run costs n_prompts * (n_models - 1), always n_prompts fewer than an
    anchored comparison over the same inputs.
    """
    if n_models < 2:
        raise DataFormatError("need at least two participants")
    if n_prompts < 1:
        raise DataFormatError("need at least one prompt")
    return n_prompts * (n_models - 1)


def make_bracket(models: Iterable[ModelId], prompt_id: str, seed: int) -> Bracket:
    """Shuffle models into a padded bracket, deterministically.

    The shuffle stream is keyed by (seed, prompt_id), so brackets for
    different prompts are independent and rebuilding any one of them is
    order- and schedule-insensitive. Byes occupy distinct round-one pairs.
    """
    field = sorted(set(models))
    for m in field:
        validate_model_id(m)
    if len(field) < 2:
        raise DataFormatError("need at least two participants")
    rng = rng_from(seed, "bracket", prompt_id)
    rng.shuffle(field)

    size = 1 << (len(field) - 1).bit_length()
    n_byes = size - len(field)
    entrants = iter(field)
    slots: list[ModelId | None] = []
    for pair in range(size // 2):
        slots.append(next(entrants))
        slots.append(BYE if pair < n_byes else next(entrants))
    return Bracket(tuple(slots), prompt_id)


def run_tournament(
    bracket: Bracket,
    judge: Judge,
    *,
    outputs: OutputStore | None = None,
    prompt_index: int | None = None,
    instruction: str | None = None,
    trial_id: int | None = None,
) -> tuple[ModelId, list[MatchRecord]]:
    """Play one bracket to completion; returns (champion, match records).

    Each round pairs adjacent survivors in slot order. Matches within a
    round are independent, so results do not depend on adjudication order.
    """
    survivors = list(bracket.slots)
    records: list[MatchRecord] = []
    while len(survivors) > 1:
        next_round: list[ModelId | None] = []
        for i in range(0, len(survivors), 2):
            a, b = survivors[i], survivors[i + 1]
            if a is BYE:
                next_round.append(b)
                continue
            if b is BYE:
                next_round.append(a)
                continue
            record = judge_match(
                judge,
                bracket.prompt_id,
                a,
                b,
                outputs=outputs,
                prompt_index=prompt_index,
                instruction=instruction,
                trial_id=trial_id,
            )
            records.append(record)
            next_round.append(record.winner)
        survivors = next_round
    return survivors[0], records


def run_iterated_tournaments(
    models: Iterable[ModelId],
    prompts: PromptSet,
    judge: Judge,
    seed: int,
    *,
    outputs: OutputStore | None = None,
    trial_id: int | None = None,
    threads: int = 1,
) -> MatchLedger:
    """One randomized-bracket tournament per prompt, pooled into a ledger.

    The ledger holds exactly len(prompts) * (n_models - 1) records, and each
    model appears between 1 and ceil(log2 n_models) times per prompt.
    Tournaments over distinct prompts may run concurrently; per-match RNG
    keying keeps results identical under any schedule.

    On judge failure the completed tournaments are preserved: a
    ``TournamentAborted`` carries the partial records plus the ids of the
    prompts that finished, so callers can flush a resumable partial ledger.
    """
    field = sorted(set(models))
    if len(field) < 2:
        raise DataFormatError("need at least two participants")

    def one_prompt(i: int) -> list[MatchRecord]:
        prompt = prompts[i]
        bracket = make_bracket(field, prompt.prompt_id, seed)
        _, records = run_tournament(
            bracket,
            judge,
            outputs=outputs,
            prompt_index=i,
            instruction=prompt.instruction,
            trial_id=trial_id,
        )
        return records

    settled = parallel_map_settled(one_prompt, range(len(prompts)), threads=threads)
    failures = [
        (prompts[i].prompt_id, error)
        for i, (_, error) in enumerate(settled)
        if error is not None
    ]
    if failures:
        for _, error in failures:
            if not isinstance(error, JudgeError):
                raise error
        completed = [
            (prompts[i].prompt_id, value)
            for i, (value, error) in enumerate(settled)
            if error is None
        ]
        raise TournamentAborted(
            failures=failures,
            partial_records=[r for _, recs in completed for r in recs],
            completed_prompt_ids=[pid for pid, _ in completed],
        )

    ledger = MatchLedger()
    for value, _ in settled:
        ledger.extend(value)
    return ledger
